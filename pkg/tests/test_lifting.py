from pathlib import Path

import pytest

from graphiso import isomorphic
from semlift.lifting import (
    HeapSource, LiftedGraph, LiftingConfig, LiftingError, StaticSource,
    close_axioms, evaluate_linkage, lift_class, lift_configuration,
    lift_object, render_axioms, value_term, xsd_map,
)
from semlift.ontology import (
    Atomic, ClassAssertion, ClosedEnumeration, DataPropertyDecl,
    KnowledgeBase, ObjectPropertyDecl, PropertyAssertion, SubClassOf,
    builtin_smol_ontology, check_consistency, SMOL_CLASS, SMOL_FIELD,
    SMOL_LIST, SMOL_METHOD, SMOL_NULL, SMOL_OBJECT,
)
from semlift.rdf import (
    Graph, Iri, Literal, PrefixTable, Triple, integer, parse_turtle,
    serialize_turtle, string, RDF_TYPE, XSD_INTEGER, XSD_STRING,
)
from semlift.state import ObjRef, ObjectState, RuntimeConfiguration
from semlift.syntax import build_class_table, parse_program

DATA = Path(__file__).parent / "data"
A = Iri(RDF_TYPE)

PREFIX_HEADER = """\
@prefix smol: <http://example.org/smol#> .
@prefix prog: <http://example.org/prog#> .
@prefix run: <http://example.org/run#> .
@prefix domain: <http://example.org/domain#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
"""


def load_table(name):
    return build_class_table(parse_program((DATA / name).read_text()))


def geo_conf(modified: bool) -> RuntimeConfiguration:
    ct = load_table("geo_mod.smol" if modified else "geo_nomod.smol")
    conf = RuntimeConfiguration(ct)
    conf.heap[1] = ObjectState("Shale", {
        "kerogen": 1, "thickness": 100, "depth": 0,
        "above": None, "below": ObjRef(2)})
    conf.heap[2] = ObjectState("Bedrock", {
        "thickness": 100, "depth": 100, "above": ObjRef(1), "below": None})
    conf.next_id = 3
    return conf


def expected(turtle: str) -> Graph:
    return parse_turtle(PREFIX_HEADER + turtle, PrefixTable.default())


# --- object lifting goldens --------------------------------------------------

def test_punned_object_without_modifiers():
    conf = geo_conf(modified=False)
    cfg = LiftingConfig(punning=True)
    g = render_axioms(lift_object(ObjRef(1), conf, cfg), cfg.prefixes)
    assert set(g.triples) == set(expected("""
        run:obj1 a prog:Shale;
                 prog:kerogen 1; prog:thickness 100; prog:depth 0;
                 prog:above smol:null; prog:below run:obj2.
    """).triples)


def test_punned_object_with_modifiers_and_linkage():
    conf = geo_conf(modified=True)
    cfg = LiftingConfig(punning=True)
    g = render_axioms(lift_object(ObjRef(1), conf, cfg), cfg.prefixes)
    want = expected("""
        run:obj1 a prog:Shale; smol:links domain:obj1.
        domain:obj1 domain:thickness 100; domain:depth 0;
               a domain:Stratigraphic_Layer; domain:constitutedBy [a domain:Shale];
               domain:constitutedBy [domain:contains [a domain:Kerogen]].
    """)
    assert isomorphic(g, want)
    # hidden fields surface nowhere
    assert not any("kerogen" in repr(t) or "above" in repr(t) or "below" in repr(t)
                   for t in g)


def test_fallback_linkage_clause_without_kerogen():
    conf = geo_conf(modified=True)
    conf.heap[1].fields["kerogen"] = 0
    cfg = LiftingConfig(punning=True)
    g = render_axioms(lift_object(ObjRef(1), conf, cfg), cfg.prefixes)
    want = expected("""
        run:obj1 a prog:Shale; smol:links domain:obj1.
        domain:obj1 domain:thickness 100; domain:depth 0;
               a domain:Stratigraphic_Layer; domain:constitutedBy [a domain:Shale].
    """)
    assert isomorphic(g, want)


def test_reified_object_entries():
    conf = geo_conf(modified=False)
    cfg = LiftingConfig(punning=False)
    g = render_axioms(lift_object(ObjRef(2), conf, cfg), cfg.prefixes)
    want = expected("""
        run:obj2 a smol:Object; smol:implements prog:Bedrock;
                 smol:hasEntry run:obj2_thickness, run:obj2_depth,
                               run:obj2_above, run:obj2_below.
        run:obj2_thickness a smol:MemoryEntry; smol:entryOf prog:thickness;
                           smol:hasValue 100.
        run:obj2_depth a smol:MemoryEntry; smol:entryOf prog:depth;
                       smol:hasValue 100.
        run:obj2_above a smol:MemoryEntry; smol:entryOf prog:above;
                       smol:hasPointer run:obj1.
        run:obj2_below a smol:MemoryEntry; smol:entryOf prog:below;
                       smol:hasPointer smol:null.
    """)
    assert set(g.triples) == set(want.triples)


def test_reified_punned_bijection():
    conf = geo_conf(modified=False)
    punned = render_axioms(lift_object(ObjRef(1), conf, LiftingConfig(punning=True)),
                           PrefixTable.default())
    reified = render_axioms(lift_object(ObjRef(1), conf, LiftingConfig(punning=False)),
                            PrefixTable.default())
    prog_ns = "http://example.org/prog#"
    direct = {(t.p.value[len(prog_ns):], t.o) for t in punned
              if t.p.value.startswith(prog_ns)}
    chains = set()
    by_subject = {}
    for t in reified:
        by_subject.setdefault(t.s, []).append(t)
    for t in reified:
        if t.p.value.endswith("#entryOf"):
            field = t.o.value[len(prog_ns):]
            for u in by_subject[t.s]:
                if u.p.value.endswith("#hasValue") or u.p.value.endswith("#hasPointer"):
                    chains.add((field, u.o))
    assert direct == chains and len(direct) == 5


def test_all_hidden_fields_lift_to_type_only():
    p = parse_program("class Safe(hidden Int secret, hidden String code) end main skip; end")
    ct = build_class_table(p)
    conf = RuntimeConfiguration(ct)
    conf.heap[0] = ObjectState("Safe", {"secret": 1, "code": "x"})
    punned = lift_object(ObjRef(0), conf, LiftingConfig(punning=True))
    assert punned == [ClassAssertion(Atomic(Iri("http://example.org/prog#Safe")),
                                     Iri("http://example.org/run#obj0"))]
    reified = render_axioms(lift_object(ObjRef(0), conf, LiftingConfig(punning=False)),
                            PrefixTable.default())
    assert set(reified.triples) == set(expected(
        "run:obj0 a smol:Object; smol:implements prog:Safe.").triples)


# --- class lifting -----------------------------------------------------------

def test_lift_class_structure():
    ct = load_table("geo_nomod.smol")
    cfg = LiftingConfig(punning=False)
    g = render_axioms(lift_class("Shale", ct, cfg), cfg.prefixes)
    want = expected("""
        prog:Shale a smol:Class; smol:hasName "Shale";
                   smol:subClass prog:GeoLayer;
                   smol:hasMethod prog:update, prog:canPropagate, prog:migrate, prog:cook;
                   smol:hasField prog:thickness, prog:depth, prog:above, prog:below,
                                 prog:kerogen.
        prog:update a smol:Method; smol:hasName "update".
        prog:canPropagate a smol:Method; smol:hasName "canPropagate".
        prog:migrate a smol:Method; smol:hasName "migrate".
        prog:cook a smol:Method; smol:hasName "cook".
        prog:thickness a smol:Field; smol:hasName "thickness".
        prog:depth a smol:Field; smol:hasName "depth".
        prog:above a smol:Field; smol:hasName "above".
        prog:below a smol:Field; smol:hasName "below".
        prog:kerogen a smol:Field; smol:hasName "kerogen".
    """)
    assert set(g.triples) == set(want.triples)


def test_lift_class_punning_declarations():
    ct = load_table("street.smol")
    cfg = LiftingConfig(punning=True)
    axioms = lift_class("Building", ct, cfg)
    prog = cfg.prog
    assert SubClassOf not in {type(a) for a in axioms}  # no superclass
    assert ClassAssertion(Atomic(Iri("http://www.w3.org/2002/07/owl#Class")),
                          prog("Building")) in axioms
    data = [a for a in axioms if isinstance(a, DataPropertyDecl)]
    assert len(data) == 1 and data[0].iri == prog("size")
    assert data[0].range.datatype == XSD_INTEGER
    objs = {a.iri: a for a in axioms if isinstance(a, ObjectPropertyDecl)}
    assert objs[prog("rooms")].range == SMOL_LIST
    assert objs[prog("street")].range == prog("Street")
    assert all(a.domain == prog("Building") for a in objs.values())


def test_lift_class_subclass_axiom_under_punning():
    ct = load_table("geo_nomod.smol")
    cfg = LiftingConfig(punning=True)
    axioms = lift_class("Shale", ct, cfg)
    assert SubClassOf(Atomic(cfg.prog("Shale")), Atomic(cfg.prog("GeoLayer"))) in axioms


def test_modified_fields_excluded_from_class_lifting():
    ct = load_table("geo_mod.smol")
    cfg = LiftingConfig(punning=True)
    g = render_axioms(lift_class("Shale", ct, cfg), cfg.prefixes)
    text = serialize_turtle(g)
    for hidden in ("kerogen", "above", "below", "thickness", "depth"):
        assert hidden not in text
    assert "hasMethod" in text


def test_method_and_field_free_class_lifts_to_three_facts():
    ct = build_class_table(parse_program("class Empty() end main skip; end"))
    axioms = lift_class("Empty", ct, LiftingConfig(punning=False))
    assert len(axioms) == 3


# --- linkage evaluation ------------------------------------------------------

def house_conf(size: int) -> RuntimeConfiguration:
    p = parse_program(
        'class Building(Int size)\n'
        '  links(this.size >= 100) "a domain:BigHouse; domain:hasSize %size.";\n'
        '  links "a domain:SmallHouse; domain:hasSize %size.";\n'
        "end\n"
        "main skip; end")
    ct = build_class_table(p)
    conf = RuntimeConfiguration(ct)
    conf.heap[1] = ObjectState("Building", {"size": size})
    conf.next_id = 2
    return conf


def test_linkage_guard_selection_and_substitution():
    conf = house_conf(20)
    cfg = LiftingConfig()
    linkage = conf.class_table.info("Building").linkage
    axioms = evaluate_linkage(linkage, ObjRef(1), conf, cfg)
    user = cfg.user_obj(1)
    assert ClassAssertion(Atomic(cfg.domain_prop("SmallHouse")), user) in axioms
    assert PropertyAssertion(user, cfg.domain_prop("hasSize"), integer(20)) in axioms

    big = house_conf(150)
    axioms = evaluate_linkage(linkage, ObjRef(1), big, cfg)
    assert ClassAssertion(Atomic(cfg.domain_prop("BigHouse")), user) in axioms


def test_object_linkage_overrides_class_linkage():
    conf = house_conf(20)
    override = parse_program(
        'class C() links "a domain:Special."; end main skip; end'
    ).classes[0].linkage
    conf.heap[1].linkage = override
    cfg = LiftingConfig()
    g = render_axioms(lift_object(ObjRef(1), conf, cfg), cfg.prefixes)
    text = serialize_turtle(g)
    assert "Special" in text and "SmallHouse" not in text


def test_linkage_unknown_field_reference():
    conf = house_conf(20)
    bad = parse_program(
        'class C() links "domain:p %missing."; end main skip; end'
    ).classes[0].linkage
    conf.heap[1].linkage = bad
    with pytest.raises(LiftingError):
        lift_object(ObjRef(1), conf, LiftingConfig())


def test_linkage_guard_null_dereference_is_runtime_error():
    p = parse_program(
        'class C(C other, Int x) links(this.other.x > 0) "a domain:T."; links "a domain:F."; end\n'
        "main skip; end")
    ct = build_class_table(p)
    conf = RuntimeConfiguration(ct)
    conf.heap[0] = ObjectState("C", {"other": None, "x": 1})
    with pytest.raises(LiftingError):
        lift_object(ObjRef(0), conf, LiftingConfig())


def test_linkage_blank_nodes_fresh_per_object():
    ct = load_table("geo_mod.smol")
    conf = RuntimeConfiguration(ct)
    for n in (1, 2):
        conf.heap[n] = ObjectState("Shale", {
            "kerogen": 1, "thickness": 10, "depth": 0, "above": None, "below": None})
    cfg = LiftingConfig()
    lifted = lift_configuration(conf, cfg)
    blanks = {t.s.label for t in lifted.user_layer
              if type(t.s).__name__ == "BlankNode"}
    assert any(b.startswith("l1_") for b in blanks)
    assert any(b.startswith("l2_") for b in blanks)
    assert len(blanks) == 6  # three anonymous witnesses per object


# --- close axioms ------------------------------------------------------------

def test_close_axioms_initial_configuration():
    ct = load_table("street.smol")
    conf = RuntimeConfiguration(ct)
    conf.allocate("Entry", {})
    cfg = LiftingConfig()
    close = {ax.concept: ax for ax in close_axioms(conf, cfg)}
    objects = close[SMOL_OBJECT].individuals
    assert objects == frozenset({cfg.run_obj(0)})
    classes = close[SMOL_CLASS].individuals
    for name in ("Room", "Building", "Street", "Entry"):
        assert cfg.prog(name) in classes
    assert SMOL_LIST in classes
    assert cfg.prog("content") in close[SMOL_FIELD].individuals
    assert cfg.prog("addRoom") in close[SMOL_METHOD].individuals


def test_close_axioms_object_count_grows_with_news():
    ct = load_table("street.smol")
    conf = RuntimeConfiguration(ct)
    conf.allocate("Entry", {})
    for _ in range(3):
        conf.allocate("Room", {"size": 1})
    close = close_axioms(conf, LiftingConfig())
    objects = next(ax for ax in close if ax.concept == SMOL_OBJECT)
    assert len(objects.individuals) == 4


# --- full configuration lifting ---------------------------------------------

def test_lift_configuration_layers_and_determinism():
    conf = geo_conf(modified=True)
    cfg = LiftingConfig(punning=True)
    lifted = lift_configuration(conf, cfg)
    run_ns = "http://example.org/run#"
    prog_ns = "http://example.org/prog#"
    assert all(t.s.value.startswith(run_ns) for t in lifted.run_layer)
    assert all(t.s.value.startswith(prog_ns) for t in lifted.prog_layer)
    assert all(not isinstance(t.s, Iri) or not t.s.value.startswith(run_ns)
               for t in lifted.user_layer)
    again = lift_configuration(conf, cfg)
    assert serialize_turtle(lifted.graph) == serialize_turtle(again.graph)
    assert len(lifted.graph) == (len(lifted.smol_layer) + len(lifted.prog_layer)
                                 + len(lifted.run_layer) + len(lifted.user_layer))


def test_lift_configuration_includes_domain_data():
    conf = geo_conf(modified=False)
    extra = parse_turtle("@prefix domain: <http://example.org/domain#> .\n"
                         "domain:well a domain:Site .", PrefixTable.default())
    lifted = lift_configuration(conf, LiftingConfig(), domain_graph=extra)
    assert Triple(Iri("http://example.org/domain#well"), A,
                  Iri("http://example.org/domain#Site")) in lifted.graph


def test_lifted_configuration_is_consistent_both_modes():
    for modified in (False, True):
        for punning in (False, True):
            conf = geo_conf(modified)
            cfg = LiftingConfig(punning=punning)
            lifted = lift_configuration(conf, cfg)
            kb = KnowledgeBase(builtin_smol_ontology() + lifted.axioms, lifted.graph)
            report = check_consistency(kb)
            assert report.ok, (modified, punning, report.violations)


# --- xsd mapping -------------------------------------------------------------

def test_xsd_map_and_value_terms():
    assert xsd_map("Int") == Iri(XSD_INTEGER)
    assert xsd_map("Unit") == Iri(XSD_STRING)
    cfg = LiftingConfig()
    assert value_term(100, cfg) == integer(100)
    assert value_term(True, cfg) == Literal("true", "http://www.w3.org/2001/XMLSchema#boolean")
    assert value_term(None, cfg) == SMOL_NULL
    assert value_term(ObjRef(4), cfg) == cfg.run_obj(4)
    with pytest.raises(LiftingError):
        xsd_map("Complex")


# --- virtual sources ---------------------------------------------------------

def big_conf(n_layers: int = 12) -> RuntimeConfiguration:
    ct = load_table("geo_mod.smol")
    conf = RuntimeConfiguration(ct)
    conf.allocate("Entry", {})
    prev = None
    for i in range(n_layers):
        cls = "Shale" if i % 3 else "Bedrock"
        fields = {"thickness": 10 * i, "depth": 100 * i,
                  "above": None, "below": prev}
        if cls == "Shale":
            fields["kerogen"] = i % 3
        prev = conf.allocate(cls, fields)
    return conf


@pytest.mark.parametrize("punning", [True, False])
def test_virtual_source_matches_materialized(punning):
    conf = big_conf()
    cfg = LiftingConfig(punning=punning)
    lifted = lift_configuration(conf, cfg)
    materialized = lifted.run_layer.union(lifted.user_layer)
    source = HeapSource(conf, cfg)
    run, domain_ns = cfg.run_obj(3), cfg.domain_prop("depth")
    patterns = [
        (None, None, None),
        (run, None, None),
        (None, A, cfg.prog("Shale")),
        (None, Iri("http://example.org/smol#links"), None),
        (None, domain_ns, None),
        (None, Iri("http://example.org/smol#implements"), cfg.prog("Shale")),
        (None, Iri("http://example.org/smol#hasEntry"), None),
        (None, cfg.prog("thickness"), None),
        (cfg.user_obj(4), None, None),
        (None, A, cfg.domain_prop("Stratigraphic_Layer")),
        (None, cfg.prog("missing"), None),
        (None, Iri("http://other.org/p"), None),
    ]
    for s, p, o in patterns:
        assert sorted(source.find(s, p, o), key=repr) == \
            sorted(materialized.find(s, p, o), key=repr), (s, p, o)


def test_virtual_source_guards_prune_traversal():
    conf = big_conf(20)
    cfg = LiftingConfig(punning=True)
    source = HeapSource(conf, cfg)
    source.find(None, Iri("http://other.org/unrelated"), None)
    assert source.visits == 0
    source.find(cfg.run_obj(5), None, None)
    assert source.visits == 1
    before = source.visits
    source.find(None, A, cfg.prog("Bedrock"))
    bedrocks = sum(1 for ob in conf.heap.values() if ob.class_name == "Bedrock")
    assert source.visits - before == bedrocks < len(conf.heap)


def test_reified_implements_guard():
    conf = big_conf(15)
    cfg = LiftingConfig(punning=False)
    source = HeapSource(conf, cfg)
    shales = sum(1 for ob in conf.heap.values() if ob.class_name == "Shale")
    found = source.find(None, Iri("http://example.org/smol#implements"),
                        cfg.prog("Shale"))
    assert len(found) == shales
    assert source.visits == shales


def test_static_source_covers_class_table():
    ct = load_table("street.smol")
    cfg = LiftingConfig(punning=True)
    source = StaticSource(ct, cfg)
    hits = source.find(cfg.prog("Building"), None, None)
    assert any(t.o == SMOL_CLASS for t in hits if t.p == A)
    assert any(t.p == Iri("http://example.org/smol#hasField") for t in hits)
    null_hits = source.find(SMOL_NULL, None, None)
    assert any(t.o == SMOL_OBJECT for t in null_hits)
