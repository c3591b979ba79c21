from pathlib import Path
from random import Random

import pytest

from semlift.interpreter import (
    Interpreter, SmolRuntimeError, eval_expr, init, listify, run, step,
    typecheck_configuration,
)
from semlift.lifting import LiftingConfig, lift_configuration
from semlift.ontology import (
    KnowledgeBase, builtin_smol_ontology, check_consistency,
    parse_manchester_subset, SMOL_NULL,
)
from semlift.rdf import (
    BlankNode, Graph, Iri, PrefixTable, integer, serialize_turtle, string,
)
from semlift.state import (
    ObjRef, ObjectState, Process, RuntimeConfiguration, WaitingStmt,
)
from semlift.syntax import (
    BinOp, FieldAccess, IntLit, NullLit, This, VarRef, build_class_table,
    parse_program, ClassType, INT,
)
from semlift.typecheck import build_hierarchy, typecheck_program

DATA = Path(__file__).parent / "data"
RUN_NS = PrefixTable.default().mapping["run"]


def load(name):
    return parse_program((DATA / name).read_text())


def run_program(src, **kw):
    """Run a source string to completion, recording every variable binding
    the top process ever held (stores vanish when processes pop)."""
    conf = init(parse_program(src))
    seen = {}

    def probe(c):
        if c.processes:
            seen.update(c.processes[-1].store)

    res = run(conf, on_step=probe, **kw)
    return conf, res, seen


def chase(conf, head):
    out = []
    while head is not None:
        cell = conf.heap[head.n]
        out.append(cell.fields["content"])
        head = cell.fields["next"]
    return out


def census(conf):
    counts = {}
    for ob in conf.heap.values():
        counts[ob.class_name] = counts.get(ob.class_name, 0) + 1
    return counts


# --- initial configurations ---------------------------------------------------

def test_init_single_entry_object_and_process():
    conf = init(load("street.smol"))
    assert census(conf) == {"Entry": 1}
    assert conf.heap[0].fields == {}
    (p,) = conf.processes
    assert p.method == "entry"
    assert p.self_ref == ObjRef(0)
    assert p.store == {}


def test_init_skip_program():
    conf = init(parse_program("main skip; end"))
    assert len(conf.heap) == 1
    assert len(conf.processes) == 1


def test_init_is_well_typed():
    assert typecheck_configuration(init(load("street.smol"))) == []


# --- expression evaluation ----------------------------------------------------

def geo_pair():
    ct = build_class_table(load("geo_nomod.smol"))
    conf = RuntimeConfiguration(ct)
    conf.heap[1] = ObjectState("Shale", {
        "kerogen": 1, "thickness": 100, "depth": 0,
        "above": ObjRef(2), "below": None})
    conf.heap[2] = ObjectState("Bedrock", {
        "thickness": 100, "depth": 100, "above": None, "below": ObjRef(1)})
    conf.next_id = 3
    return conf


def test_eval_field_chain_sum():
    # depth+thickness of the layer above: 100 + 100
    conf = geo_pair()
    e = BinOp("+",
              FieldAccess(FieldAccess(This(), "above"), "depth"),
              FieldAccess(FieldAccess(This(), "above"), "thickness"))
    assert eval_expr(e, ObjRef(1), {}, conf) == 200


def test_eval_null_equality():
    conf = geo_pair()
    assert eval_expr(BinOp("==", NullLit(), NullLit()), ObjRef(1), {}, conf) is True
    assert eval_expr(BinOp("==", VarRef("x"), NullLit()),
                     ObjRef(1), {"x": ObjRef(2)}, conf) is False


def test_eval_field_on_null_is_null_dereference():
    conf = geo_pair()
    e = FieldAccess(VarRef("x"), "depth")
    with pytest.raises(SmolRuntimeError) as err:
        eval_expr(e, ObjRef(1), {"x": None}, conf)
    assert err.value.kind == "null-dereference"


def test_eval_unbound_variable():
    conf = geo_pair()
    with pytest.raises(SmolRuntimeError) as err:
        eval_expr(VarRef("nope"), ObjRef(1), {}, conf)
    assert err.value.kind == "unbound-location"


def test_eval_short_circuit_skips_right_operand():
    conf = geo_pair()
    # the right side would be an unbound-location error if evaluated
    e = BinOp("&&", BinOp("==", IntLit(1), IntLit(2)), VarRef("nope"))
    assert eval_expr(e, ObjRef(1), {}, conf) is False


def test_eval_literals_keep_their_basic_type():
    conf = geo_pair()
    assert eval_expr(BinOp("==", IntLit(1), IntLit(1)), ObjRef(1), {}, conf) is True
    # Int and Boolean never compare equal, nor Int and Double
    from semlift.syntax import BoolLit, DoubleLit
    assert eval_expr(BinOp("==", IntLit(1), BoolLit(True)),
                     ObjRef(1), {}, conf) is False
    assert eval_expr(BinOp("==", IntLit(1), DoubleLit(1.0)),
                     ObjRef(1), {}, conf) is False


def test_eval_integer_division_truncates_toward_zero():
    conf = geo_pair()
    for a, b, want in ((7, 2, 3), (-7, 2, -3), (7, -2, -3), (-7, -2, 3)):
        e = BinOp("/", IntLit(a), IntLit(b))
        assert eval_expr(e, ObjRef(1), {}, conf) == want


def test_eval_arithmetic_matches_python_oracle():
    conf = geo_pair()
    rng = Random(7)
    ops = ("+", "-", "*")

    def gen(depth):
        if depth == 0 or rng.random() < 0.3:
            return IntLit(rng.randint(-20, 20))
        return BinOp(rng.choice(ops), gen(depth - 1), gen(depth - 1))

    def oracle(e):
        if isinstance(e, IntLit):
            return e.value
        a, b = oracle(e.left), oracle(e.right)
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]

    for _ in range(200):
        e = gen(4)
        assert eval_expr(e, ObjRef(1), {}, conf) == oracle(e)


# --- listify --------------------------------------------------------------------

def listify_env():
    ct = build_class_table(load("street.smol"))
    conf = RuntimeConfiguration(ct)
    conf.allocate("Entry", {})
    conf.allocate("Room", {"size": 1})
    conf.allocate("Room", {"size": 2})
    return conf, LiftingConfig(), build_hierarchy(ct)


def test_listify_empty_is_null():
    conf, cfg, h = listify_env()
    assert listify(conf, [], cfg, h) is None


def test_listify_sorts_object_answers():
    conf, cfg, h = listify_env()
    head = listify(conf, [Iri(RUN_NS + "obj2"), Iri(RUN_NS + "obj1")], cfg, h)
    assert chase(conf, head) == [ObjRef(1), ObjRef(2)]
    # cells are allocated tail-first, so ids ascend from tail to head
    tail = conf.heap[head.n].fields["next"]
    assert head.n == tail.n + 1
    assert conf.heap[head.n].class_name == "List<Room>"


def test_listify_sorts_literals_by_value():
    conf, cfg, h = listify_env()
    head = listify(conf, [integer(30), integer(4)], cfg, h, elem_hint=INT)
    assert chase(conf, head) == [4, 30]
    assert conf.heap[head.n].class_name == "List<Int>"


def test_listify_mixed_literal_kinds_fail():
    conf, cfg, h = listify_env()
    with pytest.raises(SmolRuntimeError) as err:
        listify(conf, [integer(1), string("a")], cfg, h)
    assert err.value.kind == "listify-mixed"


def test_listify_literals_with_objects_fail():
    conf, cfg, h = listify_env()
    with pytest.raises(SmolRuntimeError) as err:
        listify(conf, [integer(1), Iri(RUN_NS + "obj1")], cfg, h)
    assert err.value.kind == "listify-mixed"


def test_listify_dead_reference_fails():
    conf, cfg, h = listify_env()
    with pytest.raises(SmolRuntimeError) as err:
        listify(conf, [Iri(RUN_NS + "obj9")], cfg, h)
    assert err.value.kind == "destroyed-access"


def test_listify_blank_node_is_not_a_domain_element():
    conf, cfg, h = listify_env()
    with pytest.raises(SmolRuntimeError) as err:
        listify(conf, [BlankNode("b0")], cfg, h)
    assert err.value.kind == "listify-mixed"


def test_listify_null_individual_becomes_null_element():
    conf, cfg, h = listify_env()
    head = listify(conf, [SMOL_NULL], cfg, h)
    assert chase(conf, head) == [None]


# --- single steps ---------------------------------------------------------------

def test_new_initializes_fields_from_arguments():
    src = """
    class GeoLayer (Int thickness, Int depth, GeoLayer above, GeoLayer below) end
    class Bedrock extends GeoLayer () end
    main
      Bedrock bed = new Bedrock(100, 100, null, null);
    end
    """
    conf = init(parse_program(src))
    out = step(conf)
    assert out.rule == "new"
    assert conf.heap[1] == ObjectState("Bedrock", {
        "thickness": 100, "depth": 100, "above": None, "below": None})
    out = step(conf)
    assert out.rule == "assign3"
    assert conf.processes[0].store["bed"] == ObjRef(1)


def test_call_pushes_waiting_process():
    conf = init(load("street.smol"))
    while True:
        out = step(conf)
        if out.rule == "call":
            break
    assert len(conf.processes) == 2
    caller, callee = conf.processes
    assert isinstance(caller.stmts[0], WaitingStmt)
    assert not isinstance(callee.stmts[0], WaitingStmt)
    assert callee.method == "addRoom"
    assert callee.store["room"] == ObjRef(1)
    # R-prs shape holds mid-call
    assert typecheck_configuration(conf) == []


def test_statement_position_call_goes_through_a_fresh_temp():
    lines = []
    conf = init(load("street.smol"))
    run(conf, trace=lines.append)
    assert any(ln.startswith("callIn entry CallStmt") for ln in lines)
    # each desugared call leaves no temp binding confusion: run terminated
    assert not conf.processes


def test_destroy_removes_object_from_heap():
    src = """
    class C () end
    main
      C c = new C();
      destroy(c);
    end
    """
    conf = init(parse_program(src))
    res = run(conf)
    assert res.status == "terminated"
    assert census(conf) == {"Entry": 1}


def test_branching_and_loops():
    src = """
    main
      Int n = 0;
      Int i = 0;
      while (i < 4) do
        if (i == 2) then
          n = n + 10;
        else
          n = n + 1;
        end
        i = i + 1;
      end
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert seen["n"] == 13
    assert seen["i"] == 4


# --- whole-program runs -----------------------------------------------------------

def test_street_run_final_state():
    conf = init(load("street.smol"))
    res = run(conf)
    assert res.status == "terminated"
    assert census(conf) == {
        "Entry": 1, "Room": 3, "Building": 2, "Street": 1,
        "List<Room>": 3, "List<Building>": 2}
    street = next(ob for ob in conf.heap.values() if ob.class_name == "Street")
    assert street.fields["name"] == "Problemveien"
    buildings = chase(conf, street.fields["buildings"])
    sizes = sorted(conf.heap[b.n].fields["size"] for b in buildings)
    assert sizes == [10, 50]
    for b in buildings:
        ob = conf.heap[b.n]
        rooms = chase(conf, ob.fields["rooms"])
        assert ob.fields["size"] == sum(conf.heap[r.n].fields["size"]
                                        for r in rooms)
        assert conf.heap[ob.fields["street"].n] is street


def test_geo_run_final_state():
    conf = init(load("geo_mod.smol"))
    res = run(conf)
    assert res.status == "terminated"
    bed = next(ob for ob in conf.heap.values() if ob.class_name == "Bedrock")
    sh = next(ob for ob in conf.heap.values() if ob.class_name == "Shale")
    assert bed.fields["above"] is not None
    assert conf.heap[bed.fields["above"].n] is sh
    # the shale sits on top: update() saw above == null
    assert sh.fields["depth"] == 0
    assert sh.fields["kerogen"] == 1


def test_skip_program_terminates_quickly():
    conf = init(parse_program("main skip; end"))
    res = run(conf)
    assert res.status == "terminated"
    assert res.steps <= 3


def test_infinite_loop_hits_step_limit():
    conf = init(parse_program("main while True do skip; end end"))
    res = run(conf, step_limit=100)
    assert res.status == "error"
    assert res.error.kind == "step-limit"
    assert res.steps == 100


def test_interpreter_wrapper():
    it = Interpreter(load("street.smol"))
    res = it.run()
    assert res.status == "terminated"
    assert len(it.conf.heap) == 12


# --- reflection ---------------------------------------------------------------------

def test_member_builds_sorted_list():
    src = """
    class E (Int v) end
    main
      E a = new E(10);
      E b = new E(20);
      List<E> es = member("<prog:E>");
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert chase(conf, seen["es"]) == [ObjRef(1), ObjRef(2)]
    assert conf.heap[seen["es"].n].class_name == "List<E>"


def test_member_works_without_punning():
    src = """
    class E (Int v) end
    main
      E a = new E(10);
      List<E> es = member("<prog:E>");
    end
    """
    conf = init(parse_program(src))
    seen = {}
    res = run(conf, cfg=LiftingConfig(punning=False),
              on_step=lambda c: seen.update(c.processes[-1].store)
              if c.processes else None)
    assert res.status == "terminated"
    assert chase(conf, seen["es"]) == [ObjRef(1)]


def test_access_returns_literal_answers():
    src = """
    class E (Int v) end
    main
      E a = new E(10);
      E b = new E(20);
      List<Int> vs = access("SELECT ?y WHERE { ?x a prog:E. ?x prog:v ?y. }");
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert chase(conf, seen["vs"]) == [10, 20]
    assert conf.heap[seen["vs"].n].class_name == "List<Int>"


def test_access_substitutes_parameters():
    src = """
    class E (Int v) end
    main
      E a = new E(10);
      E b = new E(20);
      List<E> big = access("SELECT ?x WHERE { ?x prog:v ?y. FILTER(?y > %1) }", 15);
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert chase(conf, seen["big"]) == [ObjRef(2)]


def test_access_missing_parameter_is_an_arity_error():
    src = 'main List<Int> xs = access("SELECT ?x WHERE { ?y prog:v %1. }"); end'
    conf, res, _ = run_program(src)
    assert res.status == "error"
    assert res.error.kind == "arity"


def test_constructor_arity_mismatch():
    src = """
    class E (Int v) end
    main
      E a = new E();
    end
    """
    conf, res, _ = run_program(src)
    assert res.status == "error"
    assert res.error.kind == "arity"


def test_validate_reports_conformance():
    src = """
    class E (Int v) end
    main
      E a = new E(10);
      Boolean ok = validate("prog:S a sh:NodeShape ; sh:targetClass prog:E ;
        sh:property [ sh:path prog:v ; sh:minCount 1 ] .");
      Boolean bad = validate("prog:S a sh:NodeShape ; sh:targetClass prog:E ;
        sh:property [ sh:path prog:missing ; sh:minCount 1 ] .");
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert seen["ok"] is True
    assert seen["bad"] is False


def test_query_after_destroy_is_empty():
    src = """
    class C () end
    main
      C c = new C();
      destroy(c);
      List<C> l = access("SELECT ?x WHERE { ?x a prog:C }");
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert seen["l"] is None


def test_dangling_field_read_is_destroyed_access():
    src = """
    class C (C other) end
    main
      C a = new C(null);
      C b = new C(a);
      destroy(a);
      C z = b.other;
      C w = z.other;
    end
    """
    conf, res, _ = run_program(src)
    assert res.status == "error"
    assert res.error.kind == "destroyed-access"


def test_unreferenced_objects_stay_queryable():
    # no garbage collector: dropping the last variable reference does not
    # remove the object from the lifted state
    src = """
    class C () end
    main
      C c = new C();
      c = null;
      List<C> alive = access("SELECT ?x WHERE { ?x a prog:C }");
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert chase(conf, seen["alive"]) == [ObjRef(1)]


def test_reflection_over_inconsistent_state_traps():
    # a field write that violates the declared field type makes the lifted
    # graph clash with the class-hierarchy disjointness axioms
    src = """
    class C () end
    class D (C c) end
    main
      D d = new D(null);
      d.c = d;
      List<Object> l = access("SELECT ?x WHERE { ?x a prog:D }");
    end
    """
    p = parse_program(src)
    assert [e.kind for e in typecheck_program(p)] == ["assignment"]
    res = run(init(p))
    assert res.status == "error"
    assert res.error.kind == "inconsistent-kb"


def test_validate_is_not_consistency_gated():
    # conformance checking stays defined on inconsistent states
    src = """
    class C () end
    class D (C c) end
    main
      D d = new D(null);
      d.c = d;
      Boolean ok = validate("prog:S a sh:NodeShape ; sh:targetClass prog:D ;
        sh:property [ sh:path prog:c ; sh:minCount 1 ] .");
    end
    """
    conf, res, seen = run_program(src)
    assert res.status == "terminated"
    assert seen["ok"] is True


def test_malformed_reflection_payloads_are_stuck():
    for rhs in ('access("SELECT ?x ?y WHERE { ?x prog:v ?y }")',
                'access("not sparql at all")',
                'member("<prog:E> and and")',
                'validate("prog:S a sh:NodeShape ; sh:or prog:T .")'):
        src = 'class E (Int v) end main List<E> l = %s; end' % rhs \
            if not rhs.startswith(("validate", "access(\"SELECT ?x ?y")) \
            else 'class E (Int v) end main Boolean l = %s; end' % rhs
        conf, res, _ = run_program(src)
        assert res.status == "error", rhs
        assert res.error.kind == "stuck", rhs


# --- traces and determinism ---------------------------------------------------------

KNOWN_RULES = {
    "new", "cons", "call", "callIn", "return", "skip", "iftrue", "iffalse",
    "loop1", "loop2", "assign1", "assign2", "assign3", "destroy",
    "validate", "member", "access",
}


def test_trace_names_rules_and_matches_step_count():
    lines = []
    conf = init(load("street.smol"))
    res = run(conf, trace=lines.append)
    assert len(lines) == res.steps
    assert lines[0] == "new entry VarDeclStmt"
    assert {ln.split()[0] for ln in lines} <= KNOWN_RULES


def test_runs_are_deterministic():
    def one():
        lines = []
        conf = init(load("street.smol"))
        run(conf, trace=lines.append)
        lifted = lift_configuration(conf, LiftingConfig())
        return lines, serialize_turtle(lifted.graph)

    t1, g1 = one()
    t2, g2 = one()
    assert t1 == t2
    assert g1 == g2


# --- subject reduction and runtime consistency ----------------------------------------

CORPUS = ("street.smol", "geo_mod.smol", "geo_nomod.smol")


def domain_axioms(name):
    if "geo" in name:
        return parse_manchester_subset((DATA / "geo.mos").read_text())
    return []


@pytest.mark.parametrize("name", CORPUS)
def test_subject_reduction(name):
    p = load(name)
    dom = domain_axioms(name)
    assert typecheck_program(p, dom) == []
    conf = init(p)
    assert typecheck_configuration(conf, dom) == []
    violations = []

    def probe(c):
        errs = typecheck_configuration(c, dom)
        if errs:
            violations.append(errs)

    res = run(conf, on_step=probe)
    assert res.status == "terminated"
    assert violations == []


@pytest.mark.parametrize("name", CORPUS)
def test_every_step_lifts_to_a_consistent_graph(name):
    p = load(name)
    dom = domain_axioms(name)
    conf = init(p)
    bad = []

    def probe(c):
        lifted = lift_configuration(c, LiftingConfig())
        kb = KnowledgeBase(builtin_smol_ontology() + lifted.axioms + list(dom),
                           lifted.graph)
        report = check_consistency(kb)
        if not report.ok:
            bad.append(report.violations)

    res = run(conf, on_step=probe)
    assert res.status == "terminated"
    assert bad == []


# --- typing runtime configurations ----------------------------------------------------

def test_config_with_missing_field_rejected():
    ct = build_class_table(load("street.smol"))
    conf = RuntimeConfiguration(ct)
    conf.allocate("Room", {})
    errs = typecheck_configuration(conf)
    assert [e.kind for e in errs] == ["object-store"]
    assert errs[0].location == "obj0"


def test_config_with_wrong_value_type_rejected():
    ct = build_class_table(load("street.smol"))
    conf = RuntimeConfiguration(ct)
    conf.allocate("Room", {"size": "ten"})
    errs = typecheck_configuration(conf)
    assert [e.kind for e in errs] == ["object-store"]


def test_config_with_dangling_field_rejected():
    ct = build_class_table(load("street.smol"))
    conf = RuntimeConfiguration(ct)
    conf.allocate("Building", {"rooms": None, "size": 0, "street": ObjRef(9)})
    errs = typecheck_configuration(conf)
    assert [e.kind for e in errs] == ["object-store"]
    assert "dangling" in errs[0].message


def test_config_null_fields_are_fine():
    ct = build_class_table(load("street.smol"))
    conf = RuntimeConfiguration(ct)
    conf.allocate("Building", {"rooms": None, "size": 0, "street": None})
    assert typecheck_configuration(conf) == []


def test_top_process_may_not_wait():
    src = "class C () Unit go() skip; end end main skip; end"
    conf = init(parse_program(src))
    conf.processes[0].stmts.insert(0, WaitingStmt(conf.processes[0].stmts[0]))
    errs = typecheck_configuration(conf)
    assert any(e.kind == "process-stack" for e in errs)


def test_lower_process_must_wait():
    conf = init(load("street.smol"))
    entry = conf.processes[0]
    conf.processes.append(Process("entry", entry.self_ref, list(entry.stmts)))
    errs = typecheck_configuration(conf)
    assert any(e.kind == "process-stack" and "not waiting" in e.message
               for e in errs)


def test_undeclared_class_in_heap_rejected():
    ct = build_class_table(load("street.smol"))
    conf = RuntimeConfiguration(ct)
    conf.allocate("Ghost", {})
    errs = typecheck_configuration(conf)
    assert [e.kind for e in errs] == ["object-store"]
    assert "undeclared" in errs[0].message
