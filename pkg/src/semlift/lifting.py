"""The direct mapping from runtime configurations to knowledge graphs.

Classes lift to smol:Class individuals (plus OWL declarations under punning),
objects lift either to direct prog:f edges (punning) or to MemoryEntry chains
(reified). Hidden fields never surface; domain fields move to the linked
domain node, which also carries the axioms of the object's links clause.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .ontology import (
    Atomic, Axiom, ClassAssertion, ClosedEnumeration, DataPropertyDecl,
    DataRange, DisjointClasses, ObjectPropertyDecl, PropertyAssertion, SubClassOf,
    builtin_smol_ontology, SMOL_ANY, SMOL_CLASS, SMOL_ENTRY_OF, SMOL_FIELD,
    SMOL_HAS_ENTRY, SMOL_HAS_FIELD, SMOL_HAS_METHOD, SMOL_HAS_NAME,
    SMOL_HAS_POINTER, SMOL_HAS_VALUE, SMOL_IMPLEMENTS, SMOL_LINKS, SMOL_LIST,
    SMOL_MEMORY_ENTRY, SMOL_METHOD, SMOL_NULL, SMOL_OBJECT, SMOL_SUBCLASS,
    SMOL_UNIT, OWL_CLASS,
)
from .rdf import (
    BlankNode, Graph, Iri, Literal, PrefixTable, Term, Triple, boolean,
    double, integer, parse_turtle, string, OWL_NS, RDF_TYPE, TurtleSyntaxError,
    XSD_BOOLEAN, XSD_DOUBLE, XSD_INTEGER, XSD_STRING,
)
from .sparql import VirtualSource
from .state import ObjRef, ObjectState, RuntimeConfiguration, UnitValue, Value
from .syntax import (
    BasicType, ClassTable, ClassType, FieldDecl, Linkage, ListType, Type,
)

RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
RDF_TYPE_IRI = Iri(RDF_TYPE)
RDFS_DOMAIN = Iri(RDFS_NS + "domain")
RDFS_RANGE = Iri(RDFS_NS + "range")
OWL_SUBCLASSOF_IRI = Iri(OWL_NS + "subClassOf")
OWL_OBJECT_PROPERTY = Iri(OWL_NS + "ObjectProperty")
OWL_DATATYPE_PROPERTY = Iri(OWL_NS + "DatatypeProperty")

UNIT_SENTINEL = Literal("unit", XSD_STRING)


class LiftingError(Exception):
    pass


@dataclass
class LiftingConfig:
    punning: bool = True
    prefixes: PrefixTable = dc_field(default_factory=PrefixTable.default)

    def prog(self, name: str) -> Iri:
        return Iri(self.prefixes.mapping["prog"] + name)

    def run_obj(self, n: int) -> Iri:
        return Iri(self.prefixes.mapping["run"] + "obj%d" % n)

    def run_entry(self, n: int, field_name: str) -> Iri:
        return Iri(self.prefixes.mapping["run"] + "obj%d_%s" % (n, field_name))

    def user_obj(self, n: int) -> Iri:
        return Iri(self.prefixes.mapping["domain"] + "obj%d" % n)

    def user_entry(self, n: int, field_name: str) -> Iri:
        return Iri(self.prefixes.mapping["domain"] + "obj%d_%s" % (n, field_name))

    def domain_prop(self, name: str) -> Iri:
        return Iri(self.prefixes.mapping["domain"] + name)


def xsd_map(t) -> Iri:
    """The xsd datatype for a basic type (by name or BasicType)."""
    name = t.name if isinstance(t, BasicType) else t
    try:
        return {
            "Int": Iri(XSD_INTEGER),
            "Boolean": Iri(XSD_BOOLEAN),
            "String": Iri(XSD_STRING),
            "Double": Iri(XSD_DOUBLE),
            "Unit": Iri(XSD_STRING),  # no xsd equivalent; string sentinel
        }[name]
    except KeyError:
        raise LiftingError("no xsd mapping for type %s" % name)


def value_literal(v: Value) -> Literal:
    if isinstance(v, bool):
        return boolean(v)
    if isinstance(v, int):
        return integer(v)
    if isinstance(v, float):
        return double(v)
    if isinstance(v, str):
        return string(v)
    if isinstance(v, UnitValue):
        return UNIT_SENTINEL
    raise LiftingError("value %r has no literal form" % (v,))


def value_term(v: Value, cfg: LiftingConfig) -> Term:
    if v is None:
        return SMOL_NULL
    if isinstance(v, ObjRef):
        return cfg.run_obj(v.n)
    return value_literal(v)


# ---------------------------------------------------------------------------
# Class lifting
# ---------------------------------------------------------------------------


def lift_class(name: str, ct: ClassTable, cfg: LiftingConfig) -> List[Axiom]:
    info = ct.info(name)
    if info.list_elem is not None:
        return []  # materialized list classes share the builtin smol:List
    c = cfg.prog(name)
    axioms: List[Axiom] = [
        ClassAssertion(Atomic(SMOL_CLASS), c),
        PropertyAssertion(c, SMOL_HAS_NAME, string(name)),
        PropertyAssertion(c, SMOL_SUBCLASS,
                          cfg.prog(info.superclass) if info.superclass else SMOL_ANY),
    ]
    for mname in sorted(info.methods):
        m = cfg.prog(mname)
        axioms += [
            PropertyAssertion(c, SMOL_HAS_METHOD, m),
            ClassAssertion(Atomic(SMOL_METHOD), m),
            PropertyAssertion(m, SMOL_HAS_NAME, string(mname)),
        ]
    for f in info.fields:
        if f.modifier:
            continue  # hidden fields never lift; domain fields live on the linked node
        fi = cfg.prog(f.name)
        axioms += [
            PropertyAssertion(c, SMOL_HAS_FIELD, fi),
            ClassAssertion(Atomic(SMOL_FIELD), fi),
            PropertyAssertion(fi, SMOL_HAS_NAME, string(f.name)),
        ]
    if cfg.punning:
        axioms.append(ClassAssertion(Atomic(OWL_CLASS), c))
        if info.superclass:
            axioms.append(SubClassOf(Atomic(c), Atomic(cfg.prog(info.superclass))))
        # property declarations come from the class that introduces the
        # field; re-declaring them per subclass would intersect the domains
        for f in info.own_fields:
            if f.modifier:
                continue
            fi = cfg.prog(f.name)
            if isinstance(f.type, BasicType):
                axioms.append(DataPropertyDecl(fi, c, DataRange(xsd_map(f.type).value)))
            elif isinstance(f.type, ListType):
                axioms.append(ObjectPropertyDecl(fi, c, SMOL_LIST))
            else:
                axioms.append(ObjectPropertyDecl(fi, c, cfg.prog(f.type.name)))
    return axioms


def lift_list_vocabulary(ct: ClassTable, cfg: LiftingConfig) -> List[Axiom]:
    """Field individuals for the builtin smol:List class, emitted once when
    any list type is in use. Punned property declarations are omitted since
    content/next ranges vary per element type."""
    if not any(info.list_elem is not None for info in ct.classes.values()):
        return []
    axioms: List[Axiom] = []
    for fname in ("content", "next"):
        fi = cfg.prog(fname)
        axioms += [
            PropertyAssertion(SMOL_LIST, SMOL_HAS_FIELD, fi),
            ClassAssertion(Atomic(SMOL_FIELD), fi),
            PropertyAssertion(fi, SMOL_HAS_NAME, string(fname)),
        ]
    return axioms


def class_disjointness(ct: ClassTable, cfg: LiftingConfig) -> List[Axiom]:
    """Pairwise disjointness between classes not related by inheritance.

    Every object belongs to exactly one declared class plus its ancestor
    chain, so two classes neither of which extends the other can never
    share an instance. Materialized list classes are excluded: their
    cells are typed smol:List.
    """
    names = sorted(n for n, info in ct.classes.items() if info.list_elem is None)
    ancestors: Dict[str, Set[str]] = {}
    for n in names:
        chain = {n}
        cur = ct.classes[n].superclass
        while cur and cur not in chain:
            chain.add(cur)
            cur = ct.classes[cur].superclass
        ancestors[n] = chain
    axioms: List[Axiom] = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if b in ancestors[a] or a in ancestors[b]:
                continue
            axioms.append(DisjointClasses((cfg.prog(a), cfg.prog(b))))
    return axioms


# ---------------------------------------------------------------------------
# Linkage evaluation
# ---------------------------------------------------------------------------

_FIELD_REF = re.compile(r"%([A-Za-z_][A-Za-z0-9_]*)")


def eval_guard(expr, this: ObjectState, conf: RuntimeConfiguration) -> Value:
    """Evaluate a side-effect-free guard over this-fields (no variables,
    no calls)."""
    from . import syntax as s

    def ev(e) -> Value:
        if isinstance(e, s.IntLit):
            return e.value
        if isinstance(e, s.DoubleLit):
            return e.value
        if isinstance(e, s.BoolLit):
            return e.value
        if isinstance(e, s.StringLit):
            return e.value
        if isinstance(e, s.NullLit):
            return None
        if isinstance(e, s.UnitLit):
            from .state import UNIT_VALUE
            return UNIT_VALUE
        if isinstance(e, s.This):
            return this
        if isinstance(e, s.FieldAccess):
            target = ev(e.target)
            if isinstance(target, ObjectState):
                return target.fields[e.field]
            if isinstance(target, ObjRef):
                return conf.object(target).fields[e.field]
            raise LiftingError("guard dereferences a non-object value")
        if isinstance(e, s.Not):
            v = ev(e.expr)
            if not isinstance(v, bool):
                raise LiftingError("guard negation of a non-boolean")
            return not v
        if isinstance(e, s.BinOp):
            return _guard_binop(e.op, ev(e.left), ev(e.right))
        raise LiftingError("unsupported expression in linkage guard")

    return ev(expr)


def _guard_binop(op: str, left: Value, right: Value) -> Value:
    if op in ("&&", "||"):
        if not isinstance(left, bool) or not isinstance(right, bool):
            raise LiftingError("boolean operator on non-boolean guard values")
        return (left and right) if op == "&&" else (left or right)
    if op in ("==", "!="):
        eq = left == right and type(left) == type(right) if left is not None \
            and right is not None else left is right
        return eq if op == "==" else not eq
    if op in ("<", "<=", ">", ">="):
        if not (isinstance(left, (int, float)) and isinstance(right, (int, float))) \
                or isinstance(left, bool) or isinstance(right, bool):
            raise LiftingError("comparison on non-numeric guard values")
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[op]
    if op in ("+", "-", "*", "/"):
        if isinstance(left, bool) or isinstance(right, bool) or \
                not isinstance(left, (int, float)) or not isinstance(right, (int, float)):
            raise LiftingError("arithmetic on non-numeric guard values")
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if right == 0:
            raise LiftingError("division by zero in guard")
        return left // right if isinstance(left, int) and isinstance(right, int) \
            else left / right
    raise LiftingError("unknown operator %s" % op)


def turtle_token(v: Value, cfg: LiftingConfig) -> str:
    if v is None:
        return "<%s>" % SMOL_NULL.value
    if isinstance(v, ObjRef):
        return "<%s>" % cfg.run_obj(v.n).value
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"%s"' % v.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(v, UnitValue):
        return '"unit"'
    raise LiftingError("no turtle form for %r" % (v,))


def _substitute_fields(text: str, ob: ObjectState, cfg: LiftingConfig) -> str:
    def repl(m):
        name = m.group(1)
        if name not in ob.fields:
            raise LiftingError("linkage refers to unknown field %%%s" % name)
        return turtle_token(ob.fields[name], cfg)

    return _FIELD_REF.sub(repl, text)


def select_linkage_clause(linkage: Linkage, ob: ObjectState,
                          conf: RuntimeConfiguration):
    for clause in linkage.clauses:
        if clause.guard is None:
            return clause
        v = eval_guard(clause.guard, ob, conf)
        if not isinstance(v, bool):
            raise LiftingError("linkage guard is not boolean")
        if v:
            return clause
    raise LiftingError("no linkage clause selected")  # unreachable: last is unguarded


def evaluate_linkage(linkage: Linkage, ref: ObjRef, conf: RuntimeConfiguration,
                     cfg: LiftingConfig) -> List[Axiom]:
    """Axioms of the first true clause, with %f references substituted and
    the subject hole filled by the linked node's IRI."""
    ob = conf.object(ref)
    clause = select_linkage_clause(linkage, ob, conf)
    text = _substitute_fields(clause.text, ob, cfg).strip()
    if not text.endswith("."):
        text += " ."
    subject = cfg.user_obj(ref.n)
    doc = "<%s> %s" % (subject.value, text)
    try:
        g = parse_turtle(doc, cfg.prefixes)
    except TurtleSyntaxError as e:
        raise LiftingError("linkage text does not parse: %s" % e)
    axioms: List[Axiom] = []
    relabel: Dict[str, BlankNode] = {}

    def fix(t: Term) -> Term:
        if isinstance(t, BlankNode):
            if t.label not in relabel:
                relabel[t.label] = BlankNode("l%d_%d" % (ref.n, len(relabel)))
            return relabel[t.label]
        return t

    for t in sorted(g, key=repr):
        s, o = fix(t.s), fix(t.o)
        if t.p == RDF_TYPE_IRI and isinstance(o, Iri):
            axioms.append(ClassAssertion(Atomic(o), s))
        else:
            axioms.append(PropertyAssertion(s, t.p, o))
    return axioms


# ---------------------------------------------------------------------------
# Object lifting
# ---------------------------------------------------------------------------


def object_linkage(ob: ObjectState, ct: ClassTable) -> Optional[Linkage]:
    if ob.linkage is not None:
        return ob.linkage
    return ct.info(ob.class_name).linkage


def has_user_node(ob: ObjectState, ct: ClassTable) -> bool:
    info = ct.info(ob.class_name)
    if object_linkage(ob, ct) is not None:
        return True
    return any(f.modifier == "domain" for f in info.fields)


def lift_object(ref: ObjRef, conf: RuntimeConfiguration,
                cfg: LiftingConfig) -> List[Axiom]:
    ct = conf.class_table
    ob = conf.object(ref)
    info = ct.info(ob.class_name)
    subject = cfg.run_obj(ref.n)
    is_list = info.list_elem is not None
    class_term = SMOL_LIST if is_list else cfg.prog(ob.class_name)
    axioms: List[Axiom] = []
    if cfg.punning:
        axioms.append(ClassAssertion(Atomic(class_term), subject))
    else:
        axioms.append(ClassAssertion(Atomic(SMOL_OBJECT), subject))
        axioms.append(PropertyAssertion(subject, SMOL_IMPLEMENTS, class_term))
    user = cfg.user_obj(ref.n)
    linked = has_user_node(ob, ct)
    if linked:
        axioms.append(PropertyAssertion(subject, SMOL_LINKS, user))
    for f in info.fields:
        if f.modifier == "hidden":
            continue
        v = ob.fields[f.name]
        if f.modifier == "domain":
            owner, prop = user, cfg.domain_prop(f.name)
            entry = cfg.user_entry(ref.n, f.name)
        else:
            owner, prop = subject, cfg.prog(f.name)
            entry = cfg.run_entry(ref.n, f.name)
        if cfg.punning:
            axioms.append(PropertyAssertion(owner, prop, value_term(v, cfg)))
        else:
            axioms += [
                PropertyAssertion(owner, SMOL_HAS_ENTRY, entry),
                ClassAssertion(Atomic(SMOL_MEMORY_ENTRY), entry),
                PropertyAssertion(entry, SMOL_ENTRY_OF, prop),
            ]
            if v is None or isinstance(v, ObjRef):
                axioms.append(PropertyAssertion(entry, SMOL_HAS_POINTER,
                                                value_term(v, cfg)))
            else:
                axioms.append(PropertyAssertion(entry, SMOL_HAS_VALUE,
                                                value_literal(v)))
    if linked:
        linkage = object_linkage(ob, ct)
        if linkage is not None:
            axioms += evaluate_linkage(linkage, ref, conf, cfg)
    return axioms


# ---------------------------------------------------------------------------
# Close axioms and full configuration lifting
# ---------------------------------------------------------------------------


def close_axioms(conf: RuntimeConfiguration, cfg: LiftingConfig) -> List[Axiom]:
    ct = conf.class_table
    classes: Set[Iri] = {SMOL_ANY, SMOL_LIST, SMOL_UNIT}
    methods: Set[Iri] = set()
    fields: Set[Iri] = set()
    any_list = False
    for name, info in ct.classes.items():
        if info.list_elem is not None:
            any_list = True
            continue
        classes.add(cfg.prog(name))
        for mname in info.methods:
            methods.add(cfg.prog(mname))
        for f in info.fields:
            if not f.modifier:
                fields.add(cfg.prog(f.name))
    if any_list:
        fields.add(cfg.prog("content"))
        fields.add(cfg.prog("next"))
    objects = {cfg.run_obj(n) for n in conf.heap}
    return [
        ClosedEnumeration(SMOL_CLASS, frozenset(classes)),
        ClosedEnumeration(SMOL_METHOD, frozenset(methods)),
        ClosedEnumeration(SMOL_FIELD, frozenset(fields)),
        ClosedEnumeration(SMOL_OBJECT, frozenset(objects)),
    ]


def render_axioms(axioms: Iterable[Axiom], prefixes: PrefixTable) -> Graph:
    g = Graph(prefixes)
    for ax in axioms:
        if isinstance(ax, ClassAssertion) and isinstance(ax.concept, Atomic):
            g.add(Triple(ax.individual, RDF_TYPE_IRI, ax.concept.iri))
        elif isinstance(ax, PropertyAssertion):
            g.add(Triple(ax.subject, ax.prop, ax.obj))
        elif isinstance(ax, SubClassOf) and isinstance(ax.sub, Atomic) \
                and isinstance(ax.sup, Atomic):
            g.add(Triple(ax.sub.iri, OWL_SUBCLASSOF_IRI, ax.sup.iri))
        elif isinstance(ax, ObjectPropertyDecl):
            g.add(Triple(ax.iri, RDF_TYPE_IRI, OWL_OBJECT_PROPERTY))
            if ax.domain is not None:
                g.add(Triple(ax.iri, RDFS_DOMAIN, ax.domain))
            if ax.range is not None:
                g.add(Triple(ax.iri, RDFS_RANGE, ax.range))
        elif isinstance(ax, DataPropertyDecl):
            g.add(Triple(ax.iri, RDF_TYPE_IRI, OWL_DATATYPE_PROPERTY))
            if ax.domain is not None:
                g.add(Triple(ax.iri, RDFS_DOMAIN, ax.domain))
            if ax.range is not None and ax.range.datatype is not None:
                g.add(Triple(ax.iri, RDFS_RANGE, Iri(ax.range.datatype)))
        # enumerations and complex axioms stay on the knowledge-base side
    return g


@dataclass
class LiftedGraph:
    graph: Graph
    smol_layer: Graph
    prog_layer: Graph
    run_layer: Graph
    user_layer: Graph
    axioms: List[Axiom]


def _builtin_assertions() -> List[Axiom]:
    return [ax for ax in builtin_smol_ontology()
            if isinstance(ax, (ClassAssertion, PropertyAssertion))]


def _split_object_axioms(axioms: List[Axiom], cfg: LiftingConfig):
    """Object axioms split into run-layer and user-layer by subject prefix;
    linkage blank nodes belong to the user layer."""
    run_ns = cfg.prefixes.mapping["run"]
    run_part, user_part = [], []
    for ax in axioms:
        subject = ax.individual if isinstance(ax, ClassAssertion) else ax.subject
        if isinstance(subject, Iri) and subject.value.startswith(run_ns):
            run_part.append(ax)
        else:
            user_part.append(ax)
    return run_part, user_part


def lift_configuration(conf: RuntimeConfiguration, cfg: LiftingConfig,
                       domain_graph: Optional[Graph] = None) -> LiftedGraph:
    ct = conf.class_table
    prog_axioms: List[Axiom] = []
    for name in sorted(ct.classes):
        prog_axioms += lift_class(name, ct, cfg)
    prog_axioms += lift_list_vocabulary(ct, cfg)
    prog_axioms += class_disjointness(ct, cfg)
    run_axioms: List[Axiom] = []
    user_axioms: List[Axiom] = []
    for n in sorted(conf.heap):
        ob_axioms = lift_object(ObjRef(n), conf, cfg)
        run_part, user_part = _split_object_axioms(ob_axioms, cfg)
        run_axioms += run_part
        user_axioms += user_part
    close = close_axioms(conf, cfg)

    smol_layer = render_axioms(_builtin_assertions(), cfg.prefixes)
    prog_layer = render_axioms(prog_axioms, cfg.prefixes)
    run_layer = render_axioms(run_axioms, cfg.prefixes)
    user_layer = render_axioms(user_axioms, cfg.prefixes)
    graph = smol_layer.union(prog_layer).union(run_layer).union(user_layer)
    if domain_graph is not None:
        graph = graph.union(domain_graph)
    return LiftedGraph(
        graph=graph, smol_layer=smol_layer, prog_layer=prog_layer,
        run_layer=run_layer, user_layer=user_layer,
        axioms=prog_axioms + run_axioms + user_axioms + close)


# ---------------------------------------------------------------------------
# Virtual sources
# ---------------------------------------------------------------------------


class StaticSource(VirtualSource):
    """The smol- and prog-layer triples, materialized once (the class table
    is small and immutable)."""

    def __init__(self, ct: ClassTable, cfg: LiftingConfig):
        axioms = _builtin_assertions()
        for name in sorted(ct.classes):
            axioms += lift_class(name, ct, cfg)
        axioms += lift_list_vocabulary(ct, cfg)
        self.graph = render_axioms(axioms, cfg.prefixes)
        self.visits = 0

    def find(self, s=None, p=None, o=None):
        self.visits += 1
        return self.graph.find(s, p, o)


class HeapSource(VirtualSource):
    """Run- and user-layer triples, generated per object on demand.

    Guards prune the candidate set before any object is lifted: a bound
    subject names one object, a bound predicate restricts to classes whose
    fields can emit it, and a bound class position restricts to instances
    of that class. `visits` counts object lifts (traversal work)."""

    def __init__(self, conf: RuntimeConfiguration, cfg: LiftingConfig):
        self.conf = conf
        self.cfg = cfg
        self.visits = 0
        self._cache: Dict[int, List[Triple]] = {}
        run_ns = cfg.prefixes.mapping["run"]
        domain_ns = cfg.prefixes.mapping["domain"]
        prog_ns = cfg.prefixes.mapping["prog"]
        smol_ns = SMOL_CLASS.value[: SMOL_CLASS.value.rindex("#") + 1]
        self._run_ns, self._domain_ns = run_ns, domain_ns
        self._prog_ns, self._smol_ns = prog_ns, smol_ns

    # -- candidate computation ------------------------------------------

    def _all(self) -> Set[int]:
        return set(self.conf.heap)

    def _subject_candidates(self, s) -> Optional[Set[int]]:
        if s is None:
            return None
        if isinstance(s, BlankNode):
            return {n for n in self.conf.heap if self._is_linked(n)}
        if not isinstance(s, Iri):
            return set()
        for ns in (self._run_ns, self._domain_ns):
            if s.value.startswith(ns):
                m = re.match(r"obj(\d+)", s.value[len(ns):])
                if m:
                    return {int(m.group(1))}
                return set() if ns == self._run_ns else None
        return set()

    def _is_linked(self, n: int) -> bool:
        return has_user_node(self.conf.heap[n], self.conf.class_table)

    def _classes_with_field(self, name: str, domain_modified: bool) -> Set[str]:
        out = set()
        for cname, info in self.conf.class_table.classes.items():
            for f in info.fields:
                if f.name != name:
                    continue
                if domain_modified and f.modifier == "domain":
                    out.add(cname)
                elif not domain_modified and not f.modifier:
                    out.add(cname)
        return out

    def _instances_of(self, class_names: Set[str]) -> Set[int]:
        return {n for n, ob in self.conf.heap.items() if ob.class_name in class_names}

    def _predicate_candidates(self, p, o) -> Optional[Set[int]]:
        if p is None:
            return None
        if not isinstance(p, Iri):
            return set()
        v = p.value
        if v == RDF_TYPE:
            return self._type_candidates(o)
        if v.startswith(self._smol_ns):
            local = v[len(self._smol_ns):]
            if local == "links":
                return {n for n in self._all() if self._is_linked(n)}
            if local == "implements" and not self.cfg.punning:
                if isinstance(o, Iri):
                    if o.value.startswith(self._prog_ns):
                        cname = o.value[len(self._prog_ns):]
                        return self._instances_of({cname})
                    if o == SMOL_LIST:
                        return self._list_instances()
                    return set()
                return self._all()
            if local in ("hasEntry", "entryOf", "hasValue", "hasPointer") \
                    and not self.cfg.punning:
                return self._all()
            return set()
        if v.startswith(self._prog_ns):
            if not self.cfg.punning:
                return set()  # reified mode has no punned field edges
            local = v[len(self._prog_ns):]
            if local in ("content", "next"):
                return self._list_instances()
            return self._instances_of(self._classes_with_field(local, False))
        if v.startswith(self._domain_ns):
            if not self.cfg.punning:
                return {n for n in self._all() if self._is_linked(n)}
            local = v[len(self._domain_ns):]
            with_field = self._instances_of(self._classes_with_field(local, True))
            with_linkage = {n for n, ob in self.conf.heap.items()
                            if object_linkage(ob, self.conf.class_table) is not None}
            return with_field | with_linkage
        return set()

    def _list_instances(self) -> Set[int]:
        ct = self.conf.class_table
        return {n for n, ob in self.conf.heap.items()
                if ct.info(ob.class_name).list_elem is not None}

    def _type_candidates(self, o) -> Optional[Set[int]]:
        if o is None:
            return None
        if isinstance(o, Iri):
            if o.value.startswith(self._prog_ns):
                if not self.cfg.punning:
                    return set()
                cname = o.value[len(self._prog_ns):]
                return self._instances_of({cname})
            if o == SMOL_LIST:
                return self._list_instances() if self.cfg.punning else set()
            if o == SMOL_OBJECT:
                return set() if self.cfg.punning else self._all()
            if o == SMOL_MEMORY_ENTRY:
                return set() if self.cfg.punning else self._all()
            if o.value.startswith(self._domain_ns):
                return {n for n in self._all() if self._is_linked(n)}
            return set()
        return None  # blank or unexpected: no pruning

    # -- find -------------------------------------------------------------

    def _object_triples(self, n: int) -> List[Triple]:
        if n not in self._cache:
            axioms = lift_object(ObjRef(n), self.conf, self.cfg)
            self._cache[n] = list(render_axioms(axioms, self.cfg.prefixes))
        return self._cache[n]

    def find(self, s=None, p=None, o=None):
        candidates = self._all()
        for restriction in (self._subject_candidates(s),
                            self._predicate_candidates(p, o)):
            if restriction is not None:
                candidates &= restriction
        out = []
        for n in sorted(candidates):
            self.visits += 1
            for t in self._object_triples(n):
                if (s is None or t.s == s) and (p is None or t.p == p) \
                        and (o is None or t.o == o):
                    out.append(t)
        return out


def heap_virtual_source(conf: RuntimeConfiguration, cfg: LiftingConfig) -> HeapSource:
    return HeapSource(conf, cfg)


def static_virtual_source(ct: ClassTable, cfg: LiftingConfig) -> StaticSource:
    return StaticSource(ct, cfg)
