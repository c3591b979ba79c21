"""Reference query evaluation and random generators for engine tests.

naive_evaluate joins patterns in textual order by scanning the full triple
list for every candidate, with no planner and no indexes, so it cannot
share a bug with the engine's planned, index-backed join.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Sequence, Set, Tuple

from semlift.ontology import (
    Atomic,
    Axiom,
    DataPropertyDecl,
    DataRange,
    KnowledgeBase,
    ObjectPropertyDecl,
)
from semlift.rdf import (
    RDF_TYPE,
    XSD_INTEGER,
    Graph,
    Iri,
    Literal,
    PrefixTable,
    Term,
    Triple,
    integer,
    term_sort_key,
)
from semlift.sparql import Binding, Comparison, SelectQuery, TriplePattern, Var

TEST_NS = "http://example.org/test#"


def _term_matches(want, got: Term, binding: Dict[str, Term]) -> Optional[Dict[str, Term]]:
    if isinstance(want, Var):
        if want.name in binding and binding[want.name] != got:
            return None
        out = dict(binding)
        out[want.name] = got
        return out
    return binding if want == got else None


def _compare(f: Comparison, binding: Dict[str, Term]) -> bool:
    def resolve(t):
        if isinstance(t, Var):
            return binding.get(t.name)
        return t

    left, right = resolve(f.left), resolve(f.right)
    if left is None or right is None:
        return False
    if f.op == "=":
        return left == right
    if f.op == "!=":
        return left != right
    if not (isinstance(left, Literal) and isinstance(right, Literal)):
        return False
    from semlift.rdf import literal_value

    try:
        lv, rv = literal_value(left), literal_value(right)
        if isinstance(lv, bool) != isinstance(rv, bool):
            return False
        if isinstance(lv, str) != isinstance(rv, str):
            return False
        if f.op == "<":
            return lv < rv
        if f.op == "<=":
            return lv <= rv
        if f.op == ">":
            return lv > rv
        return lv >= rv
    except TypeError:
        return False


def naive_evaluate(query: SelectQuery, graph: Graph) -> List[Binding]:
    triples = sorted(graph.triples, key=lambda t: tuple(map(term_sort_key, t)))
    rows: Set[Tuple[Term, ...]] = set()

    def rec(i: int, binding: Dict[str, Term]):
        if i == len(query.patterns):
            if all(_compare(f, binding) for f in query.filters):
                rows.add(tuple(binding[v] for v in query.variables))
            return
        pat = query.patterns[i]
        for t in triples:
            b = _term_matches(pat.s, t.s, binding)
            if b is None:
                continue
            b = _term_matches(pat.p, t.p, b)
            if b is None:
                continue
            b = _term_matches(pat.o, t.o, b)
            if b is None:
                continue
            rec(i + 1, b)

    rec(0, {})
    ordered = sorted(rows, key=lambda row: tuple(term_sort_key(t) for t in row))
    return [dict(zip(query.variables, row)) for row in ordered]


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------


def random_graph(rng: random.Random, n_individuals: int = 8,
                 n_triples: int = 25) -> Graph:
    prefixes = PrefixTable.default()
    prefixes.bind("test", TEST_NS)
    g = Graph(prefixes)
    inds = [Iri(TEST_NS + "i%d" % k) for k in range(n_individuals)]
    classes = [Iri(TEST_NS + "C%d" % k) for k in range(4)]
    obj_props = [Iri(TEST_NS + "r%d" % k) for k in range(3)]
    data_props = [Iri(TEST_NS + "d%d" % k) for k in range(2)]
    for _ in range(n_triples):
        roll = rng.random()
        if roll < 0.25:
            g.add(Triple(rng.choice(inds), Iri(RDF_TYPE), rng.choice(classes)))
        elif roll < 0.7:
            g.add(Triple(rng.choice(inds), rng.choice(obj_props), rng.choice(inds)))
        else:
            g.add(Triple(rng.choice(inds), rng.choice(data_props),
                         integer(rng.randint(0, 20))))
    return g


def random_bgp(rng: random.Random, graph: Graph) -> SelectQuery:
    """A random query that mixes constants harvested from the graph with a
    pool of variables, so answers are likely nonempty but not guaranteed."""
    triples = sorted(graph.triples, key=lambda t: tuple(map(term_sort_key, t)))
    var_pool = ["x", "y", "z", "w"]
    n_patterns = rng.randint(1, 4)
    patterns = []
    used_vars: Set[str] = set()
    for _ in range(n_patterns):
        base = rng.choice(triples)

        def spot(term: Term, allow_var=True):
            if allow_var and rng.random() < 0.55:
                name = rng.choice(var_pool)
                used_vars.add(name)
                return Var(name)
            return term

        patterns.append(TriplePattern(
            spot(base.s), spot(base.p, allow_var=rng.random() < 0.3), spot(base.o)))
    for pat in patterns:
        for t in pat.terms():
            if isinstance(t, Var):
                used_vars.add(t.name)
    if not used_vars:
        v = rng.choice(var_pool)
        used_vars.add(v)
        patterns.append(TriplePattern(Var(v), Iri(RDF_TYPE), Var(v + v)))
    variables = tuple(sorted(used_vars))
    filters = ()
    data_vars = [pat.o.name for pat in patterns
                 if isinstance(pat.o, Var) and isinstance(pat.p, Iri)
                 and pat.p.value.startswith(TEST_NS + "d")]
    if data_vars and rng.random() < 0.5:
        filters = (Comparison(Var(rng.choice(data_vars)),
                              rng.choice(["<", "<=", ">", ">=", "!="]),
                              integer(rng.randint(0, 20))),)
    return SelectQuery(variables, tuple(patterns), filters)


def tree_query_tbox() -> List[Axiom]:
    axioms: List[Axiom] = []
    for k in range(3):
        axioms.append(ObjectPropertyDecl(Iri(TEST_NS + "r%d" % k)))
    for k in range(2):
        axioms.append(DataPropertyDecl(Iri(TEST_NS + "d%d" % k), None,
                                       DataRange(XSD_INTEGER)))
    return axioms


def random_tree_query(rng: random.Random) -> SelectQuery:
    """A tree-shaped query rooted at ?v0: object-property edges (forward or
    inverse), class atoms, data atoms with interval filters and constant
    leaves. The root is always an individual position."""
    classes = [Iri(TEST_NS + "C%d" % k) for k in range(4)]
    obj_props = [Iri(TEST_NS + "r%d" % k) for k in range(3)]
    data_props = [Iri(TEST_NS + "d%d" % k) for k in range(2)]
    inds = [Iri(TEST_NS + "i%d" % k) for k in range(6)]
    patterns: List[TriplePattern] = []
    filters: List[Comparison] = []
    counter = [0]

    def fresh() -> Var:
        counter[0] += 1
        return Var("v%d" % counter[0])

    def grow(node: Var, depth: int):
        for _ in range(rng.randint(0 if depth else 1, 2)):
            roll = rng.random()
            if roll < 0.3:
                patterns.append(TriplePattern(node, Iri(RDF_TYPE), rng.choice(classes)))
            elif roll < 0.5:
                v = fresh()
                patterns.append(TriplePattern(node, rng.choice(data_props), v))
                if rng.random() < 0.7:
                    filters.append(Comparison(v, rng.choice([">", ">=", "<", "<="]),
                                              integer(rng.randint(0, 20))))
            elif roll < 0.65:
                prop = rng.choice(obj_props)
                if rng.random() < 0.5:
                    patterns.append(TriplePattern(node, prop, rng.choice(inds)))
                else:
                    patterns.append(TriplePattern(rng.choice(inds), prop, node))
            elif depth < 3:
                v = fresh()
                prop = rng.choice(obj_props)
                if rng.random() < 0.7:
                    patterns.append(TriplePattern(node, prop, v))
                else:
                    patterns.append(TriplePattern(v, prop, node))
                grow(v, depth + 1)

    root = Var("v0")
    grow(root, 0)
    if not patterns:
        patterns.append(TriplePattern(root, Iri(RDF_TYPE), rng.choice(classes)))
    return SelectQuery(("v0",), tuple(patterns), tuple(filters))
