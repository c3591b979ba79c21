"""A small SPARQL engine: basic graph patterns, comparison filters and
positional %n parameters, evaluated over pluggable triple sources.

Queries can also be rolled up into a concept describing the answer
variable (unraveling), which reduces query containment to concept
subsumption.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

from .ontology import (
    Atomic,
    Axiom,
    ClassHierarchy,
    Concept,
    DataPropertyDecl,
    DataRange,
    DataSome,
    EntailmentRegime,
    Exists,
    KnowledgeBase,
    LiteralRange,
    ObjectPropertyDecl,
    OneOf,
    Role,
    Simple,
    Thing,
    make_and,
    saturate,
)
from .rdf import (
    RDF_TYPE,
    Graph,
    Iri,
    Literal,
    PrefixTable,
    Term,
    Triple,
    literal_value,
    term_sort_key,
)


class SparqlSyntaxError(ValueError):
    def __init__(self, message: str, pos: int = 0):
        super().__init__(message)
        self.pos = pos


class UnsupportedSparqlError(SparqlSyntaxError):
    """A construct outside the supported subset (OPTIONAL, UNION, paths...)."""


class ParameterError(ValueError):
    """A %n parameter was out of range or left unsubstituted."""


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return "?" + self.name


@dataclass(frozen=True)
class Param:
    index: int  # 1-based

    def __repr__(self):
        return "%%%d" % self.index


PatternTerm = Union[Term, Var, Param]


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm

    def terms(self) -> Tuple[PatternTerm, PatternTerm, PatternTerm]:
        return (self.s, self.p, self.o)


@dataclass(frozen=True)
class Comparison:
    left: PatternTerm
    op: str  # < <= > >= = !=
    right: PatternTerm


@dataclass(frozen=True)
class SelectQuery:
    variables: Tuple[str, ...]
    patterns: Tuple[TriplePattern, ...]
    filters: Tuple[Comparison, ...] = ()

    def params(self) -> Set[int]:
        found: Set[int] = set()
        for pat in self.patterns:
            for t in pat.terms():
                if isinstance(t, Param):
                    found.add(t.index)
        for f in self.filters:
            for t in (f.left, f.right):
                if isinstance(t, Param):
                    found.add(t.index)
        return found


Binding = Dict[str, Term]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_SPARQL_TOKEN = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>\#[^\n]*)
    | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
    | (?P<param>%\d+)
    | (?P<iriref><[^<>\s]*>)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<double>[+-]?\d+\.\d+)
    | (?P<integer>[+-]?\d+)
    | (?P<cmp><=|>=|!=|=|<|>)
    | (?P<andand>&&)
    | (?P<word>[A-Za-z_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?(?::[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?|:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)
    | (?P<punct>[{}().;,*|/^+])
    """,
    re.VERBOSE,
)

_UNSUPPORTED_KEYWORDS = {
    "OPTIONAL": "OPTIONAL",
    "UNION": "UNION",
    "MINUS": "MINUS",
    "GRAPH": "named graphs",
    "BIND": "BIND",
    "VALUES": "VALUES",
    "ORDER": "ORDER BY",
    "GROUP": "GROUP BY",
    "LIMIT": "LIMIT",
    "DISTINCT": "DISTINCT",
}


@dataclass
class _QTok:
    kind: str
    text: str
    pos: int


def _sparql_tokenize(text: str) -> List[_QTok]:
    toks: List[_QTok] = []
    pos = 0
    while pos < len(text):
        m = _SPARQL_TOKEN.match(text, pos)
        if not m:
            raise SparqlSyntaxError("unexpected character %r" % text[pos], pos)
        if m.lastgroup not in ("ws", "comment"):
            toks.append(_QTok(m.lastgroup, m.group(0), pos))
        pos = m.end()
    toks.append(_QTok("eof", "", pos))
    return toks


class _QueryParser:
    def __init__(self, text: str, prefixes: PrefixTable):
        self.toks = _sparql_tokenize(text)
        self.i = 0
        self.prefixes = prefixes

    def peek(self, ahead: int = 0) -> _QTok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _QTok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _QTok:
        t = self.next()
        if t.text != text:
            raise SparqlSyntaxError("expected %r, found %r" % (text, t.text), t.pos)
        return t

    def check_unsupported(self, tok: _QTok):
        if tok.kind == "word" and tok.text.upper() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedSparqlError(
                "%s is not supported" % _UNSUPPORTED_KEYWORDS[tok.text.upper()], tok.pos)

    def parse(self) -> SelectQuery:
        head = self.next()
        if head.kind != "word" or head.text.upper() != "SELECT":
            raise SparqlSyntaxError("query must start with SELECT", head.pos)
        variables: List[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "var":
                variables.append(self.next().text[1:])
                continue
            if tok.text == "*":
                raise UnsupportedSparqlError("SELECT * is not supported", tok.pos)
            if tok.text == "(":
                raise UnsupportedSparqlError("SELECT expressions are not supported", tok.pos)
            self.check_unsupported(tok)
            break
        if not variables:
            raise SparqlSyntaxError("SELECT needs at least one variable", self.peek().pos)
        where = self.next()
        if where.kind != "word" or where.text.upper() != "WHERE":
            raise SparqlSyntaxError("expected WHERE", where.pos)
        self.expect("{")
        patterns: List[TriplePattern] = []
        filters: List[Comparison] = []
        while True:
            tok = self.peek()
            if tok.text == "}":
                self.next()
                break
            if tok.kind == "eof":
                raise SparqlSyntaxError("unterminated group pattern", tok.pos)
            if tok.kind == "word" and tok.text.upper() == "FILTER":
                self.next()
                filters.extend(self.parse_filter())
            else:
                self.check_unsupported(tok)
                if tok.text == "{":
                    raise UnsupportedSparqlError("nested group patterns are not supported", tok.pos)
                patterns.extend(self.parse_triple_block())
            if self.peek().text == ".":
                self.next()
        tok = self.peek()
        if tok.kind != "eof":
            raise SparqlSyntaxError("trailing input after '}'", tok.pos)
        seen = set()
        for v in variables:
            if v in seen:
                raise SparqlSyntaxError("duplicate SELECT variable ?%s" % v, 0)
            seen.add(v)
        return SelectQuery(tuple(variables), tuple(patterns), tuple(filters))

    def parse_triple_block(self) -> List[TriplePattern]:
        subject = self.parse_term(position="subject")
        out: List[TriplePattern] = []
        while True:
            predicate = self.parse_predicate()
            while True:
                obj = self.parse_term(position="object")
                out.append(TriplePattern(subject, predicate, obj))
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            if self.peek().text == ";":
                self.next()
                if self.peek().text in (".", "}"):
                    break
                continue
            break
        return out

    def parse_predicate(self) -> PatternTerm:
        tok = self.peek()
        if tok.text in ("/", "|", "^", "+"):
            raise UnsupportedSparqlError("property paths are not supported", tok.pos)
        if tok.kind == "word" and tok.text == "a":
            self.next()
            return Iri(RDF_TYPE)
        term = self.parse_term(position="predicate")
        nxt = self.peek()
        if nxt.text in ("/", "|", "^", "+") or (nxt.text == "*" and nxt.kind == "punct"):
            raise UnsupportedSparqlError("property paths are not supported", nxt.pos)
        if isinstance(term, Literal):
            raise SparqlSyntaxError("a literal cannot be a predicate", tok.pos)
        return term

    def parse_term(self, position: str) -> PatternTerm:
        tok = self.next()
        self.check_unsupported(tok)
        if tok.kind == "var":
            return Var(tok.text[1:])
        if tok.kind == "param":
            return Param(int(tok.text[1:]))
        if tok.kind == "iriref":
            return self.resolve_iriref(tok)
        if tok.kind == "word":
            if tok.text in ("true", "false"):
                return Literal(tok.text, "http://www.w3.org/2001/XMLSchema#boolean")
            if ":" in tok.text:
                try:
                    return self.prefixes.expand(tok.text)
                except KeyError:
                    raise SparqlSyntaxError("unknown prefix in %r" % tok.text, tok.pos)
            raise SparqlSyntaxError("unexpected name %r" % tok.text, tok.pos)
        if tok.kind == "string":
            lexical = tok.text[1:-1].replace('\\"', '"').replace("\\\\", "\\")
            return Literal(lexical, "http://www.w3.org/2001/XMLSchema#string")
        if tok.kind == "integer":
            return Literal(tok.text, "http://www.w3.org/2001/XMLSchema#integer")
        if tok.kind == "double":
            return Literal(tok.text, "http://www.w3.org/2001/XMLSchema#double")
        raise SparqlSyntaxError("unexpected %r in %s position" % (tok.text, position), tok.pos)

    def resolve_iriref(self, tok: _QTok) -> Iri:
        body = tok.text[1:-1]
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_-]*):([^/].*)$", body)
        if m and m.group(1) in self.prefixes.mapping:
            return Iri(self.prefixes.mapping[m.group(1)] + m.group(2))
        return Iri(body)

    def parse_filter(self) -> List[Comparison]:
        self.expect("(")
        out = [self.parse_comparison()]
        while self.peek().kind == "andand":
            self.next()
            out.append(self.parse_comparison())
        if self.peek().text == "|":
            raise UnsupportedSparqlError("disjunctive filters are not supported", self.peek().pos)
        self.expect(")")
        return out

    def parse_comparison(self) -> Comparison:
        left = self.parse_term(position="filter")
        op = self.next()
        if op.kind != "cmp":
            raise SparqlSyntaxError("expected a comparison operator, found %r" % op.text, op.pos)
        right = self.parse_term(position="filter")
        return Comparison(left, op.text, right)


def parse_query(text: str, prefixes: Optional[PrefixTable] = None) -> SelectQuery:
    """Parse a SELECT query over one basic graph pattern with optional
    conjunctive comparison filters and %n parameter holes."""
    return _QueryParser(text, prefixes or PrefixTable.default()).parse()


def substitute_params(query: SelectQuery, values: Sequence[PatternTerm]) -> SelectQuery:
    """Replace %1..%n with the given terms (or variables)."""
    have = query.params()
    if have and max(have) > len(values):
        raise ParameterError("query uses %%%d but only %d values given"
                             % (max(have), len(values)))

    def sub(t: PatternTerm) -> PatternTerm:
        if isinstance(t, Param):
            return values[t.index - 1]
        return t

    return SelectQuery(
        query.variables,
        tuple(TriplePattern(sub(p.s), sub(p.p), sub(p.o)) for p in query.patterns),
        tuple(Comparison(sub(f.left), f.op, sub(f.right)) for f in query.filters),
    )


# ---------------------------------------------------------------------------
# Sources and evaluation
# ---------------------------------------------------------------------------


class VirtualSource(ABC):
    """A triple source queried pattern-by-pattern. `visits` counts the
    underlying items inspected, so tests can observe how much of the state
    a query actually touched."""

    visits: int = 0

    @abstractmethod
    def find(self, s: Optional[Term], p: Optional[Term], o: Optional[Term]) -> Iterator[Triple]:
        ...


class GraphSource(VirtualSource):
    def __init__(self, graph: Graph):
        self.graph = graph
        self.visits = 0

    def find(self, s, p, o):
        for t in self.graph.find(s, p, o):
            self.visits += 1
            yield t


def plan(query: SelectQuery) -> Tuple[TriplePattern, ...]:
    """Join order: repeatedly pick the pattern with the most bound positions
    (constants or already-bound variables), breaking ties textually."""
    remaining = list(query.patterns)
    bound: Set[str] = set()
    ordered: List[TriplePattern] = []
    while remaining:
        def boundness(pat: TriplePattern) -> int:
            n = 0
            for t in pat.terms():
                if isinstance(t, Var):
                    n += t.name in bound
                elif not isinstance(t, Param):
                    n += 1
            return n

        best = max(remaining, key=lambda pat: (boundness(pat), -remaining.index(pat)))
        remaining.remove(best)
        ordered.append(best)
        for t in best.terms():
            if isinstance(t, Var):
                bound.add(t.name)
    return tuple(ordered)


def _concretize(t: PatternTerm, binding: Binding) -> Optional[Term]:
    if isinstance(t, Var):
        return binding.get(t.name)
    if isinstance(t, Param):
        raise ParameterError("unsubstituted parameter %r" % t)
    return t


def _filter_holds(f: Comparison, binding: Binding) -> bool:
    def value(t: PatternTerm):
        if isinstance(t, Var):
            if t.name not in binding:
                return None
            return binding[t.name]
        return t

    left, right = value(f.left), value(f.right)
    if left is None or right is None:
        return False
    if f.op in ("=", "!="):
        same = left == right
        return same if f.op == "=" else not same
    if not isinstance(left, Literal) or not isinstance(right, Literal):
        return False
    try:
        lv, rv = literal_value(left), literal_value(right)
        if isinstance(lv, bool) != isinstance(rv, bool):
            return False
        if isinstance(lv, str) != isinstance(rv, str):
            return False
        return {"<": lv < rv, "<=": lv <= rv, ">": lv > rv, ">=": lv >= rv}[f.op]
    except TypeError:
        return False


def evaluate(
    query: SelectQuery,
    sources: Sequence[VirtualSource],
    regime: EntailmentRegime,
) -> List[Binding]:
    """All answers as sorted, duplicate-free bindings of the SELECT
    variables. Under Simple the sources are joined directly; under
    ClassHierarchy their content is materialized and saturated first."""
    if query.params():
        raise ParameterError("query still contains %n parameters")
    if isinstance(regime, ClassHierarchy):
        g = Graph(PrefixTable.default())
        for src in sources:
            for t in src.find(None, None, None):
                g.add(t)
        entailed = saturate(KnowledgeBase(list(regime.tbox), g), regime)
        sources = [GraphSource(entailed)]

    ordered = plan(query)
    results: Set[Tuple[Term, ...]] = set()

    def join(index: int, binding: Binding):
        if index == len(ordered):
            if all(_filter_holds(f, binding) for f in query.filters):
                try:
                    row = tuple(binding[v] for v in query.variables)
                except KeyError as missing:
                    raise SparqlSyntaxError("SELECT variable ?%s is not bound by the pattern"
                                            % missing.args[0])
                results.add(row)
            return
        pat = ordered[index]
        s, p, o = (_concretize(t, binding) for t in pat.terms())
        for src in sources:
            for t in src.find(s, p, o):
                extended = dict(binding)
                ok = True
                for want, got in zip(pat.terms(), t):
                    if isinstance(want, Var):
                        if extended.get(want.name, got) != got:
                            ok = False
                            break
                        extended[want.name] = got
                    elif want != got:
                        ok = False
                        break
                if ok:
                    join(index + 1, extended)

    join(0, {})
    rows = sorted(results, key=lambda row: tuple(term_sort_key(t) for t in row))
    return [dict(zip(query.variables, row)) for row in rows]


# ---------------------------------------------------------------------------
# Unraveling (rolling up a query into a concept)
# ---------------------------------------------------------------------------


def _data_properties(tbox: Sequence[Axiom]) -> Dict[Iri, Optional[DataRange]]:
    out: Dict[Iri, Optional[DataRange]] = {}
    for ax in tbox:
        if isinstance(ax, DataPropertyDecl):
            if ax.iri in out and out[ax.iri] != ax.range:
                out[ax.iri] = None
            else:
                out.setdefault(ax.iri, ax.range)
    return out


def _object_properties(tbox: Sequence[Axiom]) -> Set[Iri]:
    return {ax.iri for ax in tbox if isinstance(ax, ObjectPropertyDecl)}


def _refine_range(base: Optional[DataRange], comparisons: Iterable[Comparison],
                  var: str) -> DataRange:
    rng = base or DataRange(datatype=None)  # type: ignore[arg-type]
    for f in comparisons:
        if isinstance(f.left, Var) and f.left.name == var and isinstance(f.right, Literal):
            op, lit = f.op, f.right
        elif isinstance(f.right, Var) and f.right.name == var and isinstance(f.left, Literal):
            flip = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
            op, lit = flip[f.op], f.left
        else:
            continue
        if rng.datatype is not None and lit.datatype != rng.datatype:
            continue
        v = literal_value(lit)
        dt = rng.datatype or lit.datatype
        lo, hi = rng.min_value, rng.max_value
        lo_inc, hi_inc = rng.min_inclusive, rng.max_inclusive
        if op in (">", ">="):
            if lo is None or v > lo or (v == lo and op == ">"):
                lo, lo_inc = v, op == ">="
        elif op in ("<", "<="):
            if hi is None or v < hi or (v == hi and op == "<"):
                hi, hi_inc = v, op == "<="
        elif op == "=":
            lo = hi = v
            lo_inc = hi_inc = True
        else:
            continue  # != adds nothing expressible as an interval
        rng = DataRange(dt, lo, hi, lo_inc, hi_inc)
    return rng


def unravel(query: SelectQuery, tbox: Sequence[Axiom] = ()) -> Concept:
    """Roll the basic graph pattern up into a concept over the answer
    variable: a breadth-first spanning tree rooted at the answer becomes
    nested restrictions; an edge closing a cycle is kept only as an
    unqualified restriction at its endpoint nearer the root (subject side
    on ties). Parts of the pattern not reachable from the answer variable
    do not constrain it and are dropped."""
    if len(query.variables) != 1:
        raise ValueError("unraveling is defined for single-variable queries")
    if query.params():
        raise ParameterError("substitute parameters before unraveling")
    root = query.variables[0]
    data_props = _data_properties(tbox)
    object_props = _object_properties(tbox)
    rdf_type = Iri(RDF_TYPE)

    def node_key(t: PatternTerm) -> Optional[str]:
        if isinstance(t, Var):
            return "?" + t.name
        return None

    # adjacency over variable nodes; constants stay inside the edge payload
    edges: List[Tuple[TriplePattern, Optional[str], Optional[str]]] = []
    for pat in query.patterns:
        edges.append((pat, node_key(pat.s), node_key(pat.o)))

    def edge_sort(e) -> Tuple:
        pat = e[0]
        return tuple(repr(t) for t in (pat.p, pat.s, pat.o))

    edges.sort(key=edge_sort)

    depth: Dict[str, int] = {"?" + root: 0}
    used: Set[int] = set()
    # conjuncts gathered per variable node
    local: Dict[str, List[Concept]] = {}
    children: Dict[str, List[Tuple[Role, str]]] = {}

    def add_local(node: str, c: Concept):
        local.setdefault(node, []).append(c)

    subject_vars = {node_key(pat.s) for pat in query.patterns if node_key(pat.s)}

    # first pass: class atoms and data atoms sit at their subject node;
    # a data atom whose object IS the answer variable makes the answer a
    # literal, described by a literal-range concept instead
    for idx, (pat, s_node, o_node) in enumerate(edges):
        if pat.p == rdf_type and s_node is not None and isinstance(pat.o, Iri):
            add_local(s_node, Atomic(pat.o))
            used.add(idx)
        elif (
            isinstance(pat.p, Iri)
            and pat.p in data_props
            and o_node == "?" + root
        ):
            rng = _refine_range(data_props[pat.p], query.filters, root)
            add_local(o_node, LiteralRange(rng))
            used.add(idx)
        elif s_node is not None and isinstance(pat.o, Literal) and isinstance(pat.p, Iri):
            v = literal_value(pat.o)
            add_local(s_node, DataSome(pat.p, DataRange(pat.o.datatype, v, v)))
            used.add(idx)
        elif (
            s_node is not None
            and o_node is not None
            and isinstance(pat.p, Iri)
            and pat.p in data_props
        ):
            rng = _refine_range(data_props[pat.p], query.filters, pat.o.name)  # type: ignore[union-attr]
            add_local(s_node, DataSome(pat.p, rng))
            used.add(idx)

    # BFS tree over the remaining object edges
    frontier = ["?" + root]
    while frontier:
        node = frontier.pop(0)
        for idx, (pat, s_node, o_node) in enumerate(edges):
            if idx in used or not isinstance(pat.p, Iri) or pat.p == rdf_type:
                continue
            if isinstance(pat.o, Literal) or node not in (s_node, o_node):
                continue
            used.add(idx)
            role = Role(pat.p) if s_node == node else Role(pat.p, inverse=True)
            other = pat.o if s_node == node else pat.s
            if isinstance(other, Iri):
                add_local(node, Exists(role, OneOf(frozenset({other}))))
                continue
            target = o_node if s_node == node else s_node
            if target is None:
                continue
            if target in depth:
                # cycle edge: keep an unqualified restriction at the endpoint
                # nearer the root, subject side on ties
                assert s_node is not None and o_node is not None
                if depth[s_node] <= depth[o_node]:
                    add_local(s_node, Exists(Role(pat.p), Thing()))
                else:
                    add_local(o_node, Exists(Role(pat.p, inverse=True), Thing()))
            elif pat.p in object_props or target in subject_vars or target == node:
                depth[target] = depth[node] + 1
                children.setdefault(node, []).append((role, target))
                frontier.append(target)
            # otherwise the edge's kind is unknown and it is dropped:
            # the rolled-up concept only ever under-constrains the answer

    def roll(node: str) -> Concept:
        parts = list(local.get(node, []))
        for role, child in children.get(node, []):
            parts.append(Exists(role, roll(child)))
        return make_and(parts)

    return roll("?" + root)


def contained_in(query: SelectQuery, concept: Concept, tbox: Sequence[Axiom]) -> bool:
    """Certain-answer containment via unraveling: sound, not complete."""
    from .ontology import subsumes

    return subsumes(tbox, unravel(query, tbox), concept)
