"""RDF terms, triples, graphs and a small Turtle subset.

The graph layer is deliberately minimal: four literal datatypes, set
semantics for triples, and a deterministic serializer so that dumps of the
same state are byte-identical across runs.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_INTEGER = XSD + "integer"
XSD_BOOLEAN = XSD + "boolean"
XSD_STRING = XSD + "string"
XSD_DOUBLE = XSD + "double"

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDF_TYPE = RDF_NS + "type"
OWL_NS = "http://www.w3.org/2002/07/owl#"

SMOL_NS = "http://example.org/smol#"
PROG_NS = "http://example.org/prog#"
RUN_NS_DEFAULT = "http://example.org/run#"
DOMAIN_NS = "http://example.org/domain#"
SHACL_NS = "http://www.w3.org/ns/shacl#"

RUN_PREFIX_ENV = "SEMLIFT_PREFIX_RUN"


class TurtleSyntaxError(ValueError):
    """Raised on malformed Turtle input; carries line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__("line %d, col %d: %s" % (line, col, message))
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Iri:
    value: str

    def __repr__(self):
        return "Iri(%s)" % self.value


@dataclass(frozen=True)
class BlankNode:
    label: str

    def __repr__(self):
        return "BlankNode(%s)" % self.label


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str

    def __repr__(self):
        return "Literal(%r, %s)" % (self.lexical, self.datatype.rsplit("#", 1)[-1])


Term = Union[Iri, BlankNode, Literal]


@dataclass(frozen=True)
class Triple:
    s: Term
    p: Term
    o: Term

    def __iter__(self):
        return iter((self.s, self.p, self.o))


def integer(n: int) -> Literal:
    return Literal(str(int(n)), XSD_INTEGER)


def boolean(b: bool) -> Literal:
    return Literal("true" if b else "false", XSD_BOOLEAN)


def string(s: str) -> Literal:
    return Literal(s, XSD_STRING)


def double(x) -> Literal:
    if isinstance(x, str):
        return Literal(x, XSD_DOUBLE)
    return Literal(repr(float(x)), XSD_DOUBLE)


def literal_value(lit: Literal):
    """Python value of a literal; doubles keep lexical identity elsewhere."""
    if lit.datatype == XSD_INTEGER:
        return int(lit.lexical)
    if lit.datatype == XSD_BOOLEAN:
        return lit.lexical == "true"
    if lit.datatype == XSD_DOUBLE:
        return float(lit.lexical)
    return lit.lexical


def term_sort_key(t: Term) -> Tuple:
    # IRIs, then blank nodes, then literals; each group lexicographic.
    if isinstance(t, Iri):
        return (0, t.value)
    if isinstance(t, BlankNode):
        return (1, t.label)
    return (2, t.datatype, t.lexical)


class PrefixTable:
    """Bidirectional prefix <-> namespace map with the built-in prefixes."""

    def __init__(self, mapping: Optional[Dict[str, str]] = None):
        self.mapping: Dict[str, str] = dict(mapping or {})

    @staticmethod
    def default() -> "PrefixTable":
        run_ns = os.environ.get(RUN_PREFIX_ENV, RUN_NS_DEFAULT)
        return PrefixTable(
            {
                "smol": SMOL_NS,
                "prog": PROG_NS,
                "run": run_ns,
                "domain": DOMAIN_NS,
                "xsd": XSD,
                "rdf": RDF_NS,
                "owl": OWL_NS,
                "sh": SHACL_NS,
            }
        )

    def bind(self, prefix: str, ns: str):
        self.mapping[prefix] = ns

    def copy(self) -> "PrefixTable":
        return PrefixTable(self.mapping)

    def expand(self, qname: str) -> Iri:
        prefix, _, local = qname.partition(":")
        if prefix not in self.mapping:
            raise KeyError("unknown prefix %r" % prefix)
        return Iri(self.mapping[prefix] + local)

    def compact(self, iri: Iri) -> Optional[str]:
        best = None
        for prefix, ns in self.mapping.items():
            if iri.value.startswith(ns):
                local = iri.value[len(ns):]
                if _SIMPLE_LOCAL.match(local):
                    cand = "%s:%s" % (prefix, local)
                    if best is None or len(ns) > best[0]:
                        best = (len(ns), cand)
        return best[1] if best else None


_SIMPLE_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$|^$")


class Graph:
    """A set of triples with per-position indexes and a prefix table.

    Graphs are treated as frozen snapshots once handed to consumers;
    construction happens through add()/update() in a single thread.
    """

    def __init__(self, prefixes: Optional[PrefixTable] = None):
        self.prefixes = prefixes or PrefixTable.default()
        self._triples: Set[Triple] = set()
        self._by_s: Dict[Term, Set[Triple]] = {}
        self._by_p: Dict[Term, Set[Triple]] = {}
        self._by_o: Dict[Term, Set[Triple]] = {}

    def add(self, t: Triple):
        if t in self._triples:
            return
        self._triples.add(t)
        self._by_s.setdefault(t.s, set()).add(t)
        self._by_p.setdefault(t.p, set()).add(t)
        self._by_o.setdefault(t.o, set()).add(t)

    def update(self, triples: Iterable[Triple]):
        for t in triples:
            self.add(t)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    @property
    def triples(self) -> Set[Triple]:
        return set(self._triples)

    def find(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> Set[Triple]:
        """All triples matching the pattern; None is a wildcard."""
        candidates: Optional[Set[Triple]] = None
        for term, index in ((s, self._by_s), (p, self._by_p), (o, self._by_o)):
            if term is None:
                continue
            bucket = index.get(term, set())
            candidates = bucket if candidates is None else candidates & bucket
            if not candidates:
                return set()
        if candidates is None:
            return set(self._triples)
        return set(candidates)

    def union(self, other: "Graph") -> "Graph":
        g = Graph(self.prefixes.copy())
        for prefix, ns in other.prefixes.mapping.items():
            g.prefixes.mapping.setdefault(prefix, ns)
        g.update(self._triples)
        g.update(other._triples)
        return g

    def subjects(self) -> Set[Term]:
        return set(self._by_s.keys())


# ---------------------------------------------------------------------------
# Turtle subset parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>\#[^\n]*)
    | (?P<iriref><[^<>"{}|^`\\ ]*>)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<double>[+-]?(?:\d+\.\d+(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+))
    | (?P<integer>[+-]?\d+)
    | (?P<blank>_:[A-Za-z_][A-Za-z0-9_]*)
    | (?P<prefixed>[A-Za-z_][A-Za-z0-9_-]*)?:(?P<local>[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?
    | (?P<kw>@prefix|\^\^|a\b|true\b|false\b)
    | (?P<punct>[;,.\[\]()])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            i += 1
            if i >= len(body) or body[i] not in _ESCAPES:
                raise TurtleSyntaxError("bad escape", line, col)
            out.append(_ESCAPES[body[i]])
        else:
            out.append(c)
        i += 1
    return "".join(out)


def _tokenize(text: str) -> List[_Tok]:
    toks: List[_Tok] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        # keyword 'a' must be checked before prefixed-name munching
        m = re.match(r"@prefix\b|a(?=[ \t\r\n])|true\b|false\b", text[pos:])
        col = pos - line_start + 1
        if m and (m.group(0) != "a" or not re.match(r"[A-Za-z0-9_:]", text[pos + 1 : pos + 2] or " ")):
            toks.append(_Tok("kw", m.group(0), line, col))
            pos += m.end()
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TurtleSyntaxError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        tok_text = m.group(0)
        if kind in ("ws", "comment"):
            for i, c in enumerate(tok_text):
                if c == "\n":
                    line += 1
                    line_start = pos + i + 1
        elif kind in ("local", "prefixed") or (kind is None and ":" in tok_text):
            # full prefixed-name match (either side of the colon may be empty)
            toks.append(_Tok("prefixed", tok_text, line, col))
        else:
            toks.append(_Tok(kind, tok_text, line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _TurtleParser:
    def __init__(self, text: str, prefixes: PrefixTable):
        self.toks = _tokenize(text)
        self.i = 0
        self.graph = Graph(prefixes)
        self.bnode_counter = 0
        self.bnode_names: Dict[str, BlankNode] = {}

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise TurtleSyntaxError("expected %r, found %r" % (text, tok.text), tok.line, tok.col)
        return tok

    def fresh_bnode(self) -> BlankNode:
        b = BlankNode("b%d" % self.bnode_counter)
        self.bnode_counter += 1
        return b

    def parse(self) -> Graph:
        while self.peek().kind != "eof":
            if self.peek().text == "@prefix":
                self.parse_prefix()
            else:
                self.parse_triples()
        return self.graph

    def parse_prefix(self):
        self.expect("@prefix")
        tok = self.next()
        if tok.kind != "prefixed" or not tok.text.endswith(":") or tok.text.count(":") != 1:
            raise TurtleSyntaxError("expected prefix declaration", tok.line, tok.col)
        prefix = tok.text[:-1]
        iri_tok = self.next()
        if iri_tok.kind != "iriref":
            raise TurtleSyntaxError("expected IRI in @prefix", iri_tok.line, iri_tok.col)
        self.graph.prefixes.bind(prefix, iri_tok.text[1:-1])
        self.expect(".")

    def parse_triples(self):
        subject = self.parse_term(as_subject=True)
        self.parse_predicate_object_list(subject)
        self.expect(".")

    def parse_predicate_object_list(self, subject: Term):
        while True:
            predicate = self.parse_verb()
            while True:
                obj = self.parse_term()
                self.graph.add(Triple(subject, predicate, obj))
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            if self.peek().text == ";":
                while self.peek().text == ";":
                    self.next()
                if self.peek().text in (".", "]"):
                    break  # tolerate trailing semicolon
                continue
            break

    def parse_verb(self) -> Term:
        tok = self.peek()
        if tok.text == "a":
            self.next()
            return Iri(RDF_TYPE)
        term = self.parse_term()
        if not isinstance(term, Iri):
            raise TurtleSyntaxError("predicate must be an IRI", tok.line, tok.col)
        return term

    def parse_term(self, as_subject: bool = False) -> Term:
        tok = self.next()
        if tok.kind == "iriref":
            return self.resolve_iriref(tok)
        if tok.kind == "prefixed":
            try:
                return self.graph.prefixes.expand(tok.text)
            except KeyError as e:
                raise TurtleSyntaxError(str(e.args[0]), tok.line, tok.col)
        if tok.kind == "blank":
            label = tok.text[2:]
            if label not in self.bnode_names:
                self.bnode_names[label] = self.fresh_bnode()
            return self.bnode_names[label]
        if tok.text == "[":
            b = self.fresh_bnode()
            if self.peek().text != "]":
                self.parse_predicate_object_list(b)
            self.expect("]")
            return b
        if tok.kind == "string":
            body = _unescape(tok.text[1:-1], tok.line, tok.col)
            if self.peek().text == "^^":
                self.next()
                dtok = self.next()
                if dtok.kind == "iriref":
                    dt = self.resolve_iriref(dtok).value
                elif dtok.kind == "prefixed":
                    dt = self.graph.prefixes.expand(dtok.text).value
                else:
                    raise TurtleSyntaxError("expected datatype IRI", dtok.line, dtok.col)
                return Literal(body, dt)
            return Literal(body, XSD_STRING)
        if tok.kind == "integer":
            return Literal(tok.text.lstrip("+"), XSD_INTEGER)
        if tok.kind == "double":
            return Literal(tok.text, XSD_DOUBLE)
        if tok.text in ("true", "false"):
            return Literal(tok.text, XSD_BOOLEAN)
        if as_subject:
            raise TurtleSyntaxError("expected subject, found %r" % tok.text, tok.line, tok.col)
        raise TurtleSyntaxError("expected term, found %r" % tok.text, tok.line, tok.col)

    def resolve_iriref(self, tok: _Tok) -> Iri:
        body = tok.text[1:-1]
        # <prefix:name> with a bound prefix is resolved against the table
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_-]*):(.*)$", body)
        if m and m.group(1) in self.graph.prefixes.mapping and not m.group(2).startswith("//"):
            return Iri(self.graph.prefixes.mapping[m.group(1)] + m.group(2))
        return Iri(body)


def parse_turtle(text: str, prefixes: Optional[PrefixTable] = None) -> Graph:
    """Parse the Turtle subset: @prefix, a, prefixed names, literals,
    bracketed blank nodes, semicolon/comma lists."""
    table = (prefixes or PrefixTable.default()).copy()
    return _TurtleParser(text, table).parse()


# ---------------------------------------------------------------------------
# Deterministic serializer
# ---------------------------------------------------------------------------


def _serialize_term(t: Term, prefixes: PrefixTable) -> str:
    if isinstance(t, Iri):
        if t.value == RDF_TYPE:
            return "a"
        compact = prefixes.compact(t)
        return compact if compact else "<%s>" % t.value
    if isinstance(t, BlankNode):
        return "_:%s" % t.label
    if t.datatype == XSD_INTEGER:
        return t.lexical
    if t.datatype == XSD_BOOLEAN:
        return t.lexical
    escaped = t.lexical.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    if t.datatype == XSD_STRING:
        return '"%s"' % escaped
    return '"%s"^^%s' % (escaped, prefixes.compact(Iri(t.datatype)) or "<%s>" % t.datatype)


def serialize_turtle(g: Graph) -> str:
    """Byte-stable Turtle: prefixes sorted, then subjects, predicates and
    objects each in lexicographic term order."""
    lines = []
    used_prefixes = sorted(g.prefixes.mapping.items())
    for prefix, ns in used_prefixes:
        lines.append("@prefix %s: <%s> ." % (prefix, ns))
    if used_prefixes:
        lines.append("")
    by_subject: Dict[Term, Dict[Term, List[Term]]] = {}
    for t in g:
        by_subject.setdefault(t.s, {}).setdefault(t.p, []).append(t.o)
    for s in sorted(by_subject.keys(), key=term_sort_key):
        pred_map = by_subject[s]
        pred_lines = []
        for p in sorted(pred_map.keys(), key=term_sort_key):
            objs = sorted(set(pred_map[p]), key=term_sort_key)
            rendered = ", ".join(_serialize_term(o, g.prefixes) for o in objs)
            pred_lines.append("%s %s" % (_serialize_term(p, g.prefixes), rendered))
        subj = _serialize_term(s, g.prefixes)
        lines.append("%s %s ." % (subj, " ;\n    ".join(pred_lines)))
    return "\n".join(lines) + ("\n" if lines else "")
