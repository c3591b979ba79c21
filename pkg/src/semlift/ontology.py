"""Concepts, axioms and a lightweight description-logic reasoner.

The fragment covers atomic concepts, intersections, qualified existential
and universal restrictions, nominals, qualified exactly-1 cardinality and
datatype ranges with interval facets. Reasoning is structural and works
under the unique-name assumption; subsumption answers are sound but "not
provable" rather than "disproved" when the fragment runs out.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .rdf import (
    OWL_NS,
    PROG_NS,
    RDF_TYPE,
    SMOL_NS,
    XSD_BOOLEAN,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_STRING,
    BlankNode,
    Graph,
    Iri,
    Literal,
    PrefixTable,
    Term,
    Triple,
    literal_value,
    string,
)

SMOL_CLASS = Iri(SMOL_NS + "Class")
SMOL_METHOD = Iri(SMOL_NS + "Method")
SMOL_FIELD = Iri(SMOL_NS + "Field")
SMOL_OBJECT = Iri(SMOL_NS + "Object")
SMOL_MEMORY_ENTRY = Iri(SMOL_NS + "MemoryEntry")
SMOL_ANY = Iri(SMOL_NS + "Any")
SMOL_LIST = Iri(SMOL_NS + "List")
SMOL_UNIT = Iri(SMOL_NS + "Unit")
SMOL_NULL = Iri(SMOL_NS + "null")
SMOL_SUBCLASS = Iri(SMOL_NS + "subClass")
SMOL_HAS_METHOD = Iri(SMOL_NS + "hasMethod")
SMOL_HAS_FIELD = Iri(SMOL_NS + "hasField")
SMOL_HAS_NAME = Iri(SMOL_NS + "hasName")
SMOL_IMPLEMENTS = Iri(SMOL_NS + "implements")
SMOL_HAS_ENTRY = Iri(SMOL_NS + "hasEntry")
SMOL_HAS_POINTER = Iri(SMOL_NS + "hasPointer")
SMOL_HAS_VALUE = Iri(SMOL_NS + "hasValue")
SMOL_ENTRY_OF = Iri(SMOL_NS + "entryOf")
SMOL_LINKS = Iri(SMOL_NS + "links")
OWL_SUBCLASSOF = Iri(OWL_NS + "subClassOf")
OWL_CLASS = Iri(OWL_NS + "Class")

FUNCTIONAL = "Functional"
INVERSE_FUNCTIONAL = "InverseFunctional"
TRANSITIVE = "Transitive"

_DATATYPE_IRIS = {XSD_INTEGER, XSD_BOOLEAN, XSD_STRING, XSD_DOUBLE}


class ManchesterSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__("line %d: %s" % (line, message) if line else message)
        self.line = line


class UnsupportedFeatureError(ManchesterSyntaxError):
    """A construct outside the supported fragment (e.g. complement)."""


class InconsistentKbError(ValueError):
    """Membership evaluation was attempted over an inconsistent kb."""


# ---------------------------------------------------------------------------
# Concepts and axioms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Role:
    iri: Iri
    inverse: bool = False

    def flipped(self) -> "Role":
        return Role(self.iri, not self.inverse)

    def __repr__(self):
        return ("inverse %s" % self.iri.value) if self.inverse else self.iri.value


@dataclass(frozen=True)
class DataRange:
    """A datatype with an optional closed/open interval facet; datatype None
    means any literal."""

    datatype: Optional[str]
    min_value: Optional[object] = None
    max_value: Optional[object] = None
    min_inclusive: bool = True
    max_inclusive: bool = True

    def contains_value(self, lit: Literal) -> bool:
        if self.datatype is not None and lit.datatype != self.datatype:
            return False
        v = literal_value(lit)
        if self.min_value is not None:
            if v < self.min_value or (v == self.min_value and not self.min_inclusive):
                return False
        if self.max_value is not None:
            if v > self.max_value or (v == self.max_value and not self.max_inclusive):
                return False
        return True

    def subsumed_by(self, other: "DataRange") -> bool:
        if other.datatype is not None and self.datatype != other.datatype:
            return False
        if other.min_value is not None:
            if self.min_value is None:
                return False
            if self.min_value < other.min_value:
                return False
            if self.min_value == other.min_value and self.min_inclusive and not other.min_inclusive:
                return False
        if other.max_value is not None:
            if self.max_value is None:
                return False
            if self.max_value > other.max_value:
                return False
            if self.max_value == other.max_value and self.max_inclusive and not other.max_inclusive:
                return False
        return True


class Concept:
    pass


@dataclass(frozen=True)
class Atomic(Concept):
    iri: Iri

    def __repr__(self):
        return self.iri.value


@dataclass(frozen=True)
class Thing(Concept):
    def __repr__(self):
        return "Thing"


@dataclass(frozen=True)
class Nothing(Concept):
    def __repr__(self):
        return "Nothing"


@dataclass(frozen=True)
class And(Concept):
    conjuncts: Tuple[Concept, ...]

    def __repr__(self):
        return "(" + " and ".join(map(repr, self.conjuncts)) + ")"


@dataclass(frozen=True)
class Exists(Concept):
    role: Role
    concept: Concept

    def __repr__(self):
        return "(%r some %r)" % (self.role, self.concept)


@dataclass(frozen=True)
class Forall(Concept):
    role: Role
    concept: Concept

    def __repr__(self):
        return "(%r only %r)" % (self.role, self.concept)


@dataclass(frozen=True)
class OneOf(Concept):
    individuals: FrozenSet[Iri]

    def __repr__(self):
        return "{%s}" % ", ".join(sorted(i.value for i in self.individuals))


@dataclass(frozen=True)
class DataSome(Concept):
    prop: Iri
    range: DataRange

    def __repr__(self):
        return "(%s some %s)" % (self.prop.value, self.range.datatype)


@dataclass(frozen=True)
class ExactCardinality(Concept):
    n: int
    role: Role
    concept: Concept

    def __repr__(self):
        return "(%r exactly %d %r)" % (self.role, self.n, self.concept)


@dataclass(frozen=True)
class LiteralRange(Concept):
    """Concept of literal values inside a data range; only meaningful on the
    answer-variable side of query containment, never as a class of individuals."""

    range: DataRange

    def __repr__(self):
        return "literal(%s)" % self.range.datatype


class Axiom:
    pass


@dataclass(frozen=True)
class SubClassOf(Axiom):
    sub: Concept
    sup: Concept


@dataclass(frozen=True)
class EquivalentTo(Axiom):
    name: Iri
    definition: Concept


@dataclass(frozen=True)
class DisjointClasses(Axiom):
    concepts: Tuple[Iri, ...]


@dataclass(frozen=True)
class ObjectPropertyDecl(Axiom):
    iri: Iri
    domain: Optional[Concept] = None
    range: Optional[Concept] = None
    characteristics: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class DataPropertyDecl(Axiom):
    iri: Iri
    domain: Optional[Concept] = None
    range: Optional[DataRange] = None
    characteristics: FrozenSet[str] = frozenset()


@dataclass(frozen=True)
class ClassAssertion(Axiom):
    concept: Concept
    individual: Iri


@dataclass(frozen=True)
class PropertyAssertion(Axiom):
    subject: Iri
    prop: Iri
    obj: Term


@dataclass(frozen=True)
class ClosedEnumeration(Axiom):
    """concept EquivalentTo {individuals}: closes a concept's extension."""

    concept: Iri
    individuals: FrozenSet[Iri]


@dataclass
class KnowledgeBase:
    tbox: List[Axiom]
    abox: Graph

    @property
    def prefixes(self) -> PrefixTable:
        return self.abox.prefixes


@dataclass(frozen=True)
class Simple:
    """No inference: the asserted graph is queried as-is."""


@dataclass(frozen=True)
class ClassHierarchy:
    """Subclass-transitive entailment: membership and implements triples are
    propagated along the class hierarchy and equivalences are expanded.
    Carries the tbox to apply when the queried data is not already packaged
    as a knowledge base (e.g. evaluation over virtual sources)."""

    tbox: Tuple[Axiom, ...] = ()


EntailmentRegime = Union[Simple, ClassHierarchy]


def conjuncts_of(c: Concept) -> List[Concept]:
    if isinstance(c, And):
        out: List[Concept] = []
        for x in c.conjuncts:
            out.extend(conjuncts_of(x))
        return out
    return [c]


def make_and(cs: Sequence[Concept]) -> Concept:
    flat = []
    for c in cs:
        flat.extend(conjuncts_of(c))
    flat = [c for c in flat if not isinstance(c, Thing)]
    if not flat:
        return Thing()
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def concept_names(c: Concept) -> Set[Iri]:
    """All concept and role IRIs mentioned in a concept."""
    if isinstance(c, Atomic):
        return {c.iri}
    if isinstance(c, And):
        out: Set[Iri] = set()
        for x in c.conjuncts:
            out |= concept_names(x)
        return out
    if isinstance(c, (Exists, Forall, ExactCardinality)):
        return {c.role.iri} | concept_names(c.concept)
    if isinstance(c, DataSome):
        return {c.prop}
    if isinstance(c, OneOf):
        return set(c.individuals)
    return set()


# ---------------------------------------------------------------------------
# Built-in ontology of the language itself
# ---------------------------------------------------------------------------


def builtin_smol_ontology() -> List[Axiom]:
    """Axioms describing programs (classes, methods, fields) and runtime
    states (objects, memory entries, the null object)."""
    cls = Atomic(SMOL_CLASS)
    mth = Atomic(SMOL_METHOD)
    fld = Atomic(SMOL_FIELD)
    obj = Atomic(SMOL_OBJECT)
    entry = Atomic(SMOL_MEMORY_ENTRY)
    str_range = DataRange(XSD_STRING)
    return [
        # language layer
        ObjectPropertyDecl(SMOL_SUBCLASS, cls, cls, frozenset({TRANSITIVE})),
        ObjectPropertyDecl(SMOL_HAS_METHOD, cls, mth),
        ObjectPropertyDecl(SMOL_HAS_FIELD, cls, fld),
        # multiple declarations read as a union domain
        DataPropertyDecl(SMOL_HAS_NAME, cls, str_range, frozenset({FUNCTIONAL})),
        DataPropertyDecl(SMOL_HAS_NAME, mth, str_range, frozenset({FUNCTIONAL})),
        DataPropertyDecl(SMOL_HAS_NAME, fld, str_range, frozenset({FUNCTIONAL})),
        DisjointClasses((SMOL_CLASS, SMOL_METHOD, SMOL_FIELD)),
        ClassAssertion(cls, SMOL_ANY),
        ClassAssertion(cls, SMOL_LIST),
        PropertyAssertion(SMOL_LIST, SMOL_SUBCLASS, SMOL_ANY),
        PropertyAssertion(SMOL_LIST, SMOL_HAS_NAME, string("List")),
        ClassAssertion(cls, SMOL_UNIT),
        PropertyAssertion(SMOL_UNIT, SMOL_SUBCLASS, SMOL_ANY),
        # runtime layer
        ObjectPropertyDecl(SMOL_IMPLEMENTS, obj, cls, frozenset({FUNCTIONAL})),
        ObjectPropertyDecl(SMOL_HAS_ENTRY, obj, entry, frozenset({INVERSE_FUNCTIONAL})),
        ObjectPropertyDecl(SMOL_HAS_POINTER, entry, obj, frozenset({FUNCTIONAL})),
        DataPropertyDecl(SMOL_HAS_VALUE, entry, None, frozenset({FUNCTIONAL})),
        ObjectPropertyDecl(SMOL_ENTRY_OF, entry, fld, frozenset({FUNCTIONAL})),
        ObjectPropertyDecl(SMOL_LINKS, obj, None, frozenset({FUNCTIONAL, INVERSE_FUNCTIONAL})),
        ClassAssertion(obj, SMOL_NULL),
        PropertyAssertion(SMOL_NULL, SMOL_IMPLEMENTS, SMOL_ANY),
    ]


# ---------------------------------------------------------------------------
# Manchester-style parser (subset)
# ---------------------------------------------------------------------------

_MOS_TOKEN = re.compile(
    r"""
      (?P<ws>[ \t\r]+)
    | (?P<nl>\n)
    | (?P<comment>\#[^\n]*|//[^\n]*)
    | (?P<string>"(?:[^"\\\n]|\\.)*")
    | (?P<angle><[^<>\n]*>)
    | (?P<num>[+-]?\d+(?:\.\d+)?)
    | (?P<cmp>>=|<=|>|<)
    | (?P<name>[A-Za-z_][A-Za-z0-9_.-]*(?::[A-Za-z0-9_.-]+)?|:[A-Za-z0-9_.-]+)
    | (?P<punct>[()\[\]{},:])
    """,
    re.VERBOSE,
)

_FRAME_KEYWORDS = {
    "Class", "ObjectProperty", "DataProperty", "Individual", "AllDisjointClasses",
}
_SECTION_KEYWORDS = {
    "SubClassOf", "EquivalentTo", "Domain", "Range", "Characteristics",
    "Types", "Facts", "DisjointWith",
}
_UNSUPPORTED_KEYWORDS = {"not": "complement", "or": "union", "min": "min cardinality",
                         "max": "max cardinality", "value": "value restriction"}


@dataclass
class _MTok:
    kind: str
    text: str
    line: int


def _mos_tokenize(text: str) -> List[_MTok]:
    toks: List[_MTok] = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _MOS_TOKEN.match(text, pos)
        if not m:
            raise ManchesterSyntaxError("unexpected character %r" % text[pos], line)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind not in ("ws", "comment"):
            toks.append(_MTok(kind, m.group(0), line))
        pos = m.end()
    toks.append(_MTok("eof", "", line))
    return toks


class _ManchesterParser:
    def __init__(self, text: str, prefixes: PrefixTable):
        self.toks = _mos_tokenize(text)
        self.i = 0
        self.prefixes = prefixes

    def peek(self, ahead: int = 0) -> _MTok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _MTok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _MTok:
        t = self.next()
        if t.text != text:
            raise ManchesterSyntaxError("expected %r, found %r" % (text, t.text), t.line)
        return t

    def at_name(self, text: str) -> bool:
        return self.peek().kind == "name" and self.peek().text == text

    def resolve(self, tok: _MTok) -> Iri:
        if tok.kind == "angle":
            body = tok.text[1:-1]
            m = re.match(r"^([A-Za-z_][A-Za-z0-9_-]*):([^/].*)$", body)
            if m and m.group(1) in self.prefixes.mapping:
                return Iri(self.prefixes.mapping[m.group(1)] + m.group(2))
            return Iri(body)
        if ":" in tok.text:
            try:
                return self.prefixes.expand(tok.text)
            except KeyError:
                raise ManchesterSyntaxError("unknown prefix in %r" % tok.text, tok.line)
        raise ManchesterSyntaxError("expected a prefixed name, found %r" % tok.text, tok.line)

    def parse_iri(self) -> Iri:
        tok = self.next()
        if tok.kind not in ("name", "angle"):
            raise ManchesterSyntaxError("expected a name, found %r" % tok.text, tok.line)
        return self.resolve(tok)

    # concept grammar ------------------------------------------------------

    def parse_concept(self) -> Concept:
        parts = [self.parse_restriction()]
        while self.at_name("and"):
            self.next()
            parts.append(self.parse_restriction())
        if self.peek().kind == "name" and self.peek().text in _UNSUPPORTED_KEYWORDS:
            tok = self.peek()
            raise UnsupportedFeatureError(
                "%s is not supported" % _UNSUPPORTED_KEYWORDS[tok.text], tok.line)
        return make_and(parts)

    def parse_restriction(self) -> Concept:
        tok = self.peek()
        if tok.kind == "name" and tok.text in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeatureError(
                "%s is not supported" % _UNSUPPORTED_KEYWORDS[tok.text], tok.line)
        if tok.text == "(":
            self.next()
            inner = self.parse_concept()
            self.expect(")")
            return inner
        if tok.text == "{":
            return self.parse_nominal()
        inverse = False
        if tok.kind == "name" and tok.text == "inverse":
            self.next()
            inverse = True
            tok = self.peek()
        if tok.kind not in ("name", "angle"):
            raise ManchesterSyntaxError("expected a concept, found %r" % tok.text, tok.line)
        follow = self.peek(1)
        if follow.kind == "name" and follow.text in ("some", "only", "exactly", "min", "max", "value", "or", "not"):
            prop = self.parse_iri()
            kw = self.next()
            if kw.text in _UNSUPPORTED_KEYWORDS:
                raise UnsupportedFeatureError(
                    "%s is not supported" % _UNSUPPORTED_KEYWORDS[kw.text], kw.line)
            if kw.text == "exactly":
                num = self.next()
                if num.kind != "num" or num.text != "1":
                    raise UnsupportedFeatureError("only 'exactly 1' is supported", num.line)
                filler = self.parse_filler()
                if isinstance(filler, DataRange):
                    raise UnsupportedFeatureError("data cardinality is not supported", kw.line)
                return ExactCardinality(1, Role(prop, inverse), filler)
            filler = self.parse_filler()
            if isinstance(filler, DataRange):
                if kw.text == "only":
                    raise UnsupportedFeatureError("data 'only' is not supported", kw.line)
                if inverse:
                    raise UnsupportedFeatureError("inverse data property", kw.line)
                return DataSome(prop, filler)
            if kw.text == "some":
                return Exists(Role(prop, inverse), filler)
            return Forall(Role(prop, inverse), filler)
        if inverse:
            raise ManchesterSyntaxError("dangling 'inverse'", tok.line)
        if self.is_datatype(tok):
            return LiteralRange(self.parse_data_range())
        return Atomic(self.parse_iri())

    def parse_filler(self):
        tok = self.peek()
        if tok.text == "(":
            self.next()
            inner = self.parse_concept()
            self.expect(")")
            return inner
        if tok.text == "{":
            return self.parse_nominal()
        if self.is_datatype(tok):
            return self.parse_data_range()
        return Atomic(self.parse_iri())

    def parse_nominal(self) -> OneOf:
        self.expect("{")
        inds = [self.parse_iri()]
        while self.peek().text == ",":
            self.next()
            inds.append(self.parse_iri())
        self.expect("}")
        return OneOf(frozenset(inds))

    def is_datatype(self, tok: _MTok) -> bool:
        if tok.kind == "angle":
            return self.resolve(tok).value in _DATATYPE_IRIS
        return tok.kind == "name" and ":" in tok.text and (
            self.prefixes.mapping.get(tok.text.split(":", 1)[0], "") + tok.text.split(":", 1)[1]
        ) in _DATATYPE_IRIS

    def parse_data_range(self) -> DataRange:
        dt = self.parse_iri().value
        rng = DataRange(dt)
        if self.peek().text == "[":
            self.next()
            lo = hi = None
            lo_inc = hi_inc = True
            while True:
                op = self.next()
                if op.kind != "cmp":
                    raise ManchesterSyntaxError("expected a facet comparison", op.line)
                num = self.next()
                if num.kind != "num":
                    raise ManchesterSyntaxError("expected a number in facet", num.line)
                value = float(num.text) if "." in num.text else int(num.text)
                if op.text in (">=", ">"):
                    lo, lo_inc = value, op.text == ">="
                else:
                    hi, hi_inc = value, op.text == "<="
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect("]")
            rng = DataRange(dt, lo, hi, lo_inc, hi_inc)
        return rng

    # frames ---------------------------------------------------------------

    def parse_document(self) -> List[Axiom]:
        axioms: List[Axiom] = []
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "name" and tok.text in _FRAME_KEYWORDS:
                axioms.extend(self.parse_frame())
            else:
                axioms.extend(self.parse_bare_axiom())
        return axioms

    def parse_bare_axiom(self) -> List[Axiom]:
        name = self.parse_iri()
        kw = self.next()
        if kw.text == "SubClassOf":
            self.skip_colon()
            return [SubClassOf(Atomic(name), self.parse_concept())]
        if kw.text == "EquivalentTo":
            self.skip_colon()
            return [EquivalentTo(name, self.parse_concept())]
        raise ManchesterSyntaxError("expected SubClassOf or EquivalentTo, found %r" % kw.text, kw.line)

    def skip_colon(self):
        if self.peek().text == ":":
            self.next()

    def at_section_start(self) -> bool:
        tok = self.peek()
        return (
            tok.kind == "name"
            and tok.text in _SECTION_KEYWORDS
            and self.peek(1).text == ":"
        )

    def at_frame_start(self) -> bool:
        tok = self.peek()
        return tok.kind == "name" and tok.text in _FRAME_KEYWORDS and (
            tok.text == "AllDisjointClasses" or self.peek(1).text == ":")

    def parse_frame(self) -> List[Axiom]:
        kw = self.next()
        if kw.text == "AllDisjointClasses":
            self.expect("(")
            names = [self.parse_iri()]
            while self.peek().text == ",":
                self.next()
                names.append(self.parse_iri())
            self.expect(")")
            return [DisjointClasses(tuple(names))]
        self.expect(":")
        subject = self.parse_iri()
        axioms: List[Axiom] = []
        if kw.text == "Class":
            while self.at_section_start():
                section = self.next().text
                self.expect(":")
                if section == "SubClassOf":
                    axioms.append(SubClassOf(Atomic(subject), self.parse_concept()))
                elif section == "EquivalentTo":
                    axioms.append(EquivalentTo(subject, self.parse_concept()))
                elif section == "DisjointWith":
                    other = self.parse_iri()
                    axioms.append(DisjointClasses((subject, other)))
                else:
                    raise ManchesterSyntaxError("unexpected section %r in Class frame" % section, self.peek().line)
        elif kw.text in ("ObjectProperty", "DataProperty"):
            domains: List[Concept] = []
            rng_concept: Optional[Concept] = None
            rng_data: Optional[DataRange] = None
            chars: Set[str] = set()
            while self.at_section_start():
                section = self.next().text
                self.expect(":")
                if section == "Domain":
                    domains.append(self.parse_concept())
                elif section == "Range":
                    if kw.text == "DataProperty":
                        rng_data = self.parse_data_range()
                    else:
                        rng_concept = self.parse_concept()
                elif section == "Characteristics":
                    while True:
                        c = self.next()
                        if c.text not in (FUNCTIONAL, INVERSE_FUNCTIONAL, TRANSITIVE):
                            raise ManchesterSyntaxError("unknown characteristic %r" % c.text, c.line)
                        chars.add(c.text)
                        if self.peek().text == ",":
                            self.next()
                            continue
                        break
                else:
                    raise ManchesterSyntaxError("unexpected section %r in property frame" % section, self.peek().line)
            if not domains:
                domains = [None]  # type: ignore[list-item]
            for dom in domains:
                if kw.text == "DataProperty":
                    axioms.append(DataPropertyDecl(subject, dom, rng_data, frozenset(chars)))
                else:
                    axioms.append(ObjectPropertyDecl(subject, dom, rng_concept, frozenset(chars)))
        elif kw.text == "Individual":
            while self.at_section_start():
                section = self.next().text
                self.expect(":")
                if section == "Types":
                    while True:
                        axioms.append(ClassAssertion(self.parse_concept(), subject))
                        if self.peek().text == ",":
                            self.next()
                            continue
                        break
                elif section == "Facts":
                    while True:
                        prop = self.parse_iri()
                        value = self.parse_fact_value()
                        axioms.append(PropertyAssertion(subject, prop, value))
                        if self.peek().text == ",":
                            self.next()
                            continue
                        break
                else:
                    raise ManchesterSyntaxError("unexpected section %r in Individual frame" % section, self.peek().line)
        return axioms

    def parse_fact_value(self) -> Term:
        tok = self.next()
        if tok.kind == "string":
            return Literal(tok.text[1:-1].replace('\\"', '"'), XSD_STRING)
        if tok.kind == "num":
            if "." in tok.text:
                return Literal(tok.text, XSD_DOUBLE)
            return Literal(tok.text, XSD_INTEGER)
        if tok.kind == "name" and tok.text in ("true", "false"):
            return Literal(tok.text, XSD_BOOLEAN)
        if tok.kind in ("name", "angle"):
            return self.resolve(tok)
        raise ManchesterSyntaxError("expected a fact value, found %r" % tok.text, tok.line)


def parse_manchester_subset(text: str, prefixes: Optional[PrefixTable] = None) -> List[Axiom]:
    """Parse an axiom document: Class/ObjectProperty/DataProperty/Individual
    frames, bare SubClassOf/EquivalentTo lines and AllDisjointClasses."""
    parser = _ManchesterParser(text, prefixes or PrefixTable.default())
    return parser.parse_document()


def parse_concept_expression(text: str, prefixes: Optional[PrefixTable] = None) -> Concept:
    """Parse a bare concept expression (the payload of member())."""
    parser = _ManchesterParser(text, prefixes or PrefixTable.default())
    concept = parser.parse_concept()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ManchesterSyntaxError("trailing input %r" % tok.text, tok.line)
    return concept


# ---------------------------------------------------------------------------
# Structural subsumption
# ---------------------------------------------------------------------------


def _definitions(tbox: Sequence[Axiom]) -> Dict[Iri, Concept]:
    return {ax.name: ax.definition for ax in tbox if isinstance(ax, EquivalentTo)}


def _disjoint_pairs(tbox: Sequence[Axiom]) -> Set[FrozenSet[Iri]]:
    pairs: Set[FrozenSet[Iri]] = set()
    for ax in tbox:
        if isinstance(ax, DisjointClasses):
            names = ax.concepts
            for i in range(len(names)):
                for j in range(i + 1, len(names)):
                    pairs.add(frozenset({names[i], names[j]}))
    return pairs


def _as_class_concept(x: object) -> Optional[Concept]:
    """Normalize a declaration's domain/range slot: raw IRIs become atoms,
    Thing (no constraint) and None both vanish."""
    if isinstance(x, Iri):
        return Atomic(x)
    if isinstance(x, Thing):
        return None
    if isinstance(x, Concept):
        return x
    return None


class _Subsumption:
    def __init__(self, tbox: Sequence[Axiom]):
        self.tbox = list(tbox)
        self.defs = _definitions(tbox)
        self.disjoint = _disjoint_pairs(tbox)
        self.subclass_axioms = [ax for ax in tbox if isinstance(ax, SubClassOf)]
        self._active: Set[Tuple[Concept, Concept]] = set()
        # domain/range declarations as inclusions; a property declared with
        # several distinct domains (or ranges) means their union, which this
        # engine cannot represent, so only unambiguous ones are used
        obj_domains: Dict[Iri, List[Concept]] = {}
        obj_ranges: Dict[Iri, List[Concept]] = {}
        data_domains: Dict[Iri, List[Concept]] = {}
        for ax in tbox:
            if isinstance(ax, ObjectPropertyDecl):
                d = _as_class_concept(ax.domain)
                r = _as_class_concept(ax.range)
                if d is not None:
                    obj_domains.setdefault(ax.iri, []).append(d)
                if r is not None:
                    obj_ranges.setdefault(ax.iri, []).append(r)
            elif isinstance(ax, DataPropertyDecl):
                d = _as_class_concept(ax.domain)
                if d is not None:
                    data_domains.setdefault(ax.iri, []).append(d)
        self.role_constraints: Dict[Role, List[Concept]] = {}
        for iri, ds in obj_domains.items():
            if len(set(ds)) == 1:
                self.subclass_axioms.append(
                    SubClassOf(Exists(Role(iri), Thing()), ds[0]))
                self.role_constraints.setdefault(Role(iri, True), []).append(ds[0])
        for iri, rs in obj_ranges.items():
            if len(set(rs)) == 1:
                self.subclass_axioms.append(
                    SubClassOf(Exists(Role(iri, True), Thing()), rs[0]))
                self.role_constraints.setdefault(Role(iri), []).append(rs[0])
        for iri, ds in data_domains.items():
            if len(set(ds)) == 1:
                self.subclass_axioms.append(
                    SubClassOf(DataSome(iri, DataRange(None)), ds[0]))

    def subsumes(self, sub: Concept, sup: Concept) -> bool:
        key = (sub, sup)
        if key in self._active:
            return False  # break cycles conservatively
        self._active.add(key)
        try:
            closure = self.saturate_conjuncts(conjuncts_of(sub))
            if self.is_bottom(closure):
                return True
            return all(self.satisfied(closure, d) for d in conjuncts_of(sup))
        finally:
            self._active.discard(key)

    def saturate_conjuncts(self, parts: List[Concept]) -> List[Concept]:
        closure: List[Concept] = []
        seen: Set[Concept] = set()

        def push(c: Concept):
            for x in conjuncts_of(c):
                if x not in seen:
                    seen.add(x)
                    closure.append(x)

        for p in parts:
            push(p)
        changed = True
        while changed:
            changed = False
            for c in list(closure):
                if isinstance(c, Atomic) and c.iri in self.defs:
                    for piece in conjuncts_of(self.defs[c.iri]):
                        if piece not in seen:
                            push(piece)
                            changed = True
            for ax in self.subclass_axioms:
                lhs_parts = conjuncts_of(ax.sub)
                if all(self.satisfied(closure, part) for part in lhs_parts):
                    for piece in conjuncts_of(ax.sup):
                        if piece not in seen:
                            push(piece)
                            changed = True
        return closure

    def is_bottom(self, closure: List[Concept]) -> bool:
        atoms = {c.iri for c in closure if isinstance(c, Atomic)}
        if any(isinstance(c, Nothing) for c in closure):
            return True
        if any(isinstance(c, OneOf) and not c.individuals for c in closure):
            return True
        for pair in self.disjoint:
            if pair <= atoms:
                return True
        return False

    def satisfied(self, closure: List[Concept], d: Concept) -> bool:
        if isinstance(d, Thing):
            return True
        if isinstance(d, Nothing):
            return any(isinstance(c, Nothing) for c in closure)
        if isinstance(d, And):
            return all(self.satisfied(closure, x) for x in d.conjuncts)
        if isinstance(d, Atomic):
            for c in closure:
                if isinstance(c, Atomic) and c.iri == d.iri:
                    return True
            definition = self.defs.get(d.iri)
            if definition is not None:
                return all(self.satisfied(closure, x) for x in conjuncts_of(definition))
            return False
        if isinstance(d, Exists):
            cons = self.role_constraints.get(d.role, [])
            for c in closure:
                if isinstance(c, Exists) and c.role == d.role and self.subsumes(
                        make_and([c.concept] + cons), d.concept):
                    return True
                if (
                    isinstance(c, ExactCardinality)
                    and c.role == d.role
                    and c.n >= 1
                    and self.subsumes(make_and([c.concept] + cons), d.concept)
                ):
                    return True
            return False
        if isinstance(d, Forall):
            return any(
                isinstance(c, Forall) and c.role == d.role and self.subsumes(c.concept, d.concept)
                for c in closure
            )
        if isinstance(d, DataSome):
            return any(
                isinstance(c, DataSome) and c.prop == d.prop and c.range.subsumed_by(d.range)
                for c in closure
            )
        if isinstance(d, OneOf):
            return any(
                isinstance(c, OneOf) and c.individuals <= d.individuals for c in closure
            )
        if isinstance(d, ExactCardinality):
            return any(
                isinstance(c, ExactCardinality)
                and c.role == d.role
                and c.n == d.n
                and self.subsumes(c.concept, d.concept)
                and self.subsumes(d.concept, c.concept)
                for c in closure
            )
        if isinstance(d, LiteralRange):
            return any(
                isinstance(c, LiteralRange) and c.range.subsumed_by(d.range) for c in closure
            )
        return False


def subsumes(tbox: Sequence[Axiom], sub: Concept, sup: Concept) -> bool:
    """Structural subsumption with definition unfolding; sound for the
    fragment, answers False for anything it cannot prove."""
    return _Subsumption(tbox).subsumes(sub, sup)


# ---------------------------------------------------------------------------
# Saturation and extensional membership
# ---------------------------------------------------------------------------


def _assertional_triples(tbox: Sequence[Axiom]) -> List[Triple]:
    triples: List[Triple] = []
    for ax in tbox:
        if isinstance(ax, ClassAssertion):
            for c in conjuncts_of(ax.concept):
                if isinstance(c, Atomic):
                    triples.append(Triple(ax.individual, Iri(RDF_TYPE), c.iri))
        elif isinstance(ax, PropertyAssertion):
            triples.append(Triple(ax.subject, ax.prop, ax.obj))
    return triples


def _subclass_edges(g: Graph, tbox: Sequence[Axiom]) -> Dict[Iri, Set[Iri]]:
    """Direct superclass edges from smol:subClass and owl:subClassOf triples
    plus atomic-to-atomic tbox axioms."""
    up: Dict[Iri, Set[Iri]] = {}
    for t in list(g.find(None, SMOL_SUBCLASS, None)) + list(g.find(None, OWL_SUBCLASSOF, None)):
        if isinstance(t.s, Iri) and isinstance(t.o, Iri):
            up.setdefault(t.s, set()).add(t.o)
    for ax in tbox:
        if isinstance(ax, SubClassOf) and isinstance(ax.sub, Atomic):
            for sup in conjuncts_of(ax.sup):
                if isinstance(sup, Atomic):
                    up.setdefault(ax.sub.iri, set()).add(sup.iri)
    return up


def _transitive_closure(up: Dict[Iri, Set[Iri]]) -> Dict[Iri, Set[Iri]]:
    closed: Dict[Iri, Set[Iri]] = {k: set(v) for k, v in up.items()}
    changed = True
    while changed:
        changed = False
        for node, sups in closed.items():
            extra: Set[Iri] = set()
            for s in sups:
                extra |= closed.get(s, set())
            if not extra <= sups:
                sups |= extra
                changed = True
    return closed


def saturate(kb: KnowledgeBase, regime: EntailmentRegime) -> Graph:
    """The entailed graph under the regime. Simple returns the asserted
    graph (plus tbox facts); ClassHierarchy closes the class hierarchy,
    propagates membership and implements edges and expands equivalences.
    Idempotent: saturating a saturated graph adds nothing."""
    tbox = list(kb.tbox)
    if isinstance(regime, ClassHierarchy):
        tbox += [ax for ax in regime.tbox if ax not in tbox]
    g = Graph(kb.prefixes.copy())
    g.update(kb.abox.triples)
    g.update(_assertional_triples(tbox))
    if isinstance(regime, Simple):
        return g

    defs = _definitions(tbox)
    rdf_type = Iri(RDF_TYPE)
    changed = True
    while changed:
        changed = False
        up = _transitive_closure(_subclass_edges(g, tbox))
        # close the hierarchy triples themselves
        for sub, sups in up.items():
            for sup in sups:
                t = Triple(sub, SMOL_SUBCLASS, sup)
                if g.find(sub, SMOL_SUBCLASS, None) and t not in g:
                    g.add(t)
                    changed = True
                t2 = Triple(sub, OWL_SUBCLASSOF, sup)
                if g.find(sub, OWL_SUBCLASSOF, None) and t2 not in g:
                    g.add(t2)
                    changed = True
        # propagate memberships and implements along the hierarchy
        for pred in (rdf_type, SMOL_IMPLEMENTS):
            for t in list(g.find(None, pred, None)):
                if not isinstance(t.o, Iri):
                    continue
                for sup in up.get(t.o, set()):
                    t2 = Triple(t.s, pred, sup)
                    if t2 not in g:
                        g.add(t2)
                        changed = True
        # equivalences: defined extension -> name, name -> atomic conjuncts
        for name, definition in defs.items():
            for x in extension(g, definition):
                t = Triple(x, rdf_type, name)
                if t not in g:
                    g.add(t)
                    changed = True
            for t in list(g.find(None, rdf_type, name)):
                for c in conjuncts_of(definition):
                    if isinstance(c, Atomic):
                        t2 = Triple(t.s, rdf_type, c.iri)
                        if t2 not in g:
                            g.add(t2)
                            changed = True
    return g


def _individuals(g: Graph) -> Set[Term]:
    out: Set[Term] = set()
    for t in g:
        if isinstance(t.s, (Iri, BlankNode)):
            out.add(t.s)
        if t.p != Iri(RDF_TYPE) and isinstance(t.o, (Iri, BlankNode)):
            out.add(t.o)
    return out


def _role_successors(g: Graph, x: Term, role: Role) -> Set[Term]:
    if role.inverse:
        return {t.s for t in g.find(None, role.iri, x)}
    return {t.o for t in g.find(x, role.iri, None)}


def extension(g: Graph, concept: Concept) -> Set[Term]:
    """Extensional members of a concept over an (already saturated) graph.
    Membership is carried by rdf:type and smol:implements triples."""
    rdf_type = Iri(RDF_TYPE)
    if isinstance(concept, Atomic):
        hits = {t.s for t in g.find(None, rdf_type, concept.iri)}
        hits |= {t.s for t in g.find(None, SMOL_IMPLEMENTS, concept.iri)}
        return hits
    if isinstance(concept, Thing):
        return _individuals(g)
    if isinstance(concept, Nothing):
        return set()
    if isinstance(concept, And):
        sets = [extension(g, c) for c in concept.conjuncts]
        out = sets[0]
        for s in sets[1:]:
            out &= s
        return out
    if isinstance(concept, Exists):
        target = extension(g, concept.concept)
        out = set()
        for x in _individuals(g):
            succ = _role_successors(g, x, concept.role)
            if any(y in target for y in succ if not isinstance(y, Literal)):
                out.add(x)
        return out
    if isinstance(concept, Forall):
        target = extension(g, concept.concept)
        out = set()
        for x in _individuals(g):
            succ = {y for y in _role_successors(g, x, concept.role) if not isinstance(y, Literal)}
            if all(y in target for y in succ):
                out.add(x)
        return out
    if isinstance(concept, OneOf):
        universe = _individuals(g)
        return {i for i in concept.individuals if i in universe}
    if isinstance(concept, DataSome):
        out = set()
        for t in g.find(None, concept.prop, None):
            if isinstance(t.o, Literal) and concept.range.contains_value(t.o):
                out.add(t.s)
        return out
    if isinstance(concept, ExactCardinality):
        target = extension(g, concept.concept)
        out = set()
        for x in _individuals(g):
            succ = {y for y in _role_successors(g, x, concept.role) if y in target}
            if len(succ) == concept.n:
                out.add(x)
        return out
    if isinstance(concept, LiteralRange):
        return set()
    raise TypeError("unknown concept %r" % concept)


def members(kb: KnowledgeBase, concept: Concept, regime: EntailmentRegime) -> Set[Term]:
    """Extensional membership over the saturated kb; raises on an
    inconsistent kb since membership is undefined there."""
    report = check_consistency(kb)
    if not report.ok:
        raise InconsistentKbError(report.summary())
    g = saturate(kb, regime)
    return extension(g, concept)


# ---------------------------------------------------------------------------
# Consistency
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    kind: str
    subject: str
    detail: str

    def __str__(self):
        return "[%s] %s: %s" % (self.kind, self.subject, self.detail)


@dataclass
class ConsistencyReport:
    ok: bool
    violations: List[Violation]

    def summary(self) -> str:
        if self.ok:
            return "consistent"
        return "; ".join(str(v) for v in self.violations)


def _is_exempt(term: Term, user_ns: str) -> bool:
    # the user layer sits outside the closed computational namespaces; its
    # nodes may always be interpreted as equal to some enumerated individual
    if isinstance(term, BlankNode):
        return True
    return isinstance(term, Iri) and term.value.startswith(user_ns)


def check_consistency(kb: KnowledgeBase) -> ConsistencyReport:
    """Chase-style consistency over the asserted graph: memberships are
    closed under subclassing, equivalences and (single-declaration)
    domain/range/universal inference, then clash conditions are scanned.
    smol:null is a universal member of lifted classes and therefore exempt
    from class-level clashes; functionality is judged on asserted edges."""
    user_ns = kb.prefixes.mapping.get("domain", "\x00none")
    g = Graph(kb.prefixes.copy())
    g.update(kb.abox.triples)
    g.update(_assertional_triples(kb.tbox))
    rdf_type = Iri(RDF_TYPE)

    memberships: Dict[Term, Set[Iri]] = {}
    inferred_only: Dict[Term, Set[Iri]] = {}

    def member_add(x: Term, c: Iri, inferred: bool) -> bool:
        bucket = memberships.setdefault(x, set())
        if c in bucket:
            return False
        bucket.add(c)
        if inferred:
            inferred_only.setdefault(x, set()).add(c)
        return True

    for t in g.find(None, rdf_type, None):
        if isinstance(t.o, Iri):
            member_add(t.s, t.o, inferred=False)
    for t in g.find(None, SMOL_IMPLEMENTS, None):
        if isinstance(t.o, Iri):
            member_add(t.s, t.o, inferred=False)

    defs = _definitions(kb.tbox)
    up = _transitive_closure(_subclass_edges(g, kb.tbox))
    object_decls: Dict[Iri, List[ObjectPropertyDecl]] = {}
    data_decls: Dict[Iri, List[DataPropertyDecl]] = {}
    for ax in kb.tbox:
        if isinstance(ax, ObjectPropertyDecl):
            object_decls.setdefault(ax.iri, []).append(ax)
        elif isinstance(ax, DataPropertyDecl):
            data_decls.setdefault(ax.iri, []).append(ax)

    def concept_holds(x: Term, c: Concept) -> bool:
        """Provable membership of x in c under current closure."""
        if isinstance(c, Thing):
            return True
        if isinstance(c, Nothing):
            return False
        if isinstance(c, Atomic):
            return c.iri in memberships.get(x, set())
        if isinstance(c, And):
            return all(concept_holds(x, p) for p in c.conjuncts)
        if isinstance(c, OneOf):
            return x in c.individuals
        if isinstance(c, Exists):
            return any(
                not isinstance(y, Literal) and concept_holds(y, c.concept)
                for y in _role_successors(g, x, c.role)
            )
        if isinstance(c, Forall):
            return all(
                isinstance(y, Literal) or concept_holds(y, c.concept)
                for y in _role_successors(g, x, c.role)
            )
        if isinstance(c, DataSome):
            return any(
                isinstance(t.o, Literal) and c.range.contains_value(t.o)
                for t in g.find(x, c.prop, None)
            )
        if isinstance(c, ExactCardinality):
            succ = {
                y
                for y in _role_successors(g, x, c.role)
                if not isinstance(y, Literal) and concept_holds(y, c.concept)
            }
            return len(succ) == c.n
        return False

    def atomic_conjuncts(c: Concept) -> List[Iri]:
        return [p.iri for p in conjuncts_of(c) if isinstance(p, Atomic)]

    # membership closure to fixpoint
    changed = True
    while changed:
        changed = False
        for x, cs in list(memberships.items()):
            for c in list(cs):
                for sup in up.get(c, set()):
                    if member_add(x, sup, inferred=c in inferred_only.get(x, set())):
                        changed = True
        for name, definition in defs.items():
            for x in list(memberships.keys()) + list(_individuals(g)):
                if name in memberships.get(x, set()):
                    for a in atomic_conjuncts(definition):
                        if member_add(x, a, inferred=True):
                            changed = True
                elif concept_holds(x, definition):
                    if member_add(x, name, inferred=True):
                        changed = True
        for ax in kb.tbox:
            if not isinstance(ax, SubClassOf):
                continue
            lhs, rhs = ax.sub, ax.sup
            for x in list(memberships.keys()):
                if not concept_holds(x, lhs):
                    continue
                for part in conjuncts_of(rhs):
                    if isinstance(part, Atomic):
                        if member_add(x, part.iri, inferred=isinstance(lhs, Atomic)
                                      and lhs.iri in inferred_only.get(x, set())):
                            changed = True
                    elif isinstance(part, Forall):
                        for y in _role_successors(g, x, part.role):
                            if isinstance(y, Literal):
                                continue
                            for a in atomic_conjuncts(part.concept):
                                if member_add(y, a, inferred=True):
                                    changed = True
        # single-declaration domain/range inference
        for prop, decls in object_decls.items():
            domains = [c for c in (_as_class_concept(d.domain) for d in decls)
                       if c is not None]
            ranges = [c for c in (_as_class_concept(d.range) for d in decls)
                      if c is not None]
            for t in g.find(None, prop, None):
                if isinstance(t.o, Literal):
                    continue
                if len(domains) == 1:
                    for a in atomic_conjuncts(domains[0]):
                        if member_add(t.s, a, inferred=True):
                            changed = True
                if len(ranges) == 1 and t.o != SMOL_NULL:
                    for a in atomic_conjuncts(ranges[0]):
                        if member_add(t.o, a, inferred=True):
                            changed = True
        for prop, decls in data_decls.items():
            domains = [c for c in (_as_class_concept(d.domain) for d in decls)
                       if c is not None]
            if len(domains) == 1:
                for t in g.find(None, prop, None):
                    for a in atomic_conjuncts(domains[0]):
                        if member_add(t.s, a, inferred=True):
                            changed = True

    violations: List[Violation] = []
    pretty = kb.prefixes

    def name_of(term: Term) -> str:
        if isinstance(term, Iri):
            return pretty.compact(term) or term.value
        if isinstance(term, BlankNode):
            return "_:" + term.label
        return term.lexical

    # disjointness (the null object belongs to every class by design)
    for pair in _disjoint_pairs(kb.tbox):
        a, b = sorted(pair, key=lambda i: i.value)
        for x, cs in memberships.items():
            if x == SMOL_NULL or _is_exempt(x, user_ns):
                continue
            if a in cs and b in cs:
                violations.append(Violation(
                    "disjointness", name_of(x),
                    "member of disjoint classes %s and %s" % (name_of(a), name_of(b))))

    # closed enumerations
    for ax in kb.tbox:
        if not isinstance(ax, ClosedEnumeration):
            continue
        for x, cs in memberships.items():
            if ax.concept in cs and x not in ax.individuals:
                if x == SMOL_NULL or _is_exempt(x, user_ns):
                    continue
                violations.append(Violation(
                    "closed-enumeration", name_of(x),
                    "asserted into closed concept %s" % name_of(ax.concept)))

    # data ranges and misused properties
    for prop, decls in data_decls.items():
        ranges = [d.range for d in decls if d.range is not None]
        for t in g.find(None, prop, None):
            if not isinstance(t.o, Literal):
                violations.append(Violation(
                    "range", name_of(t.s),
                    "data property %s holds a non-literal" % name_of(prop)))
                continue
            if ranges and not any(t.o.datatype == r.datatype and r.contains_value(t.o) for r in ranges):
                violations.append(Violation(
                    "range", name_of(t.s),
                    "value %s outside the range of %s" % (t.o.lexical, name_of(prop))))

    for prop in object_decls:
        for t in g.find(None, prop, None):
            if isinstance(t.o, Literal):
                violations.append(Violation(
                    "range", name_of(t.s),
                    "object property %s holds a literal" % name_of(prop)))

    # functionality on asserted edges (entailed implements edges are
    # hierarchy approximations, not equalities); blank nodes are anonymous
    # and may co-refer, so only named terms and literals can clash
    asserted = Graph(kb.prefixes.copy())
    asserted.update(kb.abox.triples)
    asserted.update(_assertional_triples(kb.tbox))

    def distinct(terms: Set[Term]) -> Set[Term]:
        return {t for t in terms if not isinstance(t, BlankNode)}

    for prop, prop_decls in list(object_decls.items()) + list(data_decls.items()):
        chars = set().union(*(d.characteristics for d in prop_decls)) if prop_decls else set()
        if FUNCTIONAL in chars:
            by_subject: Dict[Term, Set[Term]] = {}
            for t in asserted.find(None, prop, None):
                by_subject.setdefault(t.s, set()).add(t.o)
            for s, objs in by_subject.items():
                if len(distinct(objs)) > 1:
                    violations.append(Violation(
                        "functionality", name_of(s),
                        "%d values for functional property %s" % (len(objs), name_of(prop))))
        if INVERSE_FUNCTIONAL in chars:
            by_object: Dict[Term, Set[Term]] = {}
            for t in asserted.find(None, prop, None):
                by_object.setdefault(t.o, set()).add(t.s)
            for o, subjects in by_object.items():
                if len(distinct(subjects)) > 1:
                    violations.append(Violation(
                        "functionality", name_of(o),
                        "%d subjects for inverse-functional property %s" % (len(subjects), name_of(prop))))

    # qualified exactly-1 upper bounds
    for ax in kb.tbox:
        sources: List[Tuple[Concept, Concept]] = []
        if isinstance(ax, SubClassOf):
            sources.append((ax.sub, ax.sup))
        elif isinstance(ax, EquivalentTo):
            sources.append((Atomic(ax.name), ax.definition))
        for lhs, rhs in sources:
            for part in conjuncts_of(rhs):
                if isinstance(part, ExactCardinality):
                    for x in list(memberships.keys()):
                        if not concept_holds(x, lhs):
                            continue
                        # blanks may co-refer, so only named successors clash
                        succ = {
                            y for y in _role_successors(g, x, part.role)
                            if isinstance(y, Iri) and concept_holds(y, part.concept)
                        }
                        if len(succ) > part.n:
                            violations.append(Violation(
                                "cardinality", name_of(x),
                                "more than %d %s successors" % (part.n, name_of(part.role.iri))))

    # equivalence clashes against nominals under unique names
    for name, definition in defs.items():
        for part in conjuncts_of(definition):
            if isinstance(part, OneOf):
                for x, cs in memberships.items():
                    if name in cs and isinstance(x, Iri) and x not in part.individuals:
                        if not _is_exempt(x, user_ns):
                            violations.append(Violation(
                                "enumeration", name_of(x),
                                "member of %s but not among its nominals" % name_of(name)))

    # membership in Nothing
    for ax in kb.tbox:
        if isinstance(ax, SubClassOf) and any(
            isinstance(p, Nothing) for p in conjuncts_of(ax.sup)
        ):
            for x in list(memberships.keys()):
                if concept_holds(x, ax.sub) and x != SMOL_NULL and not _is_exempt(x, user_ns):
                    violations.append(Violation(
                        "nothing", name_of(x), "member of an unsatisfiable class"))

    return ConsistencyReport(not violations, violations)


# ---------------------------------------------------------------------------
# Conservative extension (syntactic)
# ---------------------------------------------------------------------------

_RESERVED_PREFIXES = (SMOL_NS, PROG_NS)


def _reserved(iri: Iri) -> bool:
    return any(iri.value.startswith(ns) for ns in _RESERVED_PREFIXES)


def check_conservative_extension(domain_tbox: Sequence[Axiom]) -> List[Tuple[Axiom, str]]:
    """Syntactic check that a domain tbox cannot constrain the lifted
    layers: no smol:/prog: name may appear in a constraining position.
    Declaring the range of smol:links is the one sanctioned exception.
    Returns the offending axioms with reasons (empty list = conservative)."""
    offenders: List[Tuple[Axiom, str]] = []
    for ax in domain_tbox:
        if isinstance(ax, SubClassOf):
            bad = {n for n in concept_names(ax.sub) if _reserved(n)}
            if bad:
                offenders.append((ax, "reserved name on a subclass left side: %s"
                                  % ", ".join(sorted(n.value for n in bad))))
        elif isinstance(ax, EquivalentTo):
            if _reserved(ax.name):
                offenders.append((ax, "equivalence redefines reserved concept %s" % ax.name.value))
        elif isinstance(ax, (ObjectPropertyDecl, DataPropertyDecl)):
            if _reserved(ax.iri):
                only_range = ax.domain is None and ax.range is not None
                if ax.iri == SMOL_LINKS and only_range and not ax.characteristics:
                    continue
                offenders.append((ax, "redeclaration of reserved property %s" % ax.iri.value))
        elif isinstance(ax, DisjointClasses):
            bad = {n for n in ax.concepts if _reserved(n)}
            if bad:
                offenders.append((ax, "disjointness over reserved concepts"))
        elif isinstance(ax, ClassAssertion):
            bad = {n for n in concept_names(ax.concept) if _reserved(n)}
            if bad:
                offenders.append((ax, "assertion into a reserved concept"))
        elif isinstance(ax, PropertyAssertion):
            if _reserved(ax.prop) and ax.prop != SMOL_LINKS:
                offenders.append((ax, "assertion over reserved property %s" % ax.prop.value))
        elif isinstance(ax, ClosedEnumeration):
            if _reserved(ax.concept):
                offenders.append((ax, "closure of a reserved concept"))
    return offenders
