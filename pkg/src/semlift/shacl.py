"""Minimal shape validation: node shapes with class or node targets and
per-property count/datatype/class/value constraints."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

from .ontology import Atomic, EntailmentRegime, KnowledgeBase, Simple, extension, saturate
from .rdf import (
    RDF_TYPE,
    SHACL_NS,
    Graph,
    Iri,
    Literal,
    PrefixTable,
    Term,
    TurtleSyntaxError,
    parse_turtle,
)

SH_NODE_SHAPE = Iri(SHACL_NS + "NodeShape")
SH_TARGET_CLASS = Iri(SHACL_NS + "targetClass")
SH_TARGET_NODE = Iri(SHACL_NS + "targetNode")
SH_PROPERTY = Iri(SHACL_NS + "property")
SH_PATH = Iri(SHACL_NS + "path")
SH_MIN_COUNT = Iri(SHACL_NS + "minCount")
SH_MAX_COUNT = Iri(SHACL_NS + "maxCount")
SH_DATATYPE = Iri(SHACL_NS + "datatype")
SH_CLASS = Iri(SHACL_NS + "class")
SH_HAS_VALUE = Iri(SHACL_NS + "hasValue")

_SHAPE_PREDICATES = {SH_TARGET_CLASS, SH_TARGET_NODE, SH_PROPERTY, Iri(RDF_TYPE)}
_CONSTRAINT_PREDICATES = {
    SH_PATH, SH_MIN_COUNT, SH_MAX_COUNT, SH_DATATYPE, SH_CLASS, SH_HAS_VALUE,
}


class ShapeParseError(ValueError):
    pass


class UnsupportedShapeError(ShapeParseError):
    """A sh: construct outside the supported subset, named in the message."""


@dataclass(frozen=True)
class PropertyConstraint:
    path: Iri
    min_count: Optional[int] = None
    max_count: Optional[int] = None
    datatype: Optional[Iri] = None
    cls: Optional[Iri] = None
    has_value: Optional[Term] = None


@dataclass(frozen=True)
class Shape:
    name: str
    target_class: Optional[Iri] = None
    target_nodes: Tuple[Iri, ...] = ()
    constraints: Tuple[PropertyConstraint, ...] = ()


@dataclass(frozen=True)
class ShaclViolation:
    focus: Term
    path: Optional[Iri]
    message: str

    def __str__(self):
        where = self.path.value if self.path else "-"
        return "%s @ %s: %s" % (self.focus, where, self.message)


@dataclass
class ValidationReport:
    conforms: bool
    violations: List[ShaclViolation] = field(default_factory=list)


def _as_int(term: Term, what: str) -> int:
    if not isinstance(term, Literal):
        raise ShapeParseError("%s must be an integer literal" % what)
    try:
        return int(term.lexical)
    except ValueError:
        raise ShapeParseError("%s must be an integer literal" % what)


def parse_shapes(text: str, prefixes: Optional[PrefixTable] = None) -> List[Shape]:
    """Parse node shapes from the Turtle subset. Constructs outside the
    subset (sh:or, sh:sparql, ...) are rejected by name."""
    try:
        g = parse_turtle(text, prefixes)
    except TurtleSyntaxError as e:
        raise ShapeParseError("shape document is not valid turtle: %s" % e)
    shapes: List[Shape] = []
    shape_nodes = sorted(
        {t.s for t in g.find(None, Iri(RDF_TYPE), SH_NODE_SHAPE)},
        key=lambda n: (isinstance(n, Iri), getattr(n, "value", getattr(n, "label", ""))),
    )
    for t in g:
        if t.p.value.startswith(SHACL_NS):
            if t.p not in _SHAPE_PREDICATES | _CONSTRAINT_PREDICATES:
                raise UnsupportedShapeError(
                    "sh:%s is not supported" % t.p.value[len(SHACL_NS):])
    for node in shape_nodes:
        target_class = None
        targets: List[Iri] = []
        constraints: List[PropertyConstraint] = []
        for t in g.find(node, SH_TARGET_CLASS, None):
            if not isinstance(t.o, Iri):
                raise ShapeParseError("sh:targetClass must be an IRI")
            if target_class is not None and target_class != t.o:
                raise ShapeParseError("multiple sh:targetClass values on one shape")
            target_class = t.o
        for t in g.find(node, SH_TARGET_NODE, None):
            if not isinstance(t.o, Iri):
                raise ShapeParseError("sh:targetNode must be an IRI")
            targets.append(t.o)
        for t in g.find(node, SH_PROPERTY, None):
            constraints.append(_parse_constraint(g, t.o))
        if isinstance(node, Iri):
            name = node.value
        else:
            name = "_:" + node.label
        shapes.append(Shape(name, target_class, tuple(sorted(targets, key=lambda i: i.value)),
                            tuple(constraints)))
    return shapes


def _parse_constraint(g: Graph, node: Term) -> PropertyConstraint:
    paths = [t.o for t in g.find(node, SH_PATH, None)]
    if len(paths) != 1 or not isinstance(paths[0], Iri):
        raise ShapeParseError("every property constraint needs exactly one sh:path IRI")
    min_count = max_count = None
    datatype = cls = None
    has_value = None
    for t in g.find(node, SH_MIN_COUNT, None):
        min_count = _as_int(t.o, "sh:minCount")
    for t in g.find(node, SH_MAX_COUNT, None):
        max_count = _as_int(t.o, "sh:maxCount")
    for t in g.find(node, SH_DATATYPE, None):
        if not isinstance(t.o, Iri):
            raise ShapeParseError("sh:datatype must be an IRI")
        datatype = t.o
    for t in g.find(node, SH_CLASS, None):
        if not isinstance(t.o, Iri):
            raise ShapeParseError("sh:class must be an IRI")
        cls = t.o
    for t in g.find(node, SH_HAS_VALUE, None):
        has_value = t.o
    if min_count is not None and max_count is not None and min_count > max_count:
        raise ShapeParseError("sh:minCount %d exceeds sh:maxCount %d"
                              % (min_count, max_count))
    return PropertyConstraint(paths[0], min_count, max_count, datatype, cls, has_value)


def validate(g: Graph, shapes: Sequence[Shape],
             regime: EntailmentRegime = Simple()) -> ValidationReport:
    """Check every focus node of every shape; conforms iff no violations.
    Focus nodes of a class target are the class's extension after regime
    saturation, so subclass members are covered under ClassHierarchy."""
    entailed = saturate(KnowledgeBase([], g), regime)
    violations: List[ShaclViolation] = []
    for shape in shapes:
        focus: List[Term] = list(shape.target_nodes)
        if shape.target_class is not None:
            focus.extend(sorted(extension(entailed, Atomic(shape.target_class)),
                                key=lambda n: getattr(n, "value", getattr(n, "label", ""))))
        for node in focus:
            for c in shape.constraints:
                values = [t.o for t in entailed.find(node, c.path, None)]
                n = len(values)
                if c.min_count is not None and n < c.min_count:
                    violations.append(ShaclViolation(
                        node, c.path, "found %d values, requires at least %d"
                        % (n, c.min_count)))
                if c.max_count is not None and n > c.max_count:
                    violations.append(ShaclViolation(
                        node, c.path, "found %d values, allows at most %d"
                        % (n, c.max_count)))
                if c.datatype is not None:
                    for v in values:
                        if not isinstance(v, Literal) or v.datatype != c.datatype.value:
                            violations.append(ShaclViolation(
                                node, c.path, "value %s is not a %s literal"
                                % (v, c.datatype.value)))
                if c.cls is not None:
                    members = extension(entailed, Atomic(c.cls))
                    for v in values:
                        if v not in members:
                            violations.append(ShaclViolation(
                                node, c.path, "value %s is not a %s"
                                % (v, c.cls.value)))
                if c.has_value is not None and c.has_value not in values:
                    violations.append(ShaclViolation(
                        node, c.path, "required value %s is missing" % (c.has_value,)))
    return ValidationReport(not violations, violations)
