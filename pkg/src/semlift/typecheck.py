"""Static type checking.

Builds the subtype hierarchy over program types, checks statements and
expressions, and discharges the reflection obligations: a member() concept
must be subsumed by the target element class, and an access() query must be
contained in the target element type after approximating its parameters with
their static types. The knowledge base used for these checks is the builtin
vocabulary plus the user-supplied domain axioms plus the lifted class table;
guarded linkage text contributes nothing, only unconditional structure is
trusted.

All rejections carry a fixed error kind. The reflection checks are sound but
not complete: a rejection means "not provable", not "false".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .lifting import LiftingConfig, lift_class, lift_list_vocabulary, xsd_map
from .ontology import (
    Atomic, Axiom, ClassHierarchy, Concept, DataPropertyDecl, DataRange,
    EntailmentRegime, LiteralRange, ManchesterSyntaxError, ObjectPropertyDecl,
    SMOL_LIST, Thing, builtin_smol_ontology, parse_concept_expression,
    subsumes,
)
from .rdf import DOMAIN_NS, Iri, PROG_NS, RDF_TYPE
from .shacl import ShapeParseError, parse_shapes
from .sparql import (
    Param, ParameterError, SelectQuery, SparqlSyntaxError, TriplePattern, Var,
    contained_in, parse_query, substitute_params,
)
from .syntax import (
    AccessExpr, AssignStmt, BOOLEAN, BasicType, BinOp, BoolLit, CallStmt,
    ClassTable, ClassType, ConsExpr, DestroyStmt, DOUBLE, DoubleLit,
    ENTRY_CLASS, Expr, FieldAccess, INT, IfStmt, IntLit, Linkage, ListType,
    MemberExpr, MethodCall, MethodDecl, New, Not, NullLit, Program, RHS,
    ReturnStmt, STRING, SkipStmt, SmolTypeError, Stmt, StringLit, This, Type,
    UNIT, UnitLit, ValidateExpr, VarDeclStmt, VarRef, WhileStmt,
    build_class_table, type_name,
)

__all__ = [
    "TOP", "BOT", "OBJECT", "StaticType", "TypeHierarchy", "TypingEnvironment",
    "build_hierarchy", "reflection_tbox", "typecheck_program", "type_member",
    "type_access", "mu_concept",
]


@dataclass(frozen=True)
class TopType:
    def __repr__(self):
        return "Top"


@dataclass(frozen=True)
class BotType:
    def __repr__(self):
        return "Bot"


@dataclass(frozen=True)
class ErrorType:
    """Recovery type after a reported error; compatible with everything so a
    single fault does not cascade."""

    def __repr__(self):
        return "<error>"


TOP = TopType()
BOT = BotType()
ERROR = ErrorType()
OBJECT = ClassType("Object")

StaticType = Union[Type, TopType, BotType, ErrorType]

BASIC = (INT, BOOLEAN, UNIT, STRING, DOUBLE)

_FIELD_REF = re.compile(r"%([A-Za-z_][A-Za-z0-9_]*)")


def is_reference(t: StaticType) -> bool:
    return isinstance(t, (ClassType, ListType))


# ---------------------------------------------------------------------------
# Hierarchy
# ---------------------------------------------------------------------------


class TypeHierarchy:
    """The minimal partial order over program types: everything below Top,
    Bot below everything, declared classes below Object, lists covariant.
    Basic types relate only to Top and Bot."""

    def __init__(self, table: ClassTable):
        self.table = table
        self._class_names = sorted(
            name for name, info in table.classes.items() if info.list_elem is None)

    def defined(self, t: StaticType) -> bool:
        if isinstance(t, BasicType):
            return t in BASIC
        if isinstance(t, ClassType):
            return t == OBJECT or (
                t.name in self.table and self.table.info(t.name).list_elem is None)
        if isinstance(t, ListType):
            return self.defined(t.elem)
        return isinstance(t, (TopType, BotType))

    def subtype(self, a: StaticType, b: StaticType) -> bool:
        if isinstance(a, ErrorType) or isinstance(b, ErrorType):
            return True
        if a == b or isinstance(b, TopType) or isinstance(a, BotType):
            return True
        if isinstance(a, ClassType) and isinstance(b, ClassType):
            if b == OBJECT:
                return a == OBJECT or a.name in self.table
            cur: Optional[str] = a.name
            seen: Set[str] = set()
            while cur is not None and cur in self.table:
                if cur == b.name:
                    return True
                if cur in seen:
                    raise SmolTypeError("cycle", cur, "class extends itself")
                seen.add(cur)
                cur = self.table.info(cur).superclass
            return False
        if isinstance(a, ListType) and isinstance(b, ListType):
            return self.subtype(a.elem, b.elem)
        return False

    def lub(self, a: StaticType, b: StaticType) -> StaticType:
        if self.subtype(a, b):
            return b
        if self.subtype(b, a):
            return a
        if isinstance(a, ClassType) and isinstance(b, ClassType):
            cur: Optional[str] = a.name
            while cur is not None and cur in self.table:
                if self.subtype(b, ClassType(cur)):
                    return ClassType(cur)
                cur = self.table.info(cur).superclass
            return OBJECT
        if isinstance(a, ListType) and isinstance(b, ListType):
            return ListType(self.lub(a.elem, b.elem))  # type: ignore[arg-type]
        return TOP

    def elements(self) -> Tuple[StaticType, ...]:
        """The finite carrier induced by the table: every named class, every
        materialized list type, the basic types and the bounds."""
        out: List[StaticType] = [TOP, BOT, OBJECT]
        out.extend(BASIC)
        out.extend(ClassType(n) for n in self._class_names)
        for name, info in sorted(self.table.classes.items()):
            if info.list_elem is not None:
                out.append(ListType(info.list_elem))
        return tuple(out)


def build_hierarchy(table: ClassTable) -> TypeHierarchy:
    """Checks the extends relation is acyclic and every named superclass is
    present, then wraps the table in the subtype order."""
    for name, info in table.classes.items():
        seen = [name]
        cur = info.superclass
        while cur is not None:
            if cur not in table:
                raise SmolTypeError("unknown-type", name,
                                    "superclass %s is not declared" % cur)
            if cur in seen:
                raise SmolTypeError(
                    "cycle", name,
                    "inheritance cycle: %s" % " -> ".join(seen + [cur]))
            seen.append(cur)
            cur = table.info(cur).superclass
    return TypeHierarchy(table)


# ---------------------------------------------------------------------------
# Typing environments
# ---------------------------------------------------------------------------


class TypingEnvironment:
    """Immutable map from names (variables, fields, this) to static types;
    bind() returns a new environment and never mutates the receiver."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Optional[Dict[str, StaticType]] = None):
        self._bindings: Dict[str, StaticType] = dict(bindings or {})

    def bind(self, name: str, t: StaticType) -> "TypingEnvironment":
        child = dict(self._bindings)
        child[name] = t
        return TypingEnvironment(child)

    def lookup(self, name: str) -> Optional[StaticType]:
        return self._bindings.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._bindings

    def names(self) -> Tuple[str, ...]:
        return tuple(sorted(self._bindings))


# ---------------------------------------------------------------------------
# The reflection knowledge base
# ---------------------------------------------------------------------------


def reflection_tbox(table: ClassTable,
                    domain_tbox: Sequence[Axiom] = ()) -> List[Axiom]:
    """Builtin vocabulary + domain axioms + the lifted class table. Domain
    fields contribute range axioms in the domain: vocabulary so queries over
    user-visible state can be typed; guarded linkage text is never trusted."""
    cfg = LiftingConfig(punning=True)
    axioms: List[Axiom] = list(builtin_smol_ontology())
    axioms.extend(domain_tbox)
    for name in sorted(table.classes):
        axioms.extend(lift_class(name, table, cfg))
        for f in table.info(name).own_fields:
            if f.modifier != "domain":
                continue
            prop = Iri(DOMAIN_NS + f.name)
            if isinstance(f.type, BasicType):
                axioms.append(DataPropertyDecl(prop, None, DataRange(xsd_map(f.type).value)))
            elif isinstance(f.type, ListType):
                axioms.append(ObjectPropertyDecl(prop, None, Atomic(SMOL_LIST)))
            elif f.type == OBJECT:
                axioms.append(ObjectPropertyDecl(prop, None, Thing()))
            else:
                axioms.append(ObjectPropertyDecl(
                    prop, None, Atomic(Iri(PROG_NS + f.type.name))))
    axioms.extend(lift_list_vocabulary(table, cfg))
    return axioms


def mu_concept(t: StaticType) -> Optional[Concept]:
    """The concept a target element type lifts to: classes to their prog:
    name, Object to Thing, basic value types to datatype ranges, lists to the
    builtin list class. None for types with no graph counterpart."""
    if isinstance(t, ClassType):
        if t == OBJECT:
            return Thing()
        return Atomic(Iri(PROG_NS + t.name))
    if isinstance(t, ListType):
        return Atomic(SMOL_LIST)
    if isinstance(t, BasicType) and t in (INT, BOOLEAN, STRING, DOUBLE):
        return LiteralRange(DataRange(xsd_map(t).value))
    return None


# ---------------------------------------------------------------------------
# Reflection checks
# ---------------------------------------------------------------------------


def type_member(concept_text: str, target_elem_class: str,
                tbox: Sequence[Axiom]) -> Optional[SmolTypeError]:
    """member(dl) into List<C> is well-typed iff dl is provably subsumed by
    prog:C."""
    try:
        concept = parse_concept_expression(concept_text)
    except ManchesterSyntaxError as e:
        return SmolTypeError("malformed-concept", "member", str(e))
    target = Atomic(Iri(PROG_NS + target_elem_class))
    if subsumes(tbox, concept, target):
        return None
    return SmolTypeError(
        "reflection-subsumption", "member",
        "concept %s is not provably subsumed by prog:%s"
        % (concept_text.strip(), target_elem_class))


def type_access(query_text: str, param_types: Sequence[StaticType],
                target_elem_type: StaticType,
                tbox: Sequence[Axiom]) -> Optional[SmolTypeError]:
    """access(q, args) into List<T> is well-typed iff q, with each %i
    approximated by a fresh variable typed at the static type of the i-th
    argument, is provably contained in the lifting of T."""
    try:
        query = parse_query(query_text)
    except SparqlSyntaxError as e:
        return SmolTypeError("malformed-query", "access", str(e))
    if len(query.variables) != 1:
        return SmolTypeError(
            "malformed-query", "access",
            "expected exactly one answer variable, found %d" % len(query.variables))

    target = mu_concept(target_elem_type)
    if target is None:
        return SmolTypeError(
            "reflection-containment", "access",
            "%s values have no graph representation" % type_name(target_elem_type))  # type: ignore[arg-type]

    used = {t.name for p in query.patterns for t in p.terms() if isinstance(t, Var)}
    fresh_vars: Dict[int, Var] = {}
    for i in sorted(query.params()):
        name = "pv%d" % i
        while name in used:
            name += "_"
        used.add(name)
        fresh_vars[i] = Var(name)
    n = max(fresh_vars) if fresh_vars else 0
    if n > len(param_types):
        return SmolTypeError(
            "arity", "access",
            "query uses %%%d but only %d arguments are given" % (n, len(param_types)))
    try:
        query = substitute_params(
            query, [fresh_vars.get(i + 1, Var("pv%d" % (i + 1)))
                    for i in range(len(param_types))])
    except ParameterError as e:
        return SmolTypeError("arity", "access", str(e))

    approx: List[TriplePattern] = []
    for i, var in sorted(fresh_vars.items()):
        pt = param_types[i - 1]
        cls = mu_concept(pt)
        if isinstance(cls, Atomic):
            approx.append(TriplePattern(var, Iri(RDF_TYPE), cls.iri))
        # literal-typed and Object-typed parameters add no class atom: the
        # property ranges in the tbox already bound what they can match
    widened = SelectQuery(query.variables, query.patterns + tuple(approx),
                          query.filters)
    if contained_in(widened, target, tbox):
        return None
    return SmolTypeError(
        "reflection-containment", "access",
        "query answers are not provably of type %s" % type_name(target_elem_type))  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------


_ARITH = {"+", "-", "*", "/"}
_COMPARE = {"<", "<=", ">", ">="}
_EQUALITY = {"==", "!="}
_LOGIC = {"&&", "||"}


class _Checker:
    def __init__(self, table: ClassTable, hierarchy: TypeHierarchy,
                 tbox: Sequence[Axiom]):
        self.table = table
        self.hierarchy = hierarchy
        self.tbox = tbox
        self.errors: List[SmolTypeError] = []

    def err(self, kind: str, line: int, message: str):
        self.errors.append(SmolTypeError(kind, "line %d" % line, message))

    # types ------------------------------------------------------------

    def require_defined(self, t: Type, line: int, what: str) -> bool:
        if self.hierarchy.defined(t):
            return True
        self.err("unknown-type", line, "%s has undeclared type %s" % (what, type_name(t)))
        return False

    def assignable(self, src: StaticType, dst: StaticType) -> bool:
        if isinstance(src, ErrorType) or isinstance(dst, ErrorType):
            return True
        if isinstance(src, BotType):
            return is_reference(dst) or isinstance(dst, TopType)
        return self.hierarchy.subtype(src, dst)

    def check_assignable(self, src: StaticType, dst: StaticType, line: int,
                         what: str) -> None:
        if self.assignable(src, dst):
            return
        if isinstance(src, BotType):
            self.err("assignment", line,
                     "%s: null is not a value of type %s" % (what, type_name(dst)))  # type: ignore[arg-type]
        else:
            self.err("assignment", line, "%s: %s is not a subtype of %s"
                     % (what, type_name(src), type_name(dst)))  # type: ignore[arg-type]

    # expressions --------------------------------------------------------

    def type_expr(self, e: Expr, env: TypingEnvironment, line: int) -> StaticType:
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, DoubleLit):
            return DOUBLE
        if isinstance(e, BoolLit):
            return BOOLEAN
        if isinstance(e, StringLit):
            return STRING
        if isinstance(e, UnitLit):
            return UNIT
        if isinstance(e, NullLit):
            return BOT
        if isinstance(e, This):
            t = env.lookup("this")
            if t is None:
                self.err("unknown-type", line, "this is not available in the main block")
                return ERROR
            return t
        if isinstance(e, VarRef):
            t = env.lookup(e.name)
            if t is None:
                self.err("unknown-type", line, "undefined variable %s" % e.name)
                return ERROR
            return t
        if isinstance(e, FieldAccess):
            return self.type_field_access(e, env, line)
        if isinstance(e, BinOp):
            return self.type_binop(e, env, line)
        if isinstance(e, Not):
            t = self.type_expr(e.expr, env, line)
            if not self.assignable(t, BOOLEAN) or isinstance(t, BotType):
                self.err("assignment", line,
                         "operator ! expects Boolean, found %s" % type_name(t))  # type: ignore[arg-type]
            return BOOLEAN
        raise AssertionError("unhandled expression %r" % (e,))

    def type_field_access(self, e: FieldAccess, env: TypingEnvironment,
                          line: int) -> StaticType:
        t = self.type_expr(e.target, env, line)
        if isinstance(t, ErrorType):
            return ERROR
        if isinstance(t, ListType):
            key = type_name(t)
            self.table.ensure_list_class(t.elem)
            info = self.table.info(key)
            f = info.field(e.field)
            if f is None:
                self.err("unknown-type", line, "%s has no field %s" % (key, e.field))
                return ERROR
            return f.type
        if isinstance(t, ClassType) and t != OBJECT and t.name in self.table:
            f = self.table.info(t.name).field(e.field)
            if f is None:
                self.err("unknown-type", line,
                         "class %s has no field %s" % (t.name, e.field))
                return ERROR
            return f.type
        self.err("assignment", line,
                 "field access on a value of type %s" % type_name(t))  # type: ignore[arg-type]
        return ERROR

    def type_binop(self, e: BinOp, env: TypingEnvironment, line: int) -> StaticType:
        lt = self.type_expr(e.left, env, line)
        rt = self.type_expr(e.right, env, line)
        if isinstance(lt, ErrorType) or isinstance(rt, ErrorType):
            return ERROR if e.op in _ARITH else BOOLEAN
        if e.op in _ARITH:
            if lt == rt and lt in (INT, DOUBLE):
                return lt
            self.err("assignment", line,
                     "operator %s expects two Ints or two Doubles, found %s and %s"
                     % (e.op, type_name(lt), type_name(rt)))  # type: ignore[arg-type]
            return ERROR
        if e.op in _COMPARE:
            if not (lt == rt and lt in (INT, DOUBLE)):
                self.err("assignment", line,
                         "operator %s expects two Ints or two Doubles, found %s and %s"
                         % (e.op, type_name(lt), type_name(rt)))  # type: ignore[arg-type]
            return BOOLEAN
        if e.op in _EQUALITY:
            if not (self.assignable(lt, rt) or self.assignable(rt, lt)):
                self.err("assignment", line,
                         "operator %s expects comparable operands, found %s and %s"
                         % (e.op, type_name(lt), type_name(rt)))  # type: ignore[arg-type]
            return BOOLEAN
        if e.op in _LOGIC:
            for side in (lt, rt):
                if side != BOOLEAN:
                    self.err("assignment", line,
                             "operator %s expects Boolean operands, found %s"
                             % (e.op, type_name(side)))  # type: ignore[arg-type]
            return BOOLEAN
        raise AssertionError("unhandled operator %s" % e.op)

    def type_call(self, call: MethodCall, env: TypingEnvironment,
                  line: int) -> StaticType:
        t = self.type_expr(call.target, env, line)
        if isinstance(t, ErrorType):
            return ERROR
        if not isinstance(t, ClassType) or t == OBJECT or t.name not in self.table:
            self.err("assignment", line,
                     "method call on a value of type %s" % type_name(t))  # type: ignore[arg-type]
            return ERROR
        m = self.table.method(t.name, call.method)
        if m is None:
            self.err("unknown-type", line,
                     "class %s has no method %s" % (t.name, call.method))
            return ERROR
        if len(call.args) != len(m.params):
            self.err("arity", line,
                     "%s.%s takes %d arguments, got %d"
                     % (t.name, call.method, len(m.params), len(call.args)))
            return m.return_type
        for (pt, pname), arg in zip(m.params, call.args):
            at = self.type_expr(arg, env, line)
            self.check_assignable(at, pt, line,
                                  "argument %s of %s.%s" % (pname, t.name, call.method))
        return m.return_type

    # right-hand sides ---------------------------------------------------

    def type_rhs(self, rhs: RHS, env: TypingEnvironment, line: int,
                 target: Optional[StaticType]) -> StaticType:
        if isinstance(rhs, New):
            return self.type_new(rhs, env, line)
        if isinstance(rhs, MethodCall):
            return self.type_call(rhs, env, line)
        if isinstance(rhs, ConsExpr):
            return self.type_cons(rhs, env, line, target)
        if isinstance(rhs, AccessExpr):
            return self.type_access_rhs(rhs, env, line, target)
        if isinstance(rhs, MemberExpr):
            return self.type_member_rhs(rhs, line, target)
        if isinstance(rhs, ValidateExpr):
            try:
                parse_shapes(rhs.shapes)
            except ShapeParseError as e:
                self.err("malformed-shape", line, str(e))
            return BOOLEAN
        return self.type_expr(rhs, env, line)

    def type_new(self, rhs: New, env: TypingEnvironment, line: int) -> StaticType:
        if rhs.class_name not in self.table or rhs.class_name == ENTRY_CLASS \
                or self.table.info(rhs.class_name).list_elem is not None:
            self.err("unknown-type", line, "undeclared class %s" % rhs.class_name)
            return ERROR
        info = self.table.info(rhs.class_name)
        if len(rhs.args) != len(info.ctor_order):
            self.err("arity", line,
                     "constructor of %s takes %d arguments, got %d"
                     % (rhs.class_name, len(info.ctor_order), len(rhs.args)))
        else:
            for fname, arg in zip(info.ctor_order, rhs.args):
                ft = info.field(fname).type  # type: ignore[union-attr]
                at = self.type_expr(arg, env, line)
                self.check_assignable(at, ft, line,
                                      "constructor argument %s of %s"
                                      % (fname, rhs.class_name))
        if rhs.linkage is not None:
            self.check_linkage(rhs.linkage, rhs.class_name, line)
        return ClassType(rhs.class_name)

    def type_cons(self, rhs: ConsExpr, env: TypingEnvironment, line: int,
                  target: Optional[StaticType]) -> StaticType:
        if not isinstance(target, ListType):
            self.err("assignment", line,
                     "Cons builds a list; the target has type %s"
                     % (type_name(target) if target is not None else "<none>"))  # type: ignore[arg-type]
            self.type_expr(rhs.head, env, line)
            self.type_expr(rhs.tail, env, line)
            return ERROR
        ht = self.type_expr(rhs.head, env, line)
        tt = self.type_expr(rhs.tail, env, line)
        self.check_assignable(ht, target.elem, line, "list head")
        self.check_assignable(tt, target, line, "list tail")
        return target

    def type_access_rhs(self, rhs: AccessExpr, env: TypingEnvironment,
                        line: int, target: Optional[StaticType]) -> StaticType:
        if not isinstance(target, ListType):
            self.err("assignment", line,
                     "access loads its answers into a List, the target has type %s"
                     % (type_name(target) if target is not None else "<none>"))  # type: ignore[arg-type]
            return ERROR
        if isinstance(target.elem, BasicType) and target.elem == UNIT:
            self.err("reflection-containment", line,
                     "Unit values have no graph representation")
            return target
        arg_types = [self.type_expr(a, env, line) for a in rhs.args]
        failure = type_access(rhs.query, arg_types, target.elem, self.tbox)
        if failure is not None:
            self.errors.append(SmolTypeError(
                failure.kind, "line %d" % line,
                failure.message + ("" if failure.kind.startswith("malformed")
                                   or failure.kind == "arity"
                                   else " (not provable)")))
        return target

    def type_member_rhs(self, rhs: MemberExpr, line: int,
                        target: Optional[StaticType]) -> StaticType:
        ok_target = (isinstance(target, ListType)
                     and isinstance(target.elem, ClassType)
                     and target.elem != OBJECT
                     and target.elem.name in self.table
                     and self.table.info(target.elem.name).list_elem is None)
        if not ok_target:
            self.err("assignment", line,
                     "member loads its answers into a List of a declared class, "
                     "the target has type %s"
                     % (type_name(target) if target is not None else "<none>"))  # type: ignore[arg-type]
            return ERROR
        failure = type_member(rhs.concept, target.elem.name, self.tbox)  # type: ignore[union-attr]
        if failure is not None:
            self.errors.append(SmolTypeError(
                failure.kind, "line %d" % line,
                failure.message + ("" if failure.kind == "malformed-concept"
                                   else " (not provable)")))
        return target

    def check_linkage(self, linkage: Linkage, class_name: str, line: int):
        fields = {f.name for f in self.table.fields(class_name)}
        env = TypingEnvironment({"this": ClassType(class_name)})
        for clause in linkage.clauses:
            if clause.guard is not None:
                gt = self.type_expr(clause.guard, env, line)
                if not isinstance(gt, ErrorType) and gt != BOOLEAN:
                    self.err("guard-not-boolean", line,
                             "linkage guard must be Boolean, found %s" % type_name(gt))  # type: ignore[arg-type]
            for m in _FIELD_REF.finditer(clause.text):
                if m.group(1) not in fields:
                    self.err("unknown-type", line,
                             "linkage of %s references unknown field %s"
                             % (class_name, m.group(1)))

    # statements ----------------------------------------------------------

    def type_stmts(self, stmts: Sequence[Stmt],
                   env: TypingEnvironment) -> StaticType:
        result: StaticType = UNIT
        for i, s in enumerate(stmts):
            t, env = self.type_stmt(s, env)
            if i + 1 < len(stmts) and t != UNIT and not isinstance(t, ErrorType):
                self.err("branch-mismatch", s.line,
                         "unreachable code after a value-returning statement")
            result = t
        return result

    def type_stmt(self, s: Stmt,
                  env: TypingEnvironment) -> Tuple[StaticType, TypingEnvironment]:
        if isinstance(s, VarDeclStmt):
            self.require_defined(s.type, s.line, "variable %s" % s.name)
            if s.name in env:
                self.err("duplicate-field", s.line,
                         "variable %s is already declared" % s.name)
            t = self.type_rhs(s.rhs, env, s.line, s.type)
            self.check_assignable(t, s.type, s.line, "initializer of %s" % s.name)
            return UNIT, env.bind(s.name, s.type)
        if isinstance(s, AssignStmt):
            if isinstance(s.target, VarRef):
                lt = env.lookup(s.target.name)
                if lt is None:
                    self.err("unknown-type", s.line,
                             "undefined variable %s" % s.target.name)
                    lt = ERROR
            else:
                lt = self.type_field_access(s.target, env, s.line)
            t = self.type_rhs(s.rhs, env, s.line, lt)
            self.check_assignable(t, lt, s.line, "assignment")
            return UNIT, env
        if isinstance(s, IfStmt):
            gt = self.type_expr(s.cond, env, s.line)
            if not isinstance(gt, ErrorType) and gt != BOOLEAN:
                self.err("guard-not-boolean", s.line,
                         "if guard must be Boolean, found %s" % type_name(gt))  # type: ignore[arg-type]
            tt = self.type_stmts(s.then, env)
            et = self.type_stmts(s.els, env)
            if tt != et and not isinstance(tt, ErrorType) and not isinstance(et, ErrorType):
                self.err("branch-mismatch", s.line,
                         "branches have different types: %s and %s"
                         % (type_name(tt), type_name(et)))  # type: ignore[arg-type]
            return tt, env
        if isinstance(s, WhileStmt):
            gt = self.type_expr(s.cond, env, s.line)
            if not isinstance(gt, ErrorType) and gt != BOOLEAN:
                self.err("guard-not-boolean", s.line,
                         "while guard must be Boolean, found %s" % type_name(gt))  # type: ignore[arg-type]
            bt = self.type_stmts(s.body, env)
            if bt != UNIT and not isinstance(bt, ErrorType):
                self.err("branch-mismatch", s.line,
                         "loop body must have type Unit, found %s" % type_name(bt))  # type: ignore[arg-type]
            return UNIT, env
        if isinstance(s, SkipStmt):
            return UNIT, env
        if isinstance(s, ReturnStmt):
            return self.type_expr(s.expr, env, s.line), env
        if isinstance(s, CallStmt):
            self.type_call(s.call, env, s.line)
            return UNIT, env
        if isinstance(s, DestroyStmt):
            t = self.type_expr(s.expr, env, s.line)
            if not (is_reference(t) or isinstance(t, (BotType, ErrorType))):
                self.err("assignment", s.line,
                         "destroy expects an object, found %s" % type_name(t))  # type: ignore[arg-type]
            return UNIT, env
        raise AssertionError("unhandled statement %r" % (s,))

    # declarations ----------------------------------------------------------

    def check_method(self, class_name: str, m: MethodDecl):
        self.require_defined(m.return_type, m.line,
                             "return type of %s.%s" % (class_name, m.name))
        env = TypingEnvironment()
        for f in self.table.fields(class_name):
            env = env.bind(f.name, f.type)
        env = env.bind("this", ClassType(class_name))
        seen: Set[str] = set()
        for pt, pname in m.params:
            self.require_defined(pt, m.line,
                                 "parameter %s of %s.%s" % (pname, class_name, m.name))
            if pname in seen or pname in env:
                self.err("duplicate-field", m.line,
                         "parameter %s of %s.%s collides with another binding"
                         % (pname, class_name, m.name))
            seen.add(pname)
            env = env.bind(pname, pt)
        body = self.table.method(class_name, m.name)
        stmts = body.body if body is not None else m.body
        t = self.type_stmts(stmts, env)
        if isinstance(t, ErrorType):
            return
        if self.assignable(t, m.return_type):
            return
        if t == UNIT and not (stmts and isinstance(stmts[-1], ReturnStmt)):
            self.err("branch-mismatch", m.line,
                     "%s.%s must end in a return of type %s"
                     % (class_name, m.name, type_name(m.return_type)))
        else:
            self.err("assignment", m.line,
                     "%s.%s returns %s, declared %s"
                     % (class_name, m.name, type_name(t), type_name(m.return_type)))  # type: ignore[arg-type]

    def check_program(self, p: Program):
        for c in p.classes:
            for f in c.fields:
                self.require_defined(f.type, c.line,
                                     "field %s of %s" % (f.name, c.name))
            if c.linkage is not None:
                self.check_linkage(c.linkage, c.name, c.line)
            for m in c.methods:
                self.check_method(c.name, m)
        t = self.type_stmts(p.main, TypingEnvironment())
        if t != UNIT and not isinstance(t, ErrorType):
            self.err("branch-mismatch",
                     p.main[-1].line if p.main else 0,
                     "the main block must have type Unit, found %s" % type_name(t))  # type: ignore[arg-type]


def typecheck_program(p: Program, domain_tbox: Sequence[Axiom] = (),
                      regime: EntailmentRegime = ClassHierarchy()
                      ) -> List[SmolTypeError]:
    """Checks the whole program; returns the collected errors, empty when the
    program is well-typed. The regime the program will run under is accepted
    for uniformity; the subsumption core is sound for both regimes, so the
    verdict does not depend on it."""
    try:
        table = build_class_table(p)
    except SmolTypeError as e:
        return [e]
    try:
        hierarchy = build_hierarchy(table)
    except SmolTypeError as e:
        return [e]
    tbox = reflection_tbox(table, domain_tbox)
    checker = _Checker(table, hierarchy, tbox)
    checker.check_program(p)
    return checker.errors
