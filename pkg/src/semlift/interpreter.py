"""Small-step interpreter over runtime configurations.

Each transition rule rewrites the top process of the stack. Rules that
produce a value (new, cons, return, validate, member, access) reduce to an
assignment statement whose right-hand side is the computed value, so every
observable effect takes exactly one extra assignment step. The module also
types whole runtime configurations, which the subject-reduction tests run
after every step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .lifting import (
    LiftingConfig, lift_configuration, render_axioms, value_term,
)
from .ontology import (
    Axiom, ClassHierarchy, EntailmentRegime, InconsistentKbError,
    KnowledgeBase, ManchesterSyntaxError, Simple, members,
    parse_concept_expression,
)
from .rdf import Graph, Iri, Literal, Term, literal_value
from .shacl import ShapeParseError, parse_shapes, validate
from .sparql import (
    GraphSource, SparqlSyntaxError, evaluate, parse_query, substitute_params,
)
from .state import (
    ObjRef, ObjectState, Process, RuntimeConfiguration, RuntimeValue,
    UNIT_VALUE, UnitValue, Value, WaitingStmt,
)
from .syntax import (
    AccessExpr, AssignStmt, BinOp, BOOLEAN, BoolLit, CallStmt, ClassType,
    ConsExpr, DestroyStmt, DOUBLE, DoubleLit, ENTRY_CLASS, ENTRY_METHOD, Expr,
    FieldAccess, INT, IfStmt, IntLit, ListType, MemberExpr, MethodCall, New,
    Not, NullLit, Program, ReturnStmt, STRING, SkipStmt, SmolTypeError,
    StringLit, Stmt, This, Type, UNIT, UnitLit, ValidateExpr, VarDeclStmt,
    VarRef, WhileStmt, build_class_table, type_name,
)
from .typecheck import (
    BOT, ERROR, OBJECT, StaticType, TypeHierarchy, TypingEnvironment,
    _Checker, build_hierarchy, reflection_tbox,
)

__all__ = [
    "SmolRuntimeError", "StepOutcome", "RunResult", "Interpreter",
    "init", "eval_expr", "listify", "step", "run", "typecheck_configuration",
]


class SmolRuntimeError(Exception):
    """A trapped runtime fault. Kinds: null-dereference, unbound-location,
    listify-mixed, inconsistent-kb, arity, destroyed-access, step-limit and
    stuck (no transition rule applies)."""

    def __init__(self, kind: str, message: str):
        super().__init__("%s: %s" % (kind, message))
        self.kind = kind
        self.message = message


@dataclass
class StepOutcome:
    status: str  # "step" | "terminated" | "error"
    rule: Optional[str] = None
    error: Optional[SmolRuntimeError] = None


@dataclass
class RunResult:
    status: str  # "terminated" | "error"
    steps: int
    error: Optional[SmolRuntimeError] = None


# ---------------------------------------------------------------------------
# Initial configuration
# ---------------------------------------------------------------------------


def init(p: Program) -> RuntimeConfiguration:
    """One Entry object with an empty store and one process running the main
    block (wrapped as Entry.entry by the class table builder)."""
    table = build_class_table(p)
    conf = RuntimeConfiguration(table)
    ref = conf.allocate(ENTRY_CLASS, {})
    body = table.method(ENTRY_CLASS, ENTRY_METHOD)
    assert body is not None
    conf.processes.append(Process(ENTRY_METHOD, ref, list(body.body)))
    return conf


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------


def _is_number(v: Value) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _require_bool(v: Value, what: str) -> bool:
    if not isinstance(v, bool):
        raise SmolRuntimeError("stuck", "%s did not evaluate to a Boolean, got %r"
                               % (what, v))
    return v


def eval_expr(e: Union[Expr, RuntimeValue], self_ref: ObjRef,
              store: Dict[str, Value], conf: RuntimeConfiguration) -> Value:
    if isinstance(e, RuntimeValue):
        return e.value
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, DoubleLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, StringLit):
        return e.value
    if isinstance(e, NullLit):
        return None
    if isinstance(e, UnitLit):
        return UNIT_VALUE
    if isinstance(e, This):
        return self_ref
    if isinstance(e, VarRef):
        if e.name not in store:
            raise SmolRuntimeError("unbound-location",
                                   "variable %s is not bound" % e.name)
        return store[e.name]
    if isinstance(e, FieldAccess):
        target = eval_expr(e.target, self_ref, store, conf)
        ob = _deref(target, conf, "field access .%s" % e.field)
        if e.field not in ob.fields:
            raise SmolRuntimeError("unbound-location",
                                   "%s has no field %s" % (ob.class_name, e.field))
        return ob.fields[e.field]
    if isinstance(e, BinOp):
        return _eval_binop(e, self_ref, store, conf)
    if isinstance(e, Not):
        return not _require_bool(eval_expr(e.expr, self_ref, store, conf),
                                 "operand of !")
    raise SmolRuntimeError("stuck", "cannot evaluate %r" % (e,))


def _deref(v: Value, conf: RuntimeConfiguration, what: str) -> ObjectState:
    if v is None:
        raise SmolRuntimeError("null-dereference", "%s on null" % what)
    if not isinstance(v, ObjRef):
        raise SmolRuntimeError("stuck", "%s on a literal %r" % (what, v))
    if v.n not in conf.heap:
        raise SmolRuntimeError("destroyed-access",
                               "%s on destroyed object obj%d" % (what, v.n))
    return conf.heap[v.n]


def _values_equal(a: Value, b: Value) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if type(a) is not type(b):
        return False
    return a == b


def _eval_binop(e: BinOp, self_ref: ObjRef, store: Dict[str, Value],
                conf: RuntimeConfiguration) -> Value:
    if e.op in ("&&", "||"):
        left = _require_bool(eval_expr(e.left, self_ref, store, conf),
                             "left operand of %s" % e.op)
        if e.op == "&&" and not left:
            return False
        if e.op == "||" and left:
            return True
        return _require_bool(eval_expr(e.right, self_ref, store, conf),
                             "right operand of %s" % e.op)
    left = eval_expr(e.left, self_ref, store, conf)
    right = eval_expr(e.right, self_ref, store, conf)
    if e.op == "==":
        return _values_equal(left, right)
    if e.op == "!=":
        return not _values_equal(left, right)
    if not (_is_number(left) and _is_number(right)
            and isinstance(left, type(right))):
        raise SmolRuntimeError("stuck", "operator %s needs two numbers of the "
                               "same type, got %r and %r" % (e.op, left, right))
    if e.op in ("<", "<=", ">", ">="):
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right}[e.op]
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return left * right
    if e.op == "/":
        if right == 0:
            raise SmolRuntimeError("stuck", "division by zero")
        if isinstance(left, int):
            q = abs(left) // abs(right)  # truncate toward zero
            return q if (left >= 0) == (right >= 0) else -q
        return left / right
    raise SmolRuntimeError("stuck", "unknown operator %s" % e.op)


# ---------------------------------------------------------------------------
# listify
# ---------------------------------------------------------------------------


def _term_to_value(term: Term, conf: RuntimeConfiguration,
                   cfg: LiftingConfig) -> Value:
    run_ns = cfg.prefixes.mapping["run"]
    smol_null = value_term(None, cfg)
    if isinstance(term, Iri):
        if term == smol_null:
            return None
        if term.value.startswith(run_ns):
            tail = term.value[len(run_ns):]
            if tail.startswith("obj"):
                try:
                    n = int(tail[3:])
                except ValueError:
                    n = -1
                if n in conf.heap:
                    return ObjRef(n)
                raise SmolRuntimeError(
                    "destroyed-access",
                    "answer %s does not name a live object" % term.value)
        raise SmolRuntimeError("listify-mixed",
                               "answer %s is not a domain element" % term.value)
    if isinstance(term, Literal):
        return literal_value(term)
    raise SmolRuntimeError("listify-mixed",
                           "answer %r is not a domain element" % (term,))


def _dynamic_type(v: Value, conf: RuntimeConfiguration) -> Optional[Type]:
    if v is None:
        return None
    if isinstance(v, bool):
        return BOOLEAN
    if isinstance(v, int):
        return INT
    if isinstance(v, float):
        return DOUBLE
    if isinstance(v, str):
        return STRING
    if isinstance(v, UnitValue):
        return UNIT
    if isinstance(v, ObjRef) and v.n in conf.heap:
        info = conf.class_table.info(conf.heap[v.n].class_name)
        if info.list_elem is not None:
            return ListType(info.list_elem)
        return ClassType(info.name)
    return None


def listify(conf: RuntimeConfiguration, terms: Sequence[Term],
            cfg: LiftingConfig, hierarchy: TypeHierarchy,
            elem_hint: Optional[Type] = None) -> Value:
    """Fresh list cells for the answers, in sorted order (IRIs lexicographic,
    literals by value); the head reference, or null for no answers. Mixing
    literal types, or literals with objects, is a listify-mixed error."""
    iris = sorted((t for t in terms if isinstance(t, Iri)),
                  key=lambda t: t.value)
    lits = [t for t in terms if isinstance(t, Literal)]
    rest = [t for t in terms if not isinstance(t, (Iri, Literal))]
    if rest:
        raise SmolRuntimeError("listify-mixed",
                               "answer %r is not a domain element" % (rest[0],))
    if iris and lits:
        raise SmolRuntimeError("listify-mixed",
                               "answers mix literals with object identifiers")
    values: List[Value]
    if lits:
        values = [literal_value(t) for t in lits]
        kinds = {type(v) for v in values}
        if len(kinds) > 1:
            raise SmolRuntimeError("listify-mixed",
                                   "answers mix literal types %s"
                                   % sorted(k.__name__ for k in kinds))
        values.sort()
    else:
        values = [_term_to_value(t, conf, cfg) for t in iris]
    if not values:
        return None
    elem = elem_hint
    if elem is None:
        elem = BOT
        for v in values:
            dt = _dynamic_type(v, conf)
            elem = hierarchy.lub(elem, dt) if dt is not None else elem
        if elem == BOT or not hierarchy.defined(elem):
            elem = OBJECT
    cls = conf.class_table.ensure_list_class(elem)
    head: Value = None
    for v in reversed(values):
        head = conf.allocate(cls, {"content": v, "next": head})
    return head


# ---------------------------------------------------------------------------
# Reflection context
# ---------------------------------------------------------------------------


def _reflection_kb(conf: RuntimeConfiguration, cfg: LiftingConfig,
                   domain: Optional[KnowledgeBase]) -> KnowledgeBase:
    """K_SMOL, the domain knowledge, and the lifted configuration, as one
    knowledge base over a snapshot of the heap."""
    lifted = lift_configuration(conf, cfg,
                                domain_graph=domain.abox if domain else None)
    graph = lifted.graph
    tbox: List[Axiom] = list(lifted.axioms)
    if domain is not None:
        tbox += list(domain.tbox)
        graph = graph.union(render_axioms(domain.tbox, cfg.prefixes))
    return KnowledgeBase(tbox, graph)


def _with_tbox(regime: EntailmentRegime, tbox: Sequence[Axiom]) -> EntailmentRegime:
    if isinstance(regime, ClassHierarchy):
        return ClassHierarchy(tuple(tbox))
    return regime


# ---------------------------------------------------------------------------
# The step relation
# ---------------------------------------------------------------------------


_LOC_STMTS = (VarDeclStmt, AssignStmt)


def _loc_elem_type(stmt: Stmt, top: Process,
                   conf: RuntimeConfiguration) -> Optional[Type]:
    """Declared element type of the target location, when it is a list."""
    t: Optional[Type] = None
    if isinstance(stmt, VarDeclStmt):
        t = stmt.type
    elif isinstance(stmt, AssignStmt):
        if isinstance(stmt.target, VarRef):
            t = top.var_types.get(stmt.target.name)
        else:
            try:
                target = eval_expr(stmt.target.target, top.self_ref,
                                   top.store, conf)
                ob = _deref(target, conf, "field access")
                f = conf.class_table.info(ob.class_name).field(stmt.target.field)
                t = f.type if f else None
            except SmolRuntimeError:
                t = None
    return t.elem if isinstance(t, ListType) else None


def _replace_rhs(stmt: Stmt, value: Value) -> Stmt:
    return replace(stmt, rhs=RuntimeValue(value))


def step(conf: RuntimeConfiguration,
         domain: Optional[KnowledgeBase] = None,
         regime: EntailmentRegime = ClassHierarchy(),
         cfg: Optional[LiftingConfig] = None) -> StepOutcome:
    """Applies the unique matching transition rule to the top process."""
    if cfg is None:
        cfg = LiftingConfig()
    if not conf.processes:
        return StepOutcome("terminated")
    try:
        return _dispatch(conf, domain, regime, cfg)
    except SmolRuntimeError as e:
        return StepOutcome("error", error=e)


def _dispatch(conf: RuntimeConfiguration, domain: Optional[KnowledgeBase],
              regime: EntailmentRegime, cfg: LiftingConfig) -> StepOutcome:
    top = conf.processes[-1]
    if not top.stmts:
        raise SmolRuntimeError("stuck", "process %s ran out of statements"
                               % top.method)
    s = top.stmts[0]

    if isinstance(s, WaitingStmt):
        raise SmolRuntimeError("stuck", "top process is waiting on a call")

    if isinstance(s, SkipStmt):
        top.stmts = top.stmts[1:]
        return StepOutcome("step", rule="skip")

    if isinstance(s, IfStmt):
        guard = _require_bool(
            eval_expr(s.cond, top.self_ref, top.store, conf), "if guard")
        branch = s.then if guard else s.els
        top.stmts = list(branch) + top.stmts[1:]
        return StepOutcome("step", rule="iftrue" if guard else "iffalse")

    if isinstance(s, WhileStmt):
        guard = _require_bool(
            eval_expr(s.cond, top.self_ref, top.store, conf), "while guard")
        if guard:
            top.stmts = list(s.body) + top.stmts
            return StepOutcome("step", rule="loop1")
        top.stmts = top.stmts[1:]
        return StepOutcome("step", rule="loop2")

    if isinstance(s, ReturnStmt):
        value = eval_expr(s.expr, top.self_ref, top.store, conf)
        conf.processes.pop()
        if not conf.processes:
            return StepOutcome("step", rule="return")
        caller = conf.processes[-1]
        if not caller.stmts or not isinstance(caller.stmts[0], WaitingStmt):
            raise SmolRuntimeError("stuck", "no waiting statement under a return")
        waiting = caller.stmts[0]
        caller.stmts = [_replace_rhs(waiting.template, value)] + caller.stmts[1:]
        return StepOutcome("step", rule="return")

    if isinstance(s, CallStmt):
        target = eval_expr(s.call.target, top.self_ref, top.store, conf)
        ob = _deref(target, conf, "call of %s" % s.call.method)
        decl = conf.class_table.method(ob.class_name, s.call.method)
        if decl is None:
            raise SmolRuntimeError("stuck", "%s has no method %s"
                                   % (ob.class_name, s.call.method))
        name = "__tmp%d" % conf.next_temp
        conf.next_temp += 1
        top.stmts = [VarDeclStmt(decl.return_type, name, s.call,
                                 line=s.line)] + top.stmts[1:]
        return StepOutcome("step", rule="callIn")

    if isinstance(s, DestroyStmt):
        value = eval_expr(s.expr, top.self_ref, top.store, conf)
        _deref(value, conf, "destroy")
        del conf.heap[value.n]
        top.stmts = top.stmts[1:]
        return StepOutcome("step", rule="destroy")

    if isinstance(s, _LOC_STMTS):
        return _step_loc(conf, top, s, domain, regime, cfg)

    raise SmolRuntimeError("stuck", "no rule for statement %r" % (s,))


def _step_loc(conf: RuntimeConfiguration, top: Process, s: Stmt,
              domain: Optional[KnowledgeBase], regime: EntailmentRegime,
              cfg: LiftingConfig) -> StepOutcome:
    rhs = s.rhs

    if isinstance(rhs, New):
        info = conf.class_table.classes.get(rhs.class_name)
        if info is None:
            raise SmolRuntimeError("stuck", "no class %s" % rhs.class_name)
        if len(rhs.args) != len(info.ctor_order):
            raise SmolRuntimeError(
                "arity", "new %s takes %d arguments, got %d"
                % (rhs.class_name, len(info.ctor_order), len(rhs.args)))
        fields = {f: eval_expr(a, top.self_ref, top.store, conf)
                  for f, a in zip(info.ctor_order, rhs.args)}
        ref = conf.allocate(rhs.class_name, fields, linkage=rhs.linkage)
        top.stmts = [_replace_rhs(s, ref)] + top.stmts[1:]
        return StepOutcome("step", rule="new")

    if isinstance(rhs, ConsExpr):
        head = eval_expr(rhs.head, top.self_ref, top.store, conf)
        tail = eval_expr(rhs.tail, top.self_ref, top.store, conf)
        elem = _loc_elem_type(s, top, conf)
        if elem is None:
            tdt = _dynamic_type(tail, conf)
            if isinstance(tdt, ListType):
                elem = tdt.elem
            else:
                hdt = _dynamic_type(head, conf)
                elem = hdt if hdt is not None else OBJECT
        cls = conf.class_table.ensure_list_class(elem)
        ref = conf.allocate(cls, {"content": head, "next": tail})
        top.stmts = [_replace_rhs(s, ref)] + top.stmts[1:]
        return StepOutcome("step", rule="cons")

    if isinstance(rhs, MethodCall):
        target = eval_expr(rhs.target, top.self_ref, top.store, conf)
        ob = _deref(target, conf, "call of %s" % rhs.method)
        decl = conf.class_table.method(ob.class_name, rhs.method)
        if decl is None:
            raise SmolRuntimeError("stuck", "%s has no method %s"
                                   % (ob.class_name, rhs.method))
        if len(rhs.args) != len(decl.params):
            raise SmolRuntimeError(
                "arity", "%s.%s takes %d arguments, got %d"
                % (ob.class_name, rhs.method, len(decl.params), len(rhs.args)))
        store = {}
        var_types = {}
        for (pt, pname), arg in zip(decl.params, rhs.args):
            store[pname] = eval_expr(arg, top.self_ref, top.store, conf)
            var_types[pname] = pt
        top.stmts = [WaitingStmt(s, line=s.line)] + top.stmts[1:]
        conf.processes.append(Process(rhs.method, target, list(decl.body),
                                      store, var_types))
        return StepOutcome("step", rule="call")

    if isinstance(rhs, ValidateExpr):
        try:
            shapes = parse_shapes(rhs.shapes)
        except ShapeParseError as e:
            raise SmolRuntimeError("stuck", "bad shapes: %s" % e)
        kb = _reflection_kb(conf, cfg, domain)
        report = validate(kb.abox, shapes, _with_tbox(regime, kb.tbox))
        top.stmts = [_replace_rhs(s, report.conforms)] + top.stmts[1:]
        return StepOutcome("step", rule="validate")

    if isinstance(rhs, MemberExpr):
        try:
            concept = parse_concept_expression(rhs.concept)
        except ManchesterSyntaxError as e:
            raise SmolRuntimeError("stuck", "bad concept: %s" % e)
        kb = _reflection_kb(conf, cfg, domain)
        try:
            found = members(kb, concept, regime)
        except InconsistentKbError as e:
            raise SmolRuntimeError("inconsistent-kb", str(e))
        hierarchy = build_hierarchy(conf.class_table)
        head = listify(conf, sorted(found, key=_term_key), cfg, hierarchy,
                       _loc_elem_type(s, top, conf))
        top.stmts = [_replace_rhs(s, head)] + top.stmts[1:]
        return StepOutcome("step", rule="member")

    if isinstance(rhs, AccessExpr):
        try:
            query = parse_query(rhs.query)
        except SparqlSyntaxError as e:
            raise SmolRuntimeError("stuck", "bad query: %s" % e)
        if len(query.variables) != 1:
            raise SmolRuntimeError("stuck",
                                   "access needs exactly one selected variable")
        params = query.params()
        if params and max(params) > len(rhs.args):
            raise SmolRuntimeError(
                "arity", "query uses %%%d but only %d arguments were passed"
                % (max(params), len(rhs.args)))
        args = [value_term(eval_expr(a, top.self_ref, top.store, conf), cfg)
                for a in rhs.args]
        query = substitute_params(query, args)
        kb = _reflection_kb(conf, cfg, domain)
        report_ok = _consistency_gate(kb)
        if report_ok is not None:
            raise SmolRuntimeError("inconsistent-kb", report_ok)
        bindings = evaluate(query, [GraphSource(kb.abox)],
                            _with_tbox(regime, kb.tbox))
        terms = [b[query.variables[0]] for b in bindings]
        hierarchy = build_hierarchy(conf.class_table)
        head = listify(conf, terms, cfg, hierarchy,
                       _loc_elem_type(s, top, conf))
        top.stmts = [_replace_rhs(s, head)] + top.stmts[1:]
        return StepOutcome("step", rule="access")

    # plain expression or parked value: the three assignment rules
    value = eval_expr(rhs, top.self_ref, top.store, conf)
    if isinstance(s, VarDeclStmt):
        top.store[s.name] = value
        top.var_types[s.name] = s.type
        top.stmts = top.stmts[1:]
        return StepOutcome("step", rule="assign3")
    if isinstance(s.target, VarRef):
        if s.target.name not in top.store:
            raise SmolRuntimeError("unbound-location",
                                   "variable %s is not bound" % s.target.name)
        top.store[s.target.name] = value
        top.stmts = top.stmts[1:]
        return StepOutcome("step", rule="assign2")
    target = eval_expr(s.target.target, top.self_ref, top.store, conf)
    ob = _deref(target, conf, "field assignment .%s" % s.target.field)
    info = conf.class_table.info(ob.class_name)
    if info.field(s.target.field) is None:
        raise SmolRuntimeError("unbound-location", "%s has no field %s"
                               % (ob.class_name, s.target.field))
    ob.fields[s.target.field] = value
    top.stmts = top.stmts[1:]
    return StepOutcome("step", rule="assign1")


def _term_key(t: Term):
    return getattr(t, "value", getattr(t, "lexical", str(t)))


def _consistency_gate(kb: KnowledgeBase) -> Optional[str]:
    from .ontology import check_consistency
    report = check_consistency(kb)
    return None if report.ok else report.summary()


def run(conf: RuntimeConfiguration,
        domain: Optional[KnowledgeBase] = None,
        regime: EntailmentRegime = ClassHierarchy(),
        cfg: Optional[LiftingConfig] = None,
        step_limit: Optional[int] = None,
        trace: Optional[Callable[[str], None]] = None,
        on_step: Optional[Callable[[RuntimeConfiguration], None]] = None,
        ) -> RunResult:
    """Iterates step to termination or error; the maximal closure of the
    transition relation. `trace` receives one line per rule fired and
    `on_step` sees the configuration after each step."""
    steps = 0
    while True:
        if step_limit is not None and steps >= step_limit:
            return RunResult("error", steps, SmolRuntimeError(
                "step-limit", "no termination within %d steps" % step_limit))
        head = None
        if trace is not None and conf.processes and conf.processes[-1].stmts:
            head = type(conf.processes[-1].stmts[0]).__name__
            method = conf.processes[-1].method
        out = step(conf, domain, regime, cfg)
        if out.status == "error":
            return RunResult("error", steps, out.error)
        if out.status == "terminated":
            return RunResult("terminated", steps)
        steps += 1
        if trace is not None:
            trace("%s %s %s" % (out.rule, method, head))
        if on_step is not None:
            on_step(conf)
        if not conf.processes:
            return RunResult("terminated", steps)


class Interpreter:
    """Convenience wrapper tying a program to its run parameters."""

    def __init__(self, program: Program,
                 domain: Optional[KnowledgeBase] = None,
                 regime: EntailmentRegime = ClassHierarchy(),
                 cfg: Optional[LiftingConfig] = None):
        self.conf = init(program)
        self.domain = domain
        self.regime = regime
        self.cfg = cfg if cfg is not None else LiftingConfig()

    def step(self) -> StepOutcome:
        return step(self.conf, self.domain, self.regime, self.cfg)

    def run(self, step_limit: Optional[int] = None,
            trace: Optional[Callable[[str], None]] = None,
            on_step: Optional[Callable[[RuntimeConfiguration], None]] = None,
            ) -> RunResult:
        return run(self.conf, self.domain, self.regime, self.cfg,
                   step_limit=step_limit, trace=trace, on_step=on_step)


# ---------------------------------------------------------------------------
# Typing runtime configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Hole:
    """Placeholder expression of a known static type; stands for the value a
    waiting statement will receive."""
    type: StaticType


class _ConfigChecker(_Checker):
    def __init__(self, conf: RuntimeConfiguration, hierarchy: TypeHierarchy,
                 tbox: Sequence[Axiom]):
        super().__init__(conf.class_table, hierarchy, tbox)
        self.conf = conf

    def type_expr(self, e, env, line):
        if isinstance(e, _Hole):
            return e.type
        if isinstance(e, RuntimeValue):
            dt = _dynamic_type(e.value, self.conf)
            if dt is None and e.value is None:
                return BOT
            if dt is None:
                self.err("assignment", line,
                         "value %r references a destroyed object" % (e.value,))
                return BOT
            return dt
        return super().type_expr(e, env, line)

    def type_stmt(self, s, env):
        # loop unrolling re-executes declarations; the binding already exists
        if isinstance(s, VarDeclStmt) and s.name in env \
                and env.lookup(s.name) == s.type:
            t = self.type_rhs(s.rhs, env, s.line, s.type)
            self.check_assignable(t, s.type, s.line,
                                  "initializer of %s" % s.name)
            return UNIT, env
        return super().type_stmt(s, env)


def _store_environment(p: Process,
                       conf: RuntimeConfiguration) -> TypingEnvironment:
    env = TypingEnvironment()
    ob = conf.heap.get(p.self_ref.n)
    if ob is not None:
        for f in conf.class_table.fields(ob.class_name):
            env = env.bind(f.name, f.type)
        env = env.bind("this", ClassType(ob.class_name))
    for name in p.store:
        t = p.var_types.get(name)
        if t is not None:
            env = env.bind(name, t)
    return env


def typecheck_configuration(conf: RuntimeConfiguration,
                            domain_tbox: Sequence[Axiom] = ()
                            ) -> List[SmolTypeError]:
    """Checks that every object's store is total and type-correct on its
    class's fields and that the process stack is well-shaped: waiting
    statements sit strictly below the top, each paired with a callee whose
    eventual return value fits the stored location."""
    try:
        hierarchy = build_hierarchy(conf.class_table)
    except SmolTypeError as e:
        return [e]
    tbox = reflection_tbox(conf.class_table, domain_tbox)
    checker = _ConfigChecker(conf, hierarchy, tbox)
    errors = checker.errors

    def violation(kind: str, where: str, message: str):
        errors.append(SmolTypeError(kind, where, message))

    for n in sorted(conf.heap):
        ob = conf.heap[n]
        where = "obj%d" % n
        if ob.class_name not in conf.class_table:
            violation("object-store", where,
                      "object of undeclared class %s" % ob.class_name)
            continue
        declared = conf.class_table.fields(ob.class_name)
        names = {f.name for f in declared}
        if set(ob.fields) != names:
            violation("object-store", where,
                      "store domain %s does not match fields %s"
                      % (sorted(ob.fields), sorted(names)))
            continue
        for f in declared:
            dt = _dynamic_type(ob.fields[f.name], conf)
            if dt is None:
                if ob.fields[f.name] is None:
                    continue  # null inhabits every reference type
                violation("object-store", where,
                          "field %s holds a dangling reference" % f.name)
                continue
            if not checker.assignable(dt, f.type):
                violation("object-store", where,
                          "field %s holds a %s, declared %s"
                          % (f.name, type_name(dt), type_name(f.type)))

    # top-down: a waiting statement's hole takes the type of the remaining
    # body of the process above it, i.e. the type its return will produce
    body_types: List[Optional[StaticType]] = [None] * len(conf.processes)
    for i in reversed(range(len(conf.processes))):
        p = conf.processes[i]
        where = "process %d (%s)" % (i, p.method)
        is_top = i == len(conf.processes) - 1
        ob = conf.heap.get(p.self_ref.n)
        if ob is None:
            violation("process-stack", where, "self reference is dangling")
            continue
        decl = conf.class_table.method(ob.class_name, p.method)
        if decl is None:
            violation("process-stack", where, "%s has no method %s"
                      % (ob.class_name, p.method))
            continue
        env = _store_environment(p, conf)
        stmts = list(p.stmts)
        if stmts and isinstance(stmts[0], WaitingStmt):
            if is_top:
                violation("process-stack", where,
                          "top process holds a waiting statement")
                continue
            callee = conf.processes[i + 1]
            if not callee.stmts or not isinstance(callee.stmts[-1], ReturnStmt):
                violation("process-stack", where,
                          "callee does not end in a return statement")
                continue
            hole_type = body_types[i + 1]
            stmts = [replace(stmts[0].template,
                             rhs=_Hole(hole_type if hole_type is not None
                                       else ERROR))] + stmts[1:]
        elif any(isinstance(st, WaitingStmt) for st in stmts):
            violation("process-stack", where,
                      "waiting statement not at the head of the process")
            continue
        elif not is_top:
            violation("process-stack", where,
                      "a process below the top is not waiting")
            continue
        t = checker.type_stmts(stmts, env)
        body_types[i] = t
        if not checker.assignable(t, decl.return_type):
            violation("process-stack", where,
                      "body has type %s, method declares %s"
                      % (type_name(t), type_name(decl.return_type)))

    return errors
