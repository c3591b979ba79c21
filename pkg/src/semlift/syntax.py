"""Surface syntax: lexer, parser, printer and class-table construction.

The class table flattens inheritance by copy-down (inherited fields first),
adds the synthetic Entry class whose entry() body is the main block, and
materializes every mentioned List<T> as a class with fields content/next.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Set, Tuple, Union

BASIC_TYPES = ("Int", "Boolean", "Unit", "String", "Double")

KEYWORDS = {
    "class", "extends", "main", "end", "if", "then", "else", "while", "do",
    "skip", "return", "new", "links", "hidden", "domain", "abstract",
    "this", "null", "unit", "True", "False", "destroy",
    "access", "member", "validate", "Cons", "List",
} | set(BASIC_TYPES)


class SmolSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__("%d:%d: %s" % (line, col, message) if line else message)
        self.line = line
        self.col = col


class SmolTypeError(ValueError):
    """A static error with a fixed kind; raised by class-table construction
    and the type checker."""

    def __init__(self, kind: str, location: str, message: str):
        super().__init__("%s (%s): %s" % (kind, location, message))
        self.kind = kind
        self.location = location
        self.message = message


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasicType:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class ClassType:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class ListType:
    elem: "Type"

    def __repr__(self):
        return "List<%r>" % (self.elem,)


Type = Union[BasicType, ClassType, ListType]

INT = BasicType("Int")
BOOLEAN = BasicType("Boolean")
UNIT = BasicType("Unit")
STRING = BasicType("String")
DOUBLE = BasicType("Double")


def type_name(t: Type) -> str:
    return repr(t)


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class DoubleLit:
    value: float


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class NullLit:
    pass


@dataclass(frozen=True)
class UnitLit:
    pass


@dataclass(frozen=True)
class This:
    pass


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class FieldAccess:
    target: "Expr"
    field: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    expr: "Expr"


Expr = Union[IntLit, DoubleLit, BoolLit, StringLit, NullLit, UnitLit, This,
             VarRef, FieldAccess, BinOp, Not]


@dataclass(frozen=True)
class LinkageClause:
    guard: Optional[Expr]  # None on the final, unconditional clause
    text: str


@dataclass(frozen=True)
class Linkage:
    clauses: Tuple[LinkageClause, ...]


@dataclass(frozen=True)
class New:
    class_name: str
    args: Tuple[Expr, ...]
    linkage: Optional[Linkage] = None


@dataclass(frozen=True)
class MethodCall:
    target: Expr
    method: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class ConsExpr:
    head: Expr
    tail: Expr


@dataclass(frozen=True)
class AccessExpr:
    query: str
    args: Tuple[Expr, ...] = ()


@dataclass(frozen=True)
class MemberExpr:
    concept: str


@dataclass(frozen=True)
class ValidateExpr:
    shapes: str


RHS = Union[Expr, New, MethodCall, ConsExpr, AccessExpr, MemberExpr, ValidateExpr]


@dataclass(frozen=True)
class VarDeclStmt:
    type: Type
    name: str
    rhs: RHS
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class AssignStmt:
    target: Union[VarRef, FieldAccess]
    rhs: RHS
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class IfStmt:
    cond: Expr
    then: Tuple["Stmt", ...]
    els: Tuple["Stmt", ...]  # empty tuple when no else branch was written
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class WhileStmt:
    cond: Expr
    body: Tuple["Stmt", ...]
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class SkipStmt:
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ReturnStmt:
    expr: Expr
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class CallStmt:
    call: MethodCall
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class DestroyStmt:
    expr: Expr
    line: int = dc_field(default=0, compare=False, repr=False)


Stmt = Union[VarDeclStmt, AssignStmt, IfStmt, WhileStmt, SkipStmt, ReturnStmt,
             CallStmt, DestroyStmt]


@dataclass(frozen=True)
class FieldDecl:
    modifier: str  # "", "hidden" or "domain"
    type: Type
    name: str


@dataclass(frozen=True)
class MethodDecl:
    return_type: Type
    name: str
    params: Tuple[Tuple[Type, str], ...]
    body: Tuple[Stmt, ...]
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    extends: Optional[str]
    fields: Tuple[FieldDecl, ...]
    linkage: Optional[Linkage]
    methods: Tuple[MethodDecl, ...]
    abstract: bool = False
    line: int = dc_field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    classes: Tuple[ClassDecl, ...]
    main: Tuple[Stmt, ...]


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>//[^\n]*|/\*(?:[^*]|\*(?!/))*\*/)
    | (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<double>\d+\.\d+)
    | (?P<int>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<symbol>==|!=|<=|>=|&&|\|\||[()<>,;.=+\-*/!])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str  # keyword ident int double string symbol eof
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Tok]:
    toks: List[_Tok] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SmolSyntaxError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        raw = m.group(0)
        if kind == "ident" and raw in KEYWORDS:
            kind = "keyword"
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, raw, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


def _unescape(raw: str) -> str:
    return raw[1:-1].replace('\\"', '"').replace("\\\\", "\\")


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise SmolSyntaxError("expected %r, found %r" % (text, tok.text or "end of input"),
                                  tok.line, tok.col)
        return tok

    def expect_ident(self, what: str) -> str:
        tok = self.next()
        if tok.kind != "ident":
            raise SmolSyntaxError("expected %s, found %r" % (what, tok.text or "end of input"),
                                  tok.line, tok.col)
        return tok.text

    def at(self, text: str) -> bool:
        return self.peek().text == text

    # program --------------------------------------------------------------

    def parse_program(self) -> Program:
        classes: List[ClassDecl] = []
        while not self.at("main"):
            if self.peek().kind == "eof":
                raise SmolSyntaxError("expected a class or the main block",
                                      self.peek().line, self.peek().col)
            classes.append(self.parse_class())
        self.expect("main")
        body = self.parse_stmts(("end",))
        self.expect("end")
        tok = self.peek()
        if tok.kind != "eof":
            raise SmolSyntaxError("trailing input after main block", tok.line, tok.col)
        return Program(tuple(classes), body)

    def parse_class(self) -> ClassDecl:
        start = self.peek()
        abstract = False
        if self.at("abstract"):
            self.next()
            abstract = True
        self.expect("class")
        name = self.expect_ident("class name")
        extends = None
        if self.at("extends"):
            self.next()
            extends = self.expect_ident("superclass name")
        self.expect("(")
        fields: List[FieldDecl] = []
        if not self.at(")"):
            while True:
                fields.append(self.parse_field())
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        linkage = self.parse_linkage() if self.at("links") else None
        methods: List[MethodDecl] = []
        while not self.at("end"):
            methods.append(self.parse_method())
        self.expect("end")
        decl = ClassDecl(name, extends, tuple(fields), linkage, tuple(methods), abstract)
        object.__setattr__(decl, "line", start.line)
        return decl

    def parse_field(self) -> FieldDecl:
        modifier = ""
        if self.peek().text in ("hidden", "domain"):
            modifier = self.next().text
        t = self.parse_type()
        name = self.expect_ident("field name")
        return FieldDecl(modifier, t, name)

    def parse_type(self) -> Type:
        tok = self.next()
        if tok.text in BASIC_TYPES:
            return BasicType(tok.text)
        if tok.text == "List":
            self.expect("<")
            elem = self.parse_type()
            self.expect(">")
            return ListType(elem)
        if tok.kind == "ident":
            return ClassType(tok.text)
        raise SmolSyntaxError("expected a type, found %r" % tok.text, tok.line, tok.col)

    def parse_linkage(self) -> Linkage:
        clauses: List[LinkageClause] = []
        while self.at("links"):
            self.next()
            guard = None
            if self.at("("):
                self.next()
                guard = self.parse_expr()
                self.expect(")")
            tok = self.next()
            if tok.kind != "string":
                raise SmolSyntaxError("expected a linkage string", tok.line, tok.col)
            self.expect(";")
            clauses.append(LinkageClause(guard, _unescape(tok.text)))
        if clauses[-1].guard is not None:
            tok = self.peek()
            raise SmolSyntaxError("linkage must end with an unguarded links clause",
                                  tok.line, tok.col)
        return Linkage(tuple(clauses))

    def parse_method(self) -> MethodDecl:
        start = self.peek()
        ret = self.parse_type()
        name = self.expect_ident("method name")
        self.expect("(")
        params: List[Tuple[Type, str]] = []
        if not self.at(")"):
            while True:
                t = self.parse_type()
                params.append((t, self.expect_ident("parameter name")))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        body = self.parse_stmts(("end",))
        self.expect("end")
        decl = MethodDecl(ret, name, tuple(params), body)
        object.__setattr__(decl, "line", start.line)
        return decl

    # statements -----------------------------------------------------------

    def parse_stmts(self, stops: Tuple[str, ...]) -> Tuple[Stmt, ...]:
        out: List[Stmt] = []
        while self.peek().text not in stops:
            if self.peek().kind == "eof":
                raise SmolSyntaxError("unterminated block (expected %s)" % " or ".join(map(repr, stops)),
                                      self.peek().line, self.peek().col)
            out.append(self.parse_stmt())
        return tuple(out)

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        stmt = self._parse_stmt_inner()
        object.__setattr__(stmt, "line", tok.line)
        return stmt

    def _parse_stmt_inner(self) -> Stmt:
        tok = self.peek()
        if tok.text == "skip":
            self.next()
            self.expect(";")
            return SkipStmt()
        if tok.text == "return":
            self.next()
            e = self.parse_expr()
            self.expect(";")
            return ReturnStmt(e)
        if tok.text == "destroy":
            self.next()
            self.expect("(")
            e = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return DestroyStmt(e)
        if tok.text == "if":
            self.next()
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_stmts(("else", "end"))
            els: Tuple[Stmt, ...] = ()
            if self.at("else"):
                self.next()
                els = self.parse_stmts(("end",))
            self.expect("end")
            return IfStmt(cond, then, els)
        if tok.text == "while":
            self.next()
            cond = self.parse_expr()
            self.expect("do")
            body = self.parse_stmts(("end",))
            self.expect("end")
            return WhileStmt(cond, body)
        if tok.text in BASIC_TYPES or tok.text == "List" or (
            tok.kind == "ident" and self.peek(1).kind == "ident"
        ):
            t = self.parse_type()
            name = self.expect_ident("variable name")
            self.expect("=")
            rhs, consumed = self.parse_rhs()
            if not consumed:
                self.expect(";")
            return VarDeclStmt(t, name, rhs)
        # assignment or standalone call
        e = self.parse_postfix(allow_call=True)
        if isinstance(e, MethodCall):
            self.expect(";")
            return CallStmt(e)
        if self.at("="):
            self.next()
            if not isinstance(e, (VarRef, FieldAccess)):
                raise SmolSyntaxError("assignment target must be a variable or field",
                                      tok.line, tok.col)
            rhs, consumed = self.parse_rhs()
            if not consumed:
                self.expect(";")
            return AssignStmt(e, rhs)
        raise SmolSyntaxError("expected a statement, found %r" % tok.text, tok.line, tok.col)

    def parse_rhs(self) -> Tuple[RHS, bool]:
        """Returns (rhs, semicolon_already_consumed). A linkage after `new`
        carries its own clause-final semicolons, the last of which ends the
        statement."""
        tok = self.peek()
        if tok.text == "new":
            self.next()
            name = self.expect_ident("class name")
            self.expect("(")
            args = self.parse_args()
            linkage = self.parse_linkage() if self.at("links") else None
            return New(name, args, linkage), linkage is not None
        if tok.text == "Cons":
            self.next()
            self.expect("(")
            head = self.parse_expr()
            self.expect(",")
            tail = self.parse_expr()
            self.expect(")")
            return ConsExpr(head, tail), False
        if tok.text == "access":
            self.next()
            self.expect("(")
            q = self.next()
            if q.kind != "string":
                raise SmolSyntaxError("access needs a query string", q.line, q.col)
            args: List[Expr] = []
            while self.at(","):
                self.next()
                args.append(self.parse_expr())
            self.expect(")")
            return AccessExpr(_unescape(q.text), tuple(args)), False
        if tok.text in ("member", "validate"):
            self.next()
            self.expect("(")
            payload = self.next()
            if payload.kind != "string":
                raise SmolSyntaxError("%s needs a string argument" % tok.text,
                                      payload.line, payload.col)
            self.expect(")")
            node = (MemberExpr if tok.text == "member" else ValidateExpr)(_unescape(payload.text))
            return node, False
        e = self.parse_expr(allow_call=True)
        return e, False

    def parse_args(self) -> Tuple[Expr, ...]:
        args: List[Expr] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        return tuple(args)

    # expressions ----------------------------------------------------------

    _PRECEDENCE = (("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="),
                   ("+", "-"), ("*", "/"))

    def parse_expr(self, allow_call: bool = False):
        e = self.parse_binop(0, allow_call)
        if isinstance(e, MethodCall) and not allow_call:
            raise SmolSyntaxError("a method call cannot be used as an expression here",
                                  self.peek().line, self.peek().col)
        return e

    def parse_binop(self, level: int, allow_call: bool):
        if level == len(self._PRECEDENCE):
            return self.parse_unary(allow_call)
        left = self.parse_binop(level + 1, allow_call)
        while self.peek().text in self._PRECEDENCE[level]:
            op = self.next().text
            self._reject_call_operand(left)
            right = self.parse_binop(level + 1, allow_call=False)
            left = BinOp(op, left, right)
        return left

    def _reject_call_operand(self, e):
        if isinstance(e, MethodCall):
            tok = self.peek()
            raise SmolSyntaxError("a method call cannot be an operand", tok.line, tok.col)

    def parse_unary(self, allow_call: bool):
        if self.at("!"):
            self.next()
            inner = self.parse_unary(allow_call=False)
            self._reject_call_operand(inner)
            return Not(inner)
        return self.parse_postfix(allow_call)

    def parse_postfix(self, allow_call: bool):
        e = self.parse_primary()
        while self.at("."):
            self.next()
            name = self.expect_ident("field or method name")
            if self.at("("):
                self.next()
                args = self.parse_args()
                call = MethodCall(e, name, args)
                if self.at("."):
                    tok = self.peek()
                    raise SmolSyntaxError("cannot access a member of a call result",
                                          tok.line, tok.col)
                if not allow_call:
                    tok = self.peek()
                    raise SmolSyntaxError("a method call cannot be used as an expression here",
                                          tok.line, tok.col)
                return call
            e = FieldAccess(e, name)
        return e

    def parse_primary(self):
        tok = self.next()
        if tok.text == "this":
            return This()
        if tok.text == "null":
            return NullLit()
        if tok.text == "unit":
            return UnitLit()
        if tok.text == "True":
            return BoolLit(True)
        if tok.text == "False":
            return BoolLit(False)
        if tok.kind == "int":
            return IntLit(int(tok.text))
        if tok.kind == "double":
            return DoubleLit(float(tok.text))
        if tok.kind == "string":
            return StringLit(_unescape(tok.text))
        if tok.kind == "ident":
            return VarRef(tok.text)
        if tok.text == "(":
            e = self.parse_expr()
            self.expect(")")
            return e
        raise SmolSyntaxError("expected an expression, found %r" % (tok.text or "end of input"),
                              tok.line, tok.col)


def parse_program(text: str) -> Program:
    return _Parser(text).parse_program()


def parse_statements(text: str) -> Tuple[Stmt, ...]:
    """Parse a bare statement sequence (REPL input)."""
    parser = _Parser(text)
    return parser.parse_stmts(stops=("",))


# ---------------------------------------------------------------------------
# Printer (canonical formatting; parse of the output is the original AST)
# ---------------------------------------------------------------------------


def print_type(t: Type) -> str:
    if isinstance(t, ListType):
        return "List<%s>" % print_type(t.elem)
    return t.name


def print_expr(e) -> str:
    if isinstance(e, This):
        return "this"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, UnitLit):
        return "unit"
    if isinstance(e, BoolLit):
        return "True" if e.value else "False"
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, DoubleLit):
        return repr(e.value)
    if isinstance(e, StringLit):
        return '"%s"' % _escape(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, FieldAccess):
        return "%s.%s" % (_paren(e.target), e.field)
    if isinstance(e, Not):
        return "!%s" % _paren(e.expr)
    if isinstance(e, BinOp):
        return "%s %s %s" % (_paren(e.left), e.op, _paren(e.right))
    if isinstance(e, MethodCall):
        return "%s.%s(%s)" % (_paren(e.target), e.method,
                              ", ".join(print_expr(a) for a in e.args))
    raise TypeError("not an expression: %r" % (e,))


def _paren(e) -> str:
    if isinstance(e, (BinOp, Not)):
        return "(%s)" % print_expr(e)
    return print_expr(e)


def print_rhs(rhs) -> str:
    if isinstance(rhs, New):
        base = "new %s(%s)" % (rhs.class_name, ", ".join(print_expr(a) for a in rhs.args))
        if rhs.linkage is not None:
            return base + " " + _print_linkage_inline(rhs.linkage)
        return base
    if isinstance(rhs, ConsExpr):
        return "Cons(%s, %s)" % (print_expr(rhs.head), print_expr(rhs.tail))
    if isinstance(rhs, AccessExpr):
        parts = ['"%s"' % _escape(rhs.query)] + [print_expr(a) for a in rhs.args]
        return "access(%s)" % ", ".join(parts)
    if isinstance(rhs, MemberExpr):
        return 'member("%s")' % _escape(rhs.concept)
    if isinstance(rhs, ValidateExpr):
        return 'validate("%s")' % _escape(rhs.shapes)
    return print_expr(rhs)


def _print_linkage_inline(linkage: Linkage) -> str:
    parts = []
    for clause in linkage.clauses:
        if clause.guard is not None:
            parts.append('links(%s) "%s";' % (print_expr(clause.guard), _escape(clause.text)))
        else:
            parts.append('links "%s";' % _escape(clause.text))
    return " ".join(parts)


def print_stmt(stmt, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(stmt, SkipStmt):
        return pad + "skip;"
    if isinstance(stmt, ReturnStmt):
        return pad + "return %s;" % print_expr(stmt.expr)
    if isinstance(stmt, DestroyStmt):
        return pad + "destroy(%s);" % print_expr(stmt.expr)
    if isinstance(stmt, VarDeclStmt):
        rhs = print_rhs(stmt.rhs)
        semi = "" if isinstance(stmt.rhs, New) and stmt.rhs.linkage is not None else ";"
        return pad + "%s %s = %s%s" % (print_type(stmt.type), stmt.name, rhs, semi)
    if isinstance(stmt, AssignStmt):
        rhs = print_rhs(stmt.rhs)
        semi = "" if isinstance(stmt.rhs, New) and stmt.rhs.linkage is not None else ";"
        return pad + "%s = %s%s" % (print_expr(stmt.target), rhs, semi)
    if isinstance(stmt, CallStmt):
        return pad + print_expr(stmt.call) + ";"
    if isinstance(stmt, IfStmt):
        lines = [pad + "if %s then" % print_expr(stmt.cond)]
        lines += [print_stmt(s, indent + 1) for s in stmt.then]
        if stmt.els:
            lines.append(pad + "else")
            lines += [print_stmt(s, indent + 1) for s in stmt.els]
        lines.append(pad + "end")
        return "\n".join(lines)
    if isinstance(stmt, WhileStmt):
        lines = [pad + "while %s do" % print_expr(stmt.cond)]
        lines += [print_stmt(s, indent + 1) for s in stmt.body]
        lines.append(pad + "end")
        return "\n".join(lines)
    raise TypeError("not a statement: %r" % (stmt,))


def print_program(p: Program) -> str:
    lines: List[str] = []
    for c in p.classes:
        head = "abstract class" if c.abstract else "class"
        ext = " extends %s" % c.extends if c.extends else ""
        fields = ", ".join(
            ("%s " % f.modifier if f.modifier else "") + "%s %s" % (print_type(f.type), f.name)
            for f in c.fields)
        lines.append("%s %s%s(%s)" % (head, c.name, ext, fields))
        if c.linkage is not None:
            for clause in c.linkage.clauses:
                if clause.guard is not None:
                    lines.append('  links(%s) "%s";' % (print_expr(clause.guard),
                                                        _escape(clause.text)))
                else:
                    lines.append('  links "%s";' % _escape(clause.text))
        for m in c.methods:
            params = ", ".join("%s %s" % (print_type(t), n) for t, n in m.params)
            lines.append("  %s %s(%s)" % (print_type(m.return_type), m.name, params))
            lines += [print_stmt(s, 2) for s in m.body]
            lines.append("  end")
        lines.append("end")
        lines.append("")
    lines.append("main")
    lines += [print_stmt(s, 1) for s in p.main]
    lines.append("end")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Class table
# ---------------------------------------------------------------------------

ENTRY_CLASS = "Entry"
ENTRY_METHOD = "entry"


@dataclass
class ClassInfo:
    name: str
    superclass: Optional[str]
    fields: Tuple[FieldDecl, ...]  # flattened, inherited first
    own_fields: Tuple[FieldDecl, ...]
    ctor_order: Tuple[str, ...]  # constructor argument names, own params first
    methods: Dict[str, MethodDecl]  # flattened, overrides applied
    linkage: Optional[Linkage]
    abstract: bool = False
    list_elem: Optional[Type] = None  # set on materialized List<T> classes

    def field(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass
class ClassTable:
    classes: Dict[str, ClassInfo]

    def __contains__(self, name: str) -> bool:
        return name in self.classes

    def info(self, name: str) -> ClassInfo:
        return self.classes[name]

    def fields(self, name: str) -> Tuple[FieldDecl, ...]:
        return self.classes[name].fields

    def method(self, class_name: str, method: str) -> Optional[MethodDecl]:
        return self.classes[class_name].methods.get(method)

    def superclasses(self, name: str) -> List[str]:
        """The chain of strict superclasses, nearest first."""
        out = []
        cur = self.classes[name].superclass
        while cur is not None:
            out.append(cur)
            cur = self.classes[cur].superclass
        return out

    def ensure_list_class(self, elem: Type) -> str:
        name = type_name(ListType(elem))
        if name not in self.classes:
            self.classes[name] = _list_class_info(elem)
        return name


def _list_class_info(elem: Type) -> ClassInfo:
    lt = ListType(elem)
    fields = (FieldDecl("", elem, "content"), FieldDecl("", lt, "next"))
    return ClassInfo(
        name=type_name(lt), superclass=None, fields=fields, own_fields=fields,
        ctor_order=("content", "next"), methods={}, linkage=None, list_elem=elem)


def _collect_list_types(p: Program) -> Set[Type]:
    found: Set[Type] = set()

    def walk_type(t: Type):
        if isinstance(t, ListType):
            found.add(t.elem)
            walk_type(t.elem)

    for c in p.classes:
        for f in c.fields:
            walk_type(f.type)
        for m in c.methods:
            walk_type(m.return_type)
            for t, _ in m.params:
                walk_type(t)
            for s in m.body:
                _walk_stmt_types(s, walk_type)
    for s in p.main:
        _walk_stmt_types(s, walk_type)
    return found


def _walk_stmt_types(stmt, walk_type):
    if isinstance(stmt, VarDeclStmt):
        walk_type(stmt.type)
    elif isinstance(stmt, IfStmt):
        for s in stmt.then + stmt.els:
            _walk_stmt_types(s, walk_type)
    elif isinstance(stmt, WhileStmt):
        for s in stmt.body:
            _walk_stmt_types(s, walk_type)


def build_class_table(p: Program) -> ClassTable:
    """Flatten the program into a class table: copy-down inheritance with
    inherited fields first, methods overridable, the synthetic Entry class
    wrapping the main block, and a class for every mentioned list type."""
    decls: Dict[str, ClassDecl] = {}
    for c in p.classes:
        if c.name == ENTRY_CLASS:
            raise SmolTypeError("duplicate-class", c.name,
                                "the class name Entry is reserved")
        if c.name in decls:
            raise SmolTypeError("duplicate-class", c.name, "class declared twice")
        decls[c.name] = c
    for c in p.classes:
        if c.extends is not None and c.extends not in decls:
            raise SmolTypeError("unknown-type", c.name,
                                "undeclared superclass %s" % c.extends)

    # cycle detection over extends
    state: Dict[str, int] = {}

    def visit(name: str, trail: List[str]):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            raise SmolTypeError("cycle", name,
                                "inheritance cycle: %s" % " -> ".join(trail + [name]))
        state[name] = 1
        sup = decls[name].extends
        if sup is not None:
            visit(sup, trail + [name])
        state[name] = 2

    for name in decls:
        visit(name, [])

    infos: Dict[str, ClassInfo] = {}

    def flatten(name: str) -> ClassInfo:
        if name in infos:
            return infos[name]
        c = decls[name]
        if c.extends is not None:
            sup = flatten(c.extends)
            inherited = sup.fields
            methods = dict(sup.methods)
            ctor_tail = sup.ctor_order
        else:
            inherited = ()
            methods = {}
            ctor_tail = ()
        taken = {f.name for f in inherited}
        for f in c.fields:
            if f.name in taken:
                raise SmolTypeError("duplicate-field", "%s.%s" % (name, f.name),
                                    "field already declared in a superclass")
            taken.add(f.name)
        own_names = {f.name for f in c.fields}
        if len(own_names) != len(c.fields):
            raise SmolTypeError("duplicate-field", name, "field declared twice")
        for m in c.methods:
            methods[m.name] = m
        seen_methods = set()
        for m in c.methods:
            if m.name in seen_methods:
                raise SmolTypeError("duplicate-class", "%s.%s" % (name, m.name),
                                    "method declared twice")
            seen_methods.add(m.name)
        info = ClassInfo(
            name=name,
            superclass=c.extends,
            fields=inherited + c.fields,
            own_fields=c.fields,
            ctor_order=tuple(f.name for f in c.fields) + ctor_tail,
            methods=methods,
            linkage=c.linkage,
            abstract=c.abstract,
        )
        infos[name] = info
        return info

    for name in decls:
        flatten(name)

    table = ClassTable(infos)
    for elem in sorted(_collect_list_types(p), key=type_name):
        table.ensure_list_class(elem)

    entry_body = _with_final_return(p.main, UNIT)
    infos[ENTRY_CLASS] = ClassInfo(
        name=ENTRY_CLASS, superclass=None, fields=(), own_fields=(),
        ctor_order=(), linkage=None, abstract=False,
        methods={ENTRY_METHOD: MethodDecl(UNIT, ENTRY_METHOD, (), entry_body)},
    )

    # Unit methods may omit the trailing return; make it explicit
    for info in infos.values():
        for mname, m in list(info.methods.items()):
            info.methods[mname] = MethodDecl(
                m.return_type, m.name, m.params,
                _with_final_return(m.body, m.return_type), line=m.line)
    return table


def _with_final_return(body: Tuple[Stmt, ...], ret: Type) -> Tuple[Stmt, ...]:
    if ret == UNIT and (not body or not isinstance(body[-1], ReturnStmt)):
        return body + (ReturnStmt(UnitLit()),)
    return body
