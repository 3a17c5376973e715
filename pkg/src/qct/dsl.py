"""A small expression language for constant-term problems.

Grammar::

    top     := 'CT' '[' varpat (',' varpat)* ']' expr | expr
    varpat  := 'z0' | 'z' '[' iexpr ',' (iexpr | '*') ']' | IDENT
    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | factor
    factor  := atom ('^' ['-'] (INT | IDENT | '(' iexpr ')'))?
    atom    := INT | 'q' | var | 'poch' '(' expr ',' iexpr ')'
             | 'prod' '(' IDENT '=' iexpr '..' iexpr ';' expr ')' | '(' expr ')'
    var     := 'z0' | 'z' '[' iexpr ',' iexpr ']' | IDENT
    iexpr   := integer arithmetic (+ - * and parentheses) on INT and bound IDENTs

An identifier bound by ``prod`` or by the caller's bindings stands for its
integer value; any other identifier is a free variable (``y1`` is y with
index 1, ``w`` is w).  Division is only allowed by products of
Pochhammer symbols poch(q^u x/y, n) with x smaller than y, by pure q
Pochhammer symbols, and by monomials.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .ct import GeomFactor, SeriesExpr, SmallnessError, eliminate
from .multipoly import Z0, Monomial, MultiLaurent, VarId, free, pochhammer, z

KEYWORDS = {"CT", "q", "z0", "z", "poch", "prod"}


class DslError(ValueError):
    """Problem in DSL text, with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ParseError(DslError):
    def __init__(self, message: str, line: int, col: int, expected: frozenset[str] = frozenset()):
        super().__init__(message, line, col)
        self.expected = expected


class ElaborationError(DslError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # INT, IDENT, OP, EOF
    text: str
    line: int
    col: int

    def show(self) -> str:
        return "end of input" if self.kind == "EOF" else repr(self.text)


_TOKEN_RE = re.compile(r"""
    (?P<NL>\n) | (?P<WS>[ \t\r\f\v]+) | (?P<COMMENT>\#[^\n]*)
  | (?P<INT>\d+) | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP>\.\.|[-+*/^()\[\],;=])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    toks = []
    line, line_start, pos = 1, 0, 0
    match = _TOKEN_RE.match
    while pos < len(text):
        m = match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "NL":
            line, line_start = line + 1, m.end()
        elif kind in ("INT", "IDENT", "OP"):
            toks.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(Token("EOF", "", line, pos - line_start + 1))
    return toks


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Node:
    line: int = field(compare=False)
    col: int = field(compare=False)


@dataclass(frozen=True)
class Int(Node):
    value: int = 0


@dataclass(frozen=True)
class QSym(Node):
    pass


@dataclass(frozen=True)
class Name(Node):
    name: str = ""


@dataclass(frozen=True)
class ZVar(Node):
    level: Node | None = None  # None means z0
    index: Node | None = None


@dataclass(frozen=True)
class Wild(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    arg: Node | None = None


@dataclass(frozen=True)
class BinOp(Node):
    op: str = "+"
    left: Node | None = None
    right: Node | None = None


@dataclass(frozen=True)
class Sum(Node):
    """Flat chain t0 (op t1) (op t2) ..., ops being '+' or '-'."""

    first: Node | None = None
    rest: tuple = ()


@dataclass(frozen=True)
class Pow(Node):
    base: Node | None = None
    exp: Node | None = None


@dataclass(frozen=True)
class Poch(Node):
    base: Node | None = None
    n: Node | None = None


@dataclass(frozen=True)
class Prod(Node):
    var: str = ""
    lo: Node | None = None
    hi: Node | None = None
    body: Node | None = None


@dataclass(frozen=True)
class CTNode(Node):
    vars: tuple = ()
    body: Node | None = None


DslAst = Node

_CONT = frozenset({"+", "-", "*", "/", "^"})


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text == text

    def fail(self, expected: set[str], what: str | None = None):
        t = self.tok
        exp = " or ".join(sorted(f"'{e}'" if len(e) <= 2 else e for e in expected))
        msg = what or f"expected {exp}, got {t.show()}"
        if t.kind == "EOF" and what is None:
            msg = f"unexpected end of input, expected {exp}"
        raise ParseError(msg, t.line, t.col, frozenset(expected))

    def expect(self, text: str, also: set[str] = frozenset()) -> Token:
        if not self.at(text):
            self.fail({text} | set(also))
        return self.advance()

    # grammar
    def parse_top(self) -> Node:
        t = self.tok
        if t.kind == "IDENT" and t.text == "CT":
            self.advance()
            self.expect("[")
            pats = [self.varpat()]
            while self.at(","):
                self.advance()
                pats.append(self.varpat())
            self.expect("]", {","})
            body = self.expr()
            node = CTNode(t.line, t.col, tuple(pats), body)
        else:
            node = self.expr()
        if self.tok.kind != "EOF":
            self.fail(set(_CONT) | {"end of input"})
        return node

    def varpat(self) -> Node:
        t = self.tok
        if t.kind == "IDENT" and t.text == "z":
            self.advance()
            self.expect("[")
            lvl = self.iexpr()
            self.expect(",", {"+", "-", "*"})
            if self.at("*"):
                w = self.advance()
                idx = Wild(w.line, w.col)
            else:
                idx = self.iexpr()
            self.expect("]", {"+", "-", "*"})
            return ZVar(t.line, t.col, lvl, idx)
        if t.kind == "IDENT" and t.text == "z0":
            self.advance()
            return ZVar(t.line, t.col, None, None)
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.advance()
            return Name(t.line, t.col, t.text)
        self.fail({"z0", "z[s,i]", "identifier"}, f"expected a variable, got {t.show()}")

    def expr(self) -> Node:
        first = self.term()
        rest = []
        while self.at("+") or self.at("-"):
            op = self.advance()
            rest.append((op.text, self.term(), op.line, op.col))
        if not rest:
            return first
        return Sum(first.line, first.col, first, tuple(rest))

    def term(self) -> Node:
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance()
            node = BinOp(op.line, op.col, op.text, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.at("-"):
            t = self.advance()
            return Neg(t.line, t.col, self.unary())
        return self.factor()

    def factor(self) -> Node:
        base = self.atom()
        if self.at("^"):
            t = self.advance()
            base = Pow(t.line, t.col, base, self.exponent())
        return base

    def exponent(self) -> Node:
        t = self.tok
        if self.at("-"):
            self.advance()
            return Neg(t.line, t.col, self.exponent_atom())
        return self.exponent_atom()

    def exponent_atom(self) -> Node:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Int(t.line, t.col, int(t.text))
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.advance()
            return Name(t.line, t.col, t.text)
        if self.at("("):
            self.advance()
            node = self.iexpr()
            self.expect(")", {"+", "-", "*"})
            return node
        self.fail({"integer", "identifier", "("})

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Int(t.line, t.col, int(t.text))
        if self.at("("):
            self.advance()
            node = self.expr()
            self.expect(")", _CONT)
            return node
        if t.kind == "IDENT":
            if t.text == "q":
                self.advance()
                return QSym(t.line, t.col)
            if t.text == "z0":
                self.advance()
                return ZVar(t.line, t.col, None, None)
            if t.text == "z":
                self.advance()
                self.expect("[")
                lvl = self.iexpr()
                self.expect(",", {"+", "-", "*"})
                idx = self.iexpr()
                self.expect("]", {"+", "-", "*"})
                return ZVar(t.line, t.col, lvl, idx)
            if t.text == "poch":
                self.advance()
                self.expect("(")
                base = self.expr()
                self.expect(",", _CONT)
                n = self.iexpr()
                self.expect(")", {"+", "-", "*"})
                return Poch(t.line, t.col, base, n)
            if t.text == "prod":
                self.advance()
                self.expect("(")
                v = self.tok
                if v.kind != "IDENT" or v.text in KEYWORDS:
                    self.fail({"identifier"})
                self.advance()
                self.expect("=")
                lo = self.iexpr()
                self.expect("..", {"+", "-", "*"})
                hi = self.iexpr()
                self.expect(";", {"+", "-", "*"})
                body = self.expr()
                self.expect(")", _CONT)
                return Prod(t.line, t.col, v.text, lo, hi, body)
            if t.text == "CT":
                self.fail(set(), "CT is only allowed at the start of an expression")
            self.advance()
            return Name(t.line, t.col, t.text)
        self.fail({"integer", "q", "z0", "z[", "poch", "prod", "(", "-", "identifier"})

    # integer expressions
    def iexpr(self) -> Node:
        node = self.iterm()
        while self.at("+") or self.at("-"):
            op = self.advance()
            node = BinOp(op.line, op.col, op.text, node, self.iterm())
        return node

    def iterm(self) -> Node:
        node = self.iunary()
        while self.at("*"):
            op = self.advance()
            node = BinOp(op.line, op.col, "*", node, self.iunary())
        return node

    def iunary(self) -> Node:
        t = self.tok
        if self.at("-"):
            self.advance()
            return Neg(t.line, t.col, self.iunary())
        if t.kind == "INT":
            self.advance()
            return Int(t.line, t.col, int(t.text))
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.advance()
            return Name(t.line, t.col, t.text)
        if self.at("("):
            self.advance()
            node = self.iexpr()
            self.expect(")", {"+", "-", "*"})
            return node
        self.fail({"integer", "identifier", "(", "-"})


def parse(text: str) -> DslAst:
    """Parse DSL text; raises ParseError with line, column and the expected tokens."""
    return _Parser(text).parse_top()


# ---------------------------------------------------------------- elaboration

_FREE_RE = re.compile(r"^(.*?[A-Za-z_])(\d*)$")


def free_var(name: str) -> VarId:
    m = _FREE_RE.match(name)
    base, digits = m.group(1), m.group(2)
    return free(base, int(digits)) if digits else free(name)


class _Elab:
    def __init__(self, bindings: Mapping[str, int]):
        self.env = dict(bindings)

    def err(self, node: Node, msg: str):
        raise ElaborationError(msg, node.line, node.col)

    def integer(self, node: Node) -> int:
        if isinstance(node, Int):
            return node.value
        if isinstance(node, Name):
            if node.name not in self.env:
                self.err(node, f"unbound integer parameter {node.name!r}")
            return self.env[node.name]
        if isinstance(node, Neg):
            return -self.integer(node.arg)
        if isinstance(node, BinOp) and node.op in "+-*":
            a, b = self.integer(node.left), self.integer(node.right)
            return a + b if node.op == "+" else a - b if node.op == "-" else a * b
        self.err(node, "expected an integer expression")

    def zvar(self, node: ZVar) -> VarId:
        if node.level is None:
            return Z0
        s, i = self.integer(node.level), self.integer(node.index)
        if s < 1 or i < 1:
            self.err(node, f"z[{s},{i}] needs positive level and index")
        return z(s, i)

    def value(self, node: Node) -> SeriesExpr:
        if isinstance(node, Int):
            return SeriesExpr(MultiLaurent.const(node.value))
        if isinstance(node, QSym):
            return SeriesExpr(MultiLaurent.q())
        if isinstance(node, ZVar):
            return SeriesExpr(MultiLaurent.var(self.zvar(node)))
        if isinstance(node, Name):
            if node.name in self.env:
                return SeriesExpr(MultiLaurent.const(self.env[node.name]))
            return SeriesExpr(MultiLaurent.var(free_var(node.name)))
        if isinstance(node, Neg):
            v = self.value(node.arg)
            return SeriesExpr(-v.numerator, v.denom)
        if isinstance(node, Sum):
            first = self.value(node.first)
            nums = [first.numerator]
            for op, term, line, col in node.rest:
                v = self.value(term)
                if v.denom != first.denom:
                    raise ElaborationError("terms of a sum must share their denominator factors", line, col)
                nums.append(v.numerator if op == "+" else -v.numerator)
            return SeriesExpr(_balanced_sum(nums), first.denom)
        if isinstance(node, BinOp):
            if node.op == "*":
                return self.value(node.left) * self.value(node.right)
            if node.op == "/":
                return self.divide(self.value(node.left), node.right)
        if isinstance(node, Pow):
            k = self.integer(node.exp)
            if k >= 0:
                base = self.value(node.base)
                out = SeriesExpr(MultiLaurent.one())
                for _ in range(k):
                    out = out * base
                return out
            out = SeriesExpr(MultiLaurent.one())
            for _ in range(-k):
                out = self.divide(out, node.base)
            return out
        if isinstance(node, Poch):
            base = self.monomial(node.base)
            n = self.integer(node.n)
            if n < 0:
                self.err(node.n, "Pochhammer length must be nonnegative")
            return SeriesExpr(pochhammer(base, n))
        if isinstance(node, Prod):
            lo, hi = self.integer(node.lo), self.integer(node.hi)
            out = SeriesExpr(MultiLaurent.one())
            saved = self.env.get(node.var)
            for i in range(lo, hi + 1):
                self.env[node.var] = i
                out = out * self.value(node.body)
            self._restore(node.var, saved)
            return out
        if isinstance(node, CTNode):
            self.err(node, "CT is only allowed at the top level")
        self.err(node, f"unsupported expression {type(node).__name__}")

    def _restore(self, name, saved):
        if saved is None:
            self.env.pop(name, None)
        else:
            self.env[name] = saved

    def monomial(self, node: Node) -> MultiLaurent:
        v = self.value(node)
        if v.denom or len(v.numerator) != 1 or v.numerator.den:
            self.err(node, "expected a monomial")
        return v.numerator

    def divide(self, num: SeriesExpr, node: Node) -> SeriesExpr:
        factors, qden, mono = self.divisor(node)
        out = SeriesExpr(num.numerator * mono ** -1, num.denom + tuple(factors))
        if qden:
            out = SeriesExpr(out.numerator.divide_den(qden), out.denom)
        return out

    def divisor(self, node: Node) -> tuple[list[GeomFactor], list[int], MultiLaurent]:
        """Split a divisor into geometric factors, (1 - q^m) factors and a monomial."""
        if isinstance(node, Poch):
            base = self.monomial(node.base)
            n = self.integer(node.n)
            if n < 0:
                self.err(node.n, "Pochhammer length must be nonnegative")
            (key, coef), = base.terms.items()
            m = Monomial.from_key(key)
            exps = m.as_dict()
            if coef != 1:
                self.err(node, "divisor Pochhammer base must have coefficient 1")
            if not exps:
                shifts = [m.qpow + i for i in range(n)]
                if 0 in shifts:
                    self.err(node, "division by zero: the divisor contains the factor (1 - 1)")
                return [], shifts, MultiLaurent.one()
            pos = [v for v, e in exps.items() if e == 1]
            neg = [v for v, e in exps.items() if e == -1]
            if len(exps) != 2 or len(pos) != 1 or len(neg) != 1:
                self.err(node, f"cannot divide by poch({m}, {n}): base must be q^u*x/y")
            try:
                return [GeomFactor(m.qpow + i, pos[0], neg[0]) for i in range(n)], [], MultiLaurent.one()
            except SmallnessError as exc:
                self.err(node, str(exc))
        if isinstance(node, BinOp) and node.op == "*":
            f1, d1, m1 = self.divisor(node.left)
            f2, d2, m2 = self.divisor(node.right)
            return f1 + f2, d1 + d2, m1 * m2
        if isinstance(node, Pow):
            k = self.integer(node.exp)
            if k < 0:
                self.err(node, "negative power inside a divisor")
            f, d, m = self.divisor(node.base)
            return f * k, d * k, m**k
        if isinstance(node, Prod):
            lo, hi = self.integer(node.lo), self.integer(node.hi)
            fs, ds, ms = [], [], MultiLaurent.one()
            saved = self.env.get(node.var)
            for i in range(lo, hi + 1):
                self.env[node.var] = i
                f, d, m = self.divisor(node.body)
                fs, ds, ms = fs + f, ds + d, ms * m
            self._restore(node.var, saved)
            return fs, ds, ms
        v = self.value(node)
        if v.denom or len(v.numerator) != 1 or v.numerator.den:
            self.err(node, "division is only allowed by Pochhammer factors or monomials")
        return [], [], v.numerator

    def ct_vars(self, pats, body: SeriesExpr) -> list[VarId]:
        present = body.variables()
        out: list[VarId] = []
        for p in pats:
            if isinstance(p, ZVar) and isinstance(p.index, Wild):
                s = self.integer(p.level)
                out += sorted(v for v in present if not v.is_free and v.level == s)
            elif isinstance(p, ZVar):
                out.append(self.zvar(p))
            else:
                if p.name in self.env:
                    self.err(p, f"{p.name!r} is bound to an integer, not a variable")
                out.append(free_var(p.name))
        return list(dict.fromkeys(out))


def _balanced_sum(xs: list[MultiLaurent]) -> MultiLaurent:
    while len(xs) > 1:
        xs = [xs[i] + xs[i + 1] if i + 1 < len(xs) else xs[i] for i in range(0, len(xs), 2)]
    return xs[0]


def elaborate(ast: DslAst, bindings: Mapping[str, int] | None = None) -> SeriesExpr:
    """The SeriesExpr of the expression (the body, when the text starts with CT)."""
    el = _Elab(bindings or {})
    body = ast.body if isinstance(ast, CTNode) else ast
    return el.value(body)


def ct_variables(ast: DslAst, bindings: Mapping[str, int] | None = None) -> list[VarId]:
    if not isinstance(ast, CTNode):
        return []
    el = _Elab(bindings or {})
    return el.ct_vars(ast.vars, el.value(ast.body))


def evaluate(ast: DslAst, bindings: Mapping[str, int] | None = None, method: str = "factored") -> SeriesExpr:
    """Elaborate and, for a CT expression, take the constant term."""
    e = elaborate(ast, bindings)
    if isinstance(ast, CTNode):
        vs = ct_variables(ast, bindings)
        out = eliminate(e, vs, method)
        return SeriesExpr(out.numerator.reduced(), out.denom)
    return e


def to_text(e: SeriesExpr | MultiLaurent) -> str:
    """Print a value in DSL syntax (inverse of elaborate(parse(.)))."""
    return e.to_dsl()


def parse_rational(text: str) -> Fraction:
    return Fraction(text)
