"""Formula language: AST, parser, printer and reference extraction.

References are stored host-relative: a relative axis holds the signed
distance from the cell that owns the formula, an absolute axis holds the
coordinate itself. Parsing and printing therefore both take the host
address.

Grammar (``;`` separates arguments)::

    formula    := "=" comparison
    comparison := additive (("=" | "<>" | "<" | ">" | "<=" | ">=") additive)*
    additive   := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := ("-" | "+") unary | primary
    primary    := NUMBER | STRING | TRUE | FALSE | ref [":" ref] | "#REF!"
                | "(" comparison ")" | NAME "(" [arg (";" arg)*] ")"
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

from .addr import MAX_COL, MAX_ROW, Addr, Rect, col_index, col_label
from .errors import FormulaSyntaxError, RefOutOfGrid, UnknownFunction

AGGREGATES = frozenset({"SUM", "AVG"})
FUNCTIONS = AGGREGATES | {"NOW"}
COMPARISONS = ("=", "<>", "<", ">", "<=", ">=")
ARITHMETIC = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Ref:
    """One cell reference. Relative axes hold offsets from the host cell."""

    col: int
    row: int
    col_abs: bool = False
    row_abs: bool = False

    @classmethod
    def to(cls, target: Addr, host: Addr, col_abs: bool = False, row_abs: bool = False) -> "Ref":
        """Encode a reference to absolute ``target`` as seen from ``host``."""
        return cls(
            target.col if col_abs else target.col - host.col,
            target.row if row_abs else target.row - host.row,
            col_abs,
            row_abs,
        )

    def resolve(self, host: Addr) -> Addr:
        """Absolute target, unchecked (may lie outside the grid)."""
        return Addr(
            self.col if self.col_abs else host.col + self.col,
            self.row if self.row_abs else host.row + self.row,
        )

    def target(self, host: Addr) -> Addr:
        addr = self.resolve(host)
        if not addr.in_grid():
            raise RefOutOfGrid(f"reference resolves to ({addr.col}, {addr.row}) from {host}")
        return addr

    def label(self, host: Addr) -> str:
        addr = self.target(host)
        return (
            ("$" if self.col_abs else "")
            + col_label(addr.col)
            + ("$" if self.row_abs else "")
            + str(addr.row)
        )


# AST nodes -----------------------------------------------------------------


@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class SingleRef:
    ref: Ref


@dataclass(frozen=True)
class RangeRef:
    first: Ref
    last: Ref


@dataclass(frozen=True)
class DeadRef:
    """A reference whose target was deleted. Prints as ``#REF!``.

    ``range`` marks a deleted aggregation range: inside SUM/AVG it reads as
    an empty extent rather than an error.
    """

    range: bool = False


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[NumberLit, TextLit, BoolLit, SingleRef, RangeRef, DeadRef, BinOp, Neg, If, Call]


def make_range(a: Ref, b: Ref, host: Addr) -> RangeRef:
    """Build a range with corners normalized to top-left / bottom-right.

    Each axis keeps the absolute flag of the coordinate it came from.
    """
    pa, pb = a.resolve(host), b.resolve(host)
    c1, c1_abs, c2, c2_abs = (
        (pa.col, a.col_abs, pb.col, b.col_abs) if pa.col <= pb.col else (pb.col, b.col_abs, pa.col, a.col_abs)
    )
    r1, r1_abs, r2, r2_abs = (
        (pa.row, a.row_abs, pb.row, b.row_abs) if pa.row <= pb.row else (pb.row, b.row_abs, pa.row, a.row_abs)
    )
    return RangeRef(
        Ref.to(Addr(c1, r1), host, c1_abs, r1_abs),
        Ref.to(Addr(c2, r2), host, c2_abs, r2_abs),
    )


def range_extent(node: RangeRef, host: Addr) -> Rect:
    return Rect.of(node.first.target(host), node.last.target(host))


# Tokenizer ------------------------------------------------------------------


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<reference>\$?[A-Za-z]{1,3}\$?\d+(?![A-Za-z0-9_(]))
  | (?P<deadref>\#REF!)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op><=|>=|<>|[-+*/=<>])
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<semi>;)
  | (?P<colon>:)
    """,
    re.VERBOSE,
)

_REF_PARTS = re.compile(r"(\$?)([A-Za-z]{1,3})(\$?)(\d+)")


def tokenize(text: str, start: int = 0) -> list[Token]:
    tokens = []
    pos = start
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos] == ",":
                raise FormulaSyntaxError("',' is not an argument separator, use ';'", pos, text)
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


# Parser ---------------------------------------------------------------------


_NUMBER_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


class _Parser:
    def __init__(self, text: str, host: Addr):
        self.text = text
        self.host = host
        self.tokens = tokenize(text, 1)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return FormulaSyntaxError(message, tok.pos, self.text)

    def expect(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty formula")
        expr = self.scalar(self.comparison)
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return expr

    def scalar(self, rule: Callable[[], Expr]) -> Expr:
        """Parse with ``rule`` and reject a bare range outside SUM/AVG."""
        tok = self.tok
        node = rule()
        if isinstance(node, RangeRef) or node == DeadRef(True):
            raise self.error("range reference outside an aggregate", tok)
        return node

    def binary(self, ops, operand: Callable[[], Expr]) -> Expr:
        left = self.scalar(operand)
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance().text
            right = self.scalar(operand)
            left = BinOp(op, left, right)
        return left

    def comparison(self) -> Expr:
        return self.binary(COMPARISONS, self.additive)

    def additive(self) -> Expr:
        return self.binary(("+", "-"), self.term)

    def term(self) -> Expr:
        return self.binary(("*", "/"), self.unary)

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text in ("-", "+"):
            sign = self.advance().text
            if sign == "-" and self.tok.kind == "number":
                return NumberLit(-float(self.advance().text))
            operand = self.scalar(self.unary)
            return Neg(operand) if sign == "-" else operand
        return self.primary()

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return NumberLit(float(tok.text))
        if tok.kind == "string":
            self.advance()
            return TextLit(tok.text[1:-1].replace('""', '"'))
        if tok.kind == "reference":
            self.advance()
            first = self.ref(tok)
            if self.tok.kind == "colon":
                self.advance()
                last = self.ref(self.expect("reference", "a cell reference after ':'"))
                return make_range(first, last, self.host)
            return SingleRef(first)
        if tok.kind == "deadref":
            self.advance()
            if self.tok.kind == "colon":
                self.advance()
                self.expect("deadref", "'#REF!' after '#REF!:'")
                return DeadRef(True)
            return DeadRef(False)
        if tok.kind == "lparen":
            self.advance()
            inner = self.scalar(self.comparison)
            self.expect("rparen", "')'")
            return inner
        if tok.kind == "name":
            return self.name()
        if tok.kind == "end":
            raise self.error("unexpected end of formula")
        raise self.error(f"unexpected {tok.text!r}")

    def name(self) -> Expr:
        tok = self.advance()
        name = tok.text.upper()
        if self.tok.kind != "lparen":
            if name in ("TRUE", "FALSE"):
                return BoolLit(name == "TRUE")
            raise self.error(f"unknown name {tok.text!r}", tok)
        if name != "IF" and name not in FUNCTIONS:
            raise UnknownFunction(tok.text, tok.pos, self.text)
        self.advance()
        args = []
        arg_toks = []
        if self.tok.kind != "rparen":
            while True:
                arg_toks.append(self.tok)
                if name in AGGREGATES and self.range_ahead():
                    args.append(self.primary())
                else:
                    args.append(self.scalar(self.comparison))
                if self.tok.kind != "semi":
                    break
                self.advance()
        self.expect("rparen", "')' or ';'")
        if name == "IF":
            if len(args) != 3:
                raise self.error(f"IF takes 3 arguments, got {len(args)}", tok)
            return If(*args)
        if name == "NOW":
            if args:
                raise self.error("NOW takes no arguments", tok)
        elif not args:
            raise self.error(f"{name} needs at least one argument", tok)
        for arg, atok in zip(args, arg_toks):
            if isinstance(arg, TextLit):
                raise self.error(f"{name} arguments must be numeric or references", atok)
        return Call(name, tuple(args))

    def range_ahead(self) -> bool:
        nxt = self.tokens[self.i + 1] if self.i + 1 < len(self.tokens) else None
        return self.tok.kind in ("reference", "deadref") and nxt is not None and nxt.kind == "colon"

    def ref(self, tok: Token) -> Ref:
        m = _REF_PARTS.fullmatch(tok.text)
        col, row = col_index(m.group(2)), int(m.group(4))
        if not (1 <= col <= MAX_COL and 1 <= row <= MAX_ROW):
            raise RefOutOfGrid(f"{tok.text} at offset {tok.pos} lies outside the grid")
        return Ref.to(Addr(col, row), self.host, bool(m.group(1)), bool(m.group(3)))


def parse(text: str, host: Addr) -> Expr:
    """Parse a formula (leading ``=``) as written in cell ``host``.

    Raises FormulaSyntaxError / UnknownFunction on malformed text. Use
    :func:`parse_content` for raw cell input that may be a literal.
    """
    if not text.startswith("="):
        raise FormulaSyntaxError("formula must start with '='", 0, text)
    return _Parser(text, host).parse()


def parse_literal(text: str) -> float | str:
    """Literal cell input: a number if it lexes as a decimal, else text.

    Text wrapped in double quotes is unquoted (``""`` escapes a quote).
    """
    if _NUMBER_RE.match(text.strip()):
        return float(text.strip())
    if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
        return text[1:-1].replace('""', '"')
    return text


def parse_content(text: str, host: Addr) -> Expr | float | str:
    return parse(text, host) if text.startswith("=") else parse_literal(text)


# Printer --------------------------------------------------------------------

_PREC = {op: 1 for op in COMPARISONS} | {"+": 2, "-": 2, "*": 3, "/": 3}
_NEG_PREC = 4
_ATOM = 5


def format_number(x: float) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    if isinstance(node, NumberLit) and node.value < 0:
        return _NEG_PREC
    return _ATOM


def _render(node: Expr, host: Addr) -> str:
    if isinstance(node, NumberLit):
        return format_number(node.value)
    if isinstance(node, TextLit):
        return '"' + node.value.replace('"', '""') + '"'
    if isinstance(node, BoolLit):
        return "TRUE" if node.value else "FALSE"
    if isinstance(node, SingleRef):
        return node.ref.label(host)
    if isinstance(node, RangeRef):
        return f"{node.first.label(host)}:{node.last.label(host)}"
    if isinstance(node, DeadRef):
        return "#REF!:#REF!" if node.range else "#REF!"
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        left = _render(node.left, host)
        if _prec(node.left) < prec:
            left = f"({left})"
        right = _render(node.right, host)
        if _prec(node.right) <= prec:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    if isinstance(node, Neg):
        inner = _render(node.operand, host)
        # "-(3)" keeps Neg(3) distinct from the literal -3
        if _prec(node.operand) < _NEG_PREC or isinstance(node.operand, NumberLit):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, If):
        return f"IF({_render(node.cond, host)};{_render(node.then, host)};{_render(node.orelse, host)})"
    if isinstance(node, Call):
        return f"{node.name}({';'.join(_render(a, host) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def to_text(expr: Expr, host: Addr) -> str:
    """Canonical A1 text of ``expr`` as written in ``host`` (with leading ``=``)."""
    return "=" + _render(expr, host)


# Introspection --------------------------------------------------------------


class Reference(NamedTuple):
    kind: str  # "single" | "range"
    extent: Rect


def children(node: Expr) -> tuple:
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, If):
        return (node.cond, node.then, node.orelse)
    if isinstance(node, Call):
        return node.args
    return ()


def references(expr: Expr, host: Addr) -> list[Reference]:
    """Every reference in left-to-right AST order, resolved against ``host``."""
    out: list[Reference] = []

    def walk(node):
        if isinstance(node, SingleRef):
            out.append(Reference("single", Rect.of(node.ref.target(host))))
        elif isinstance(node, RangeRef):
            out.append(Reference("range", range_extent(node, host)))
        for child in children(node):
            walk(child)

    walk(expr)
    return out


def rewrite(expr: Expr, fn: Callable[[Expr], Expr | None]) -> Expr:
    """Bottom-up rebuild: ``fn`` may return a replacement for reference nodes."""
    if isinstance(expr, (SingleRef, RangeRef)):
        out = fn(expr)
        return expr if out is None else out
    if isinstance(expr, BinOp):
        return BinOp(expr.op, rewrite(expr.left, fn), rewrite(expr.right, fn))
    if isinstance(expr, Neg):
        return Neg(rewrite(expr.operand, fn))
    if isinstance(expr, If):
        return If(rewrite(expr.cond, fn), rewrite(expr.then, fn), rewrite(expr.orelse, fn))
    if isinstance(expr, Call):
        return Call(expr.name, tuple(rewrite(a, fn) for a in expr.args))
    return expr


def relocate(expr: Expr, old_host: Addr, new_host: Addr) -> Expr:
    """Re-encode ``expr`` for ``new_host`` keeping every absolute target."""

    def fix(node):
        if isinstance(node, SingleRef):
            r = node.ref
            return SingleRef(Ref.to(r.resolve(old_host), new_host, r.col_abs, r.row_abs))
        a, b = node.first, node.last
        return RangeRef(
            Ref.to(a.resolve(old_host), new_host, a.col_abs, a.row_abs),
            Ref.to(b.resolve(old_host), new_host, b.col_abs, b.row_abs),
        )

    return rewrite(expr, fix)
