"""Sparse sheet storage, cell contents and the value coercion table.

Values are plain Python objects: ``float`` for numbers, ``str`` for text,
``bool``, :class:`CellError` and the :data:`BLANK` singleton.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from .addr import MAX_COL, MAX_ROW, Addr, row_major
from .errors import FormulaSyntaxError, GridlabError, InputError, OutOfBounds
from .formula import Expr, format_number, parse_content, to_text


class _Blank:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BLANK"

    def __bool__(self) -> bool:
        return False


BLANK = _Blank()


@dataclass(frozen=True)
class CellError:
    code: str

    def __str__(self) -> str:
        return self.code


REF = CellError("#REF!")
CIRC = CellError("#CIRC!")
VALUE = CellError("#VALUE!")
DIV0 = CellError("#DIV/0!")
ERROR_CODES = {e.code: e for e in (REF, CIRC, VALUE, DIV0)}

Value = Union[float, str, bool, CellError, _Blank]


# Coercion -------------------------------------------------------------------


def to_number(v: Value) -> float | CellError:
    """Numeric view of a value: Blank is 0, Text and Bool are #VALUE!."""
    if isinstance(v, CellError):
        return v
    if v is BLANK:
        return 0.0
    if isinstance(v, bool) or isinstance(v, str):
        return VALUE
    return float(v)


def _kind_rank(v: Value) -> int:
    # mixed-kind ordering: numbers < text < booleans
    if isinstance(v, bool):
        return 2
    if isinstance(v, str):
        return 1
    return 0


def binary_op(op: str, a: Value, b: Value) -> Value:
    """Apply ``op`` to two values. Total: every combination has a result."""
    if isinstance(a, CellError):
        return a
    if isinstance(b, CellError):
        return b
    if op in ("+", "-", "*", "/"):
        x, y = to_number(a), to_number(b)
        if isinstance(x, CellError):
            return x
        if isinstance(y, CellError):
            return y
        if op == "+":
            r = x + y
        elif op == "-":
            r = x - y
        elif op == "*":
            r = x * y
        else:
            if y == 0:
                return DIV0
            r = x / y
        return r if math.isfinite(r) else VALUE
    # comparisons; a blank takes the kind of the other side
    if a is BLANK:
        a = "" if isinstance(b, str) else (False if isinstance(b, bool) else 0.0)
    if b is BLANK:
        b = "" if isinstance(a, str) else (False if isinstance(a, bool) else 0.0)
    ka, kb = _kind_rank(a), _kind_rank(b)
    if ka != kb:
        ka_, kb_ = ka, kb
    else:
        ka_, kb_ = a, b
    if op == "=":
        return ka == kb and a == b
    if op == "<>":
        return not (ka == kb and a == b)
    if op == "<":
        return ka_ < kb_
    if op == ">":
        return ka_ > kb_
    if op == "<=":
        return ka_ <= kb_
    if op == ">=":
        return ka_ >= kb_
    raise ValueError(f"unknown operator {op!r}")


def truth(v: Value) -> bool | CellError:
    """Condition view of a value for IF."""
    if isinstance(v, CellError):
        return v
    if isinstance(v, bool):
        return v
    if v is BLANK:
        return False
    if isinstance(v, str):
        return VALUE
    return v != 0


def format_value(v: Value) -> str:
    """Stable text rendering: at most 9 fractional digits, zeros trimmed."""
    if v is BLANK:
        return ""
    if isinstance(v, CellError):
        return v.code
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    s = f"{v:.9f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def values_equal(a: Value, b: Value, tol: float = 1e-9) -> bool:
    if isinstance(a, float) and isinstance(b, float) and not isinstance(a, bool) and not isinstance(b, bool):
        return abs(a - b) <= tol
    return type(a) is type(b) and a == b


# Contents -------------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass
class Formula:
    """A formula cell. ``cached`` is the current value, ``prior`` the one before it."""

    expr: Expr
    cached: Value = BLANK
    prior: Value = BLANK
    frozen: bool = False

    def copy(self) -> "Formula":
        return replace(self)


Content = Union[Literal, Formula]


def content_from_text(raw: str, addr: Addr) -> Content | None:
    """Parse raw cell input; ``None`` means the cell becomes empty."""
    if raw == "":
        return None
    parsed = parse_content(raw, addr)
    if isinstance(parsed, (float, str)):
        return Literal(parsed)
    return Formula(parsed)


def content_text(content: Content | None, addr: Addr) -> str:
    """Raw input text that reproduces ``content`` at ``addr``."""
    if content is None:
        return ""
    if isinstance(content, Formula):
        return to_text(content.expr, addr)
    v = content.value
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return format_number(v)
    return str(v)


# Sheet ----------------------------------------------------------------------


@dataclass
class Sheet:
    """Sparse map of non-empty cells. Absent coordinates are empty."""

    cells: dict = field(default_factory=dict)
    max_col: int = MAX_COL
    max_row: int = MAX_ROW

    def in_bounds(self, addr: Addr) -> bool:
        return 1 <= addr.col <= self.max_col and 1 <= addr.row <= self.max_row

    def check(self, addr: Addr) -> None:
        if not self.in_bounds(addr):
            raise OutOfBounds(f"{addr!r} outside the sheet")

    def get(self, addr: Addr) -> Content | None:
        return self.cells.get(addr)

    def put(self, addr: Addr, content: Content | None) -> None:
        if content is None:
            self.cells.pop(addr, None)
        else:
            self.check(addr)
            self.cells[addr] = content

    def set_content(self, addr: Addr, raw: str) -> set[Addr]:
        """Store parsed ``raw`` at ``addr`` without evaluating anything."""
        self.check(addr)
        self.put(addr, content_from_text(raw, addr))
        return {addr}

    def read_value(self, addr: Addr) -> Value:
        c = self.cells.get(addr)
        if c is None:
            return BLANK
        if isinstance(c, Literal):
            return c.value
        return c.cached

    def formula_cells(self) -> list[Addr]:
        return row_major(a for a, c in self.cells.items() if isinstance(c, Formula))

    def __iter__(self) -> Iterator[Addr]:
        return iter(row_major(self.cells))

    def __len__(self) -> int:
        return len(self.cells)

    def copy(self) -> "Sheet":
        cells = {a: (c.copy() if isinstance(c, Formula) else c) for a, c in self.cells.items()}
        return Sheet(cells, self.max_col, self.max_row)

    def text(self, addr: Addr) -> str:
        return content_text(self.cells.get(addr), addr)


# Sheet file format ------------------------------------------------------------


def parse_sheet_text(text: str, path: str = "<sheet>") -> list[tuple[Addr, str]]:
    """Parse ``A1 = 1`` lines into ``(addr, raw)`` pairs; ``#`` starts a comment."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        head, sep, raw = line.partition("=")
        if not sep:
            raise InputError("expected '<cell> = <content>'", path, lineno, 1)
        try:
            addr = Addr.parse(head)
        except (ValueError, GridlabError) as exc:
            raise InputError(str(exc), path, lineno, 1) from exc
        raw = raw[1:] if raw.startswith(" ") else raw
        raw = raw.rstrip("\r\n")
        try:
            content_from_text(raw, addr)
        except FormulaSyntaxError as exc:
            col = len(line) - len(raw) + exc.offset + 1
            raise InputError(exc.message, path, lineno, col) from exc
        except GridlabError as exc:
            raise InputError(str(exc), path, lineno, len(line) - len(raw) + 1) from exc
        entries.append((addr, raw))
    return entries


def dump_sheet(sheet: Sheet) -> str:
    return "".join(f"{addr} = {sheet.text(addr)}\n" for addr in sheet)
