"""Cell coordinates, rectangles and A1 labels.

Coordinates are 1-based: ``Addr(1, 1)`` is A1. The grid holds columns
A..ZZ (702) and 65536 rows.
"""

from __future__ import annotations

import re
from typing import Iterator, NamedTuple

from .errors import RefOutOfGrid

MAX_COL = 702
MAX_ROW = 65536

_ADDR_RE = re.compile(r"^\$?([A-Za-z]{1,3})\$?(\d+)$")


def col_label(col: int) -> str:
    if not 1 <= col <= MAX_COL:
        raise RefOutOfGrid(f"column {col} outside A..ZZ")
    if col <= 26:
        return chr(64 + col)
    q, r = divmod(col - 1, 26)
    return chr(64 + q) + chr(65 + r)


def col_index(label: str) -> int:
    label = label.upper()
    n = 0
    for ch in label:
        if not "A" <= ch <= "Z":
            raise ValueError(f"bad column label {label!r}")
        n = n * 26 + (ord(ch) - 64)
    return n


class Addr(NamedTuple):
    col: int
    row: int

    @classmethod
    def parse(cls, text: str) -> "Addr":
        """Parse ``"B7"`` (``$`` markers are ignored) into ``Addr(2, 7)``."""
        m = _ADDR_RE.match(text.strip())
        if m is None:
            raise ValueError(f"not a cell address: {text!r}")
        addr = cls(col_index(m.group(1)), int(m.group(2)))
        addr.check()
        return addr

    def check(self) -> "Addr":
        if not (1 <= self.col <= MAX_COL and 1 <= self.row <= MAX_ROW):
            raise RefOutOfGrid(f"({self.col}, {self.row}) outside the grid")
        return self

    def in_grid(self) -> bool:
        return 1 <= self.col <= MAX_COL and 1 <= self.row <= MAX_ROW

    def offset(self, dcol: int, drow: int) -> "Addr":
        return Addr(self.col + dcol, self.row + drow)

    def sort_key(self) -> tuple[int, int]:
        """Row-major reading order."""
        return (self.row, self.col)

    def __str__(self) -> str:
        return f"{col_label(self.col)}{self.row}"


def row_major(addrs) -> list[Addr]:
    return sorted(addrs, key=Addr.sort_key)


class Rect(NamedTuple):
    """Inclusive rectangle; ``(left, top)`` is the top-left corner."""

    left: int
    top: int
    right: int
    bottom: int

    @classmethod
    def of(cls, a: Addr, b: Addr | None = None) -> "Rect":
        b = a if b is None else b
        return cls(min(a.col, b.col), min(a.row, b.row), max(a.col, b.col), max(a.row, b.row))

    @classmethod
    def parse(cls, text: str) -> "Rect":
        """``"A1:B3"`` or a single ``"A1"``."""
        parts = text.strip().split(":")
        if len(parts) == 1:
            return cls.of(Addr.parse(parts[0]))
        if len(parts) == 2:
            return cls.of(Addr.parse(parts[0]), Addr.parse(parts[1]))
        raise ValueError(f"not a range: {text!r}")

    @property
    def first(self) -> Addr:
        return Addr(self.left, self.top)

    @property
    def last(self) -> Addr:
        return Addr(self.right, self.bottom)

    @property
    def width(self) -> int:
        return self.right - self.left + 1

    @property
    def height(self) -> int:
        return self.bottom - self.top + 1

    @property
    def size(self) -> int:
        return self.width * self.height

    def contains(self, addr: Addr) -> bool:
        return self.left <= addr.col <= self.right and self.top <= addr.row <= self.bottom

    def intersects(self, other: "Rect") -> bool:
        return not (
            other.left > self.right
            or other.right < self.left
            or other.top > self.bottom
            or other.bottom < self.top
        )

    def translate(self, dcol: int, drow: int) -> "Rect":
        return Rect(self.left + dcol, self.top + drow, self.right + dcol, self.bottom + drow)

    def in_grid(self) -> bool:
        return self.first.in_grid() and self.last.in_grid()

    def cells(self) -> Iterator[Addr]:
        """Member cells in row-major order."""
        for row in range(self.top, self.bottom + 1):
            for col in range(self.left, self.right + 1):
                yield Addr(col, row)

    def __str__(self) -> str:
        if self.left == self.right and self.top == self.bottom:
            return str(self.first)
        return f"{self.first}:{self.last}"
