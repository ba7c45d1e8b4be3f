"""Structural edits and their reference-adjustment rules.

Every operation is a pure function of the current sheet that returns a
*delta*: ``{addr: new content or None}``. :meth:`Engine.apply` installs a
delta atomically and recalculates, so an operation that raises leaves the
sheet untouched.

Move keeps computational links (pointer semantics for single references,
fixed rectangles for aggregation ranges); copy and fill keep the geometric
pattern of relative references; row/column insertion and deletion rewrite
relative *and* absolute references so established links survive.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Callable, Union

from .addr import Addr, Rect
from .errors import NonNumericSeed, OutOfBounds, OverlapError
from .formula import DeadRef, Expr, RangeRef, Ref, SingleRef, make_range, rewrite
from .grid import BLANK, Content, Formula, Literal, Sheet

# Operation records ------------------------------------------------------------


@dataclass(frozen=True)
class Set:
    addr: Addr
    raw: str


@dataclass(frozen=True)
class Move:
    src: Rect
    dest: Addr


@dataclass(frozen=True)
class Copy:
    src: Rect
    dest: Addr


@dataclass(frozen=True)
class Clear:
    rect: Rect


@dataclass(frozen=True)
class Insert:
    axis: str  # "row" | "col"
    at: int
    n: int = 1


@dataclass(frozen=True)
class Delete:
    axis: str
    at: int
    n: int = 1


@dataclass(frozen=True)
class Fill:
    seed: Rect
    target: Rect
    mode: str = "values"  # "values" | "formulas"
    gesture: str = "plain"  # "plain" | "ctrl"


EditOp = Union[Set, Move, Copy, Clear, Insert, Delete, Fill]


def _with_expr(content: Formula, expr: Expr) -> Formula:
    return Formula(expr, content.cached, content.prior, content.frozen)


def _check_rect(sheet: Sheet, rect: Rect) -> None:
    if not (sheet.in_bounds(rect.first) and sheet.in_bounds(rect.last)):
        raise OutOfBounds(f"{rect!r} extends outside the sheet")


def _members(sheet: Sheet, rect: Rect):
    """Occupied cells of ``rect`` (cheap for huge rectangles)."""
    if rect.size <= len(sheet):
        return [a for a in rect.cells() if sheet.get(a) is not None]
    return [a for a in sheet if rect.contains(a)]


# Move -------------------------------------------------------------------------


def move_block(sheet: Sheet, src: Rect, dest: Addr) -> dict:
    """Drag-and-drop ``src`` so its top-left lands on ``dest``.

    Single references into the block follow the moved cells wherever they
    are written. A range follows only if it lies wholly inside the block;
    otherwise its rectangle stays where it was.
    """
    dcol, drow = dest.col - src.left, dest.row - src.top
    dst = src.translate(dcol, drow)
    _check_rect(sheet, src)
    _check_rect(sheet, dst)
    if dst == src:
        return {}
    if dst.intersects(src):
        raise OverlapError(f"destination {dst} overlaps source {src}")

    def moved(a: Addr) -> Addr:
        return a.offset(dcol, drow) if src.contains(a) else a

    def adjust(expr: Expr, old_host: Addr, new_host: Addr) -> Expr:
        def fix(node):
            if isinstance(node, SingleRef):
                r = node.ref
                return SingleRef(Ref.to(moved(r.resolve(old_host)), new_host, r.col_abs, r.row_abs))
            a, b = node.first, node.last
            rect = Rect.of(a.resolve(old_host), b.resolve(old_host))
            inside = src.contains(rect.first) and src.contains(rect.last)
            shift = (dcol, drow) if inside else (0, 0)
            return RangeRef(
                Ref.to(a.resolve(old_host).offset(*shift), new_host, a.col_abs, a.row_abs),
                Ref.to(b.resolve(old_host).offset(*shift), new_host, b.col_abs, b.row_abs),
            )

        return rewrite(expr, fix)

    delta: dict = {}
    for addr in _members(sheet, src):
        delta[addr] = None
    for addr in _members(sheet, dst):
        delta[addr] = None
    for addr in _members(sheet, src):
        content = sheet.get(addr)
        target = moved(addr)
        if isinstance(content, Formula):
            content = _with_expr(content, adjust(content.expr, addr, target))
        delta[target] = content
    for addr in list(sheet.cells):
        content = sheet.get(addr)
        if src.contains(addr) or dst.contains(addr) or not isinstance(content, Formula):
            continue
        expr = adjust(content.expr, addr, addr)
        if expr != content.expr:
            delta[addr] = _with_expr(content, expr)
    return {a: c for a, c in delta.items() if not (c is None and sheet.get(a) is None)}


# Copy / clear -------------------------------------------------------------------


def clone_formula(expr: Expr, new_host: Addr, sheet: Sheet) -> Expr:
    """``expr`` written at ``new_host`` with the same geometric pattern.

    Host-relative storage means relative axes already shift with the host;
    references that would leave the sheet become #REF!.
    """

    def fix(node):
        if isinstance(node, SingleRef):
            return node if sheet.in_bounds(node.ref.resolve(new_host)) else DeadRef(False)
        if not (sheet.in_bounds(node.first.resolve(new_host)) and sheet.in_bounds(node.last.resolve(new_host))):
            return DeadRef(True)
        return make_range(node.first, node.last, new_host)

    return rewrite(expr, fix)


def _clone(content: Content | None, new_host: Addr, sheet: Sheet) -> Content | None:
    if isinstance(content, Formula):
        return Formula(clone_formula(content.expr, new_host, sheet))
    return content


def copy_block(sheet: Sheet, src: Rect, dest: Addr) -> dict:
    """Copy/paste ``src`` to ``dest``; the source block is left untouched."""
    dcol, drow = dest.col - src.left, dest.row - src.top
    dst = src.translate(dcol, drow)
    _check_rect(sheet, src)
    _check_rect(sheet, dst)
    delta = {a: None for a in _members(sheet, dst)}
    for addr in _members(sheet, src):
        delta[addr.offset(dcol, drow)] = _clone(sheet.get(addr), addr.offset(dcol, drow), sheet)
    return delta


def clear_contents(sheet: Sheet, rect: Rect) -> dict:
    """Empty every cell of ``rect``; references to them read blank (0)."""
    return {a: None for a in _members(sheet, rect)}


# Insert / delete rows and columns ------------------------------------------------


def _axis_get(axis: str) -> Callable[[Addr], int]:
    if axis == "row":
        return lambda a: a.row
    if axis == "col":
        return lambda a: a.col
    raise ValueError(f"axis must be 'row' or 'col', not {axis!r}")


def _axis_set(axis: str, a: Addr, value: int) -> Addr:
    return Addr(a.col, value) if axis == "row" else Addr(value, a.row)


def _restructure(sheet: Sheet, axis: str, shift_cell, shift_single, shift_span) -> dict:
    """Rebuild the sheet with cells relocated by ``shift_cell`` and every
    reference rewritten. Returns the delta against the current sheet."""
    get = _axis_get(axis)
    new_cells: dict = {}
    for addr, content in sheet.cells.items():
        new_addr = shift_cell(addr)
        if new_addr is None:
            continue
        if not sheet.in_bounds(new_addr):
            raise OutOfBounds(f"{addr} would be pushed outside the sheet")
        if isinstance(content, Formula):

            def fix(node, host=addr, new_host=new_addr):
                if isinstance(node, SingleRef):
                    r = node.ref
                    t = r.resolve(host)
                    pos = shift_single(get(t))
                    if pos is None:
                        return DeadRef(False)
                    t = _axis_set(axis, t, pos)
                    if not sheet.in_bounds(t):
                        raise OutOfBounds(f"reference in {host} would be pushed outside the sheet")
                    return SingleRef(Ref.to(t, new_host, r.col_abs, r.row_abs))
                a, b = node.first, node.last
                ta, tb = a.resolve(host), b.resolve(host)
                span = shift_span(get(ta), get(tb))
                if span is None:
                    return DeadRef(True)
                ta, tb = _axis_set(axis, ta, span[0]), _axis_set(axis, tb, span[1])
                if not (sheet.in_bounds(ta) and sheet.in_bounds(tb)):
                    raise OutOfBounds(f"range in {host} would be pushed outside the sheet")
                return RangeRef(
                    Ref.to(ta, new_host, a.col_abs, a.row_abs), Ref.to(tb, new_host, b.col_abs, b.row_abs)
                )

            expr = rewrite(content.expr, fix)
            if expr != content.expr or new_addr != addr:
                content = _with_expr(content, expr)
        new_cells[new_addr] = content
    delta = {}
    for addr in set(sheet.cells) | set(new_cells):
        old, new = sheet.cells.get(addr), new_cells.get(addr)
        if old is not new:
            delta[addr] = new
    return delta


def insert_axis(sheet: Sheet, axis: str, at: int, n: int = 1) -> dict:
    """Insert ``n`` empty rows/columns before index ``at``.

    A range grows only when the insertion falls strictly inside it; at
    either border its membership is unchanged.
    """
    _axis_get(axis)
    limit = sheet.max_row if axis == "row" else sheet.max_col
    if not (1 <= at <= limit) or n < 1:
        raise OutOfBounds(f"cannot insert {n} {axis}(s) at {at}")
    get = _axis_get(axis)

    def shift(pos: int) -> int:
        return pos + n if pos >= at else pos

    def span(lo: int, hi: int):
        if at <= lo:
            return lo + n, hi + n
        if at <= hi:
            return lo, hi + n
        return lo, hi

    return _restructure(sheet, axis, lambda a: _axis_set(axis, a, shift(get(a))), shift, span)


def delete_axis(sheet: Sheet, axis: str, at: int, n: int = 1) -> dict:
    """Delete rows/columns ``at .. at+n-1``.

    Single references to deleted cells become #REF!; ranges shrink by the
    removed span and a range deleted entirely reads as an empty extent.
    """
    _axis_get(axis)
    limit = sheet.max_row if axis == "row" else sheet.max_col
    end = at + n - 1
    if not (1 <= at and end <= limit) or n < 1:
        raise OutOfBounds(f"cannot delete {n} {axis}(s) at {at}")
    get = _axis_get(axis)

    def shift(pos: int):
        if pos < at:
            return pos
        if pos <= end:
            return None
        return pos - n

    def span(lo: int, hi: int):
        new_lo = lo if lo < at else (at if lo <= end else lo - n)
        new_hi = hi if hi < at else (at - 1 if hi <= end else hi - n)
        return None if new_lo > new_hi else (new_lo, new_hi)

    def move(a: Addr):
        pos = shift(get(a))
        return None if pos is None else _axis_set(axis, a, pos)

    return _restructure(sheet, axis, move, shift, span)


# Fill -----------------------------------------------------------------------------


def _fill_geometry(seed: Rect, target: Rect):
    """Return (lanes, k, extra) where each lane lists target cells in fill
    direction starting at the seed, ``k`` the seed length per lane."""
    if not (target.left <= seed.left and seed.right <= target.right and target.top <= seed.top and seed.bottom <= target.bottom):
        raise ValueError(f"fill target {target} must contain seed {seed}")
    vertical = target.left == seed.left and target.right == seed.right and target.height > seed.height
    horizontal = target.top == seed.top and target.bottom == seed.bottom and target.width > seed.width
    if vertical == horizontal:
        raise ValueError("fill target must extend the seed along exactly one axis")
    lanes = []
    if vertical:
        forward = target.top == seed.top
        if not forward and target.bottom != seed.bottom:
            raise ValueError("fill may extend the seed in one direction only")
        rows = range(target.top, target.bottom + 1) if forward else range(target.bottom, target.top - 1, -1)
        for col in range(seed.left, seed.right + 1):
            lanes.append([Addr(col, r) for r in rows])
        k = seed.height
    else:
        forward = target.left == seed.left
        if not forward and target.right != seed.right:
            raise ValueError("fill may extend the seed in one direction only")
        cols = range(target.left, target.right + 1) if forward else range(target.right, target.left - 1, -1)
        for row in range(seed.top, seed.bottom + 1):
            lanes.append([Addr(c, row) for c in cols])
        k = seed.width
    return lanes, k


def _numbers(values: list) -> list:
    if any(isinstance(v, bool) or not isinstance(v, float) for v in values):
        raise NonNumericSeed("value series needs numeric seed cells")
    return values


def continue_series(values: list, count: int, variant: str, gesture: str) -> list:
    """The next ``count`` values after ``values`` for a value fill."""
    k = len(values)
    if k == 1:
        if gesture == "ctrl":
            (x,) = _numbers(values)
            return [x + i for i in range(1, count + 1)]
        return [values[0]] * count
    if variant == "gnumeric":
        xs = _numbers(values)
        step = xs[-1] - xs[-2]
        return [xs[-1] + step * i for i in range(1, count + 1)]
    if gesture == "ctrl":
        return [values[i % k] for i in range(count)]
    xs = _numbers(values)
    slope, intercept = statistics.linear_regression(range(1, k + 1), xs)
    return [intercept + slope * x for x in range(k + 1, k + count + 1)]


def fill(sheet: Sheet, seed: Rect, target: Rect, mode: str = "values", gesture: str = "plain", variant: str = "excel") -> dict:
    """Auto-fill ``target`` from ``seed`` (values: series heuristics of the
    ``variant`` system; formulas: blockwise geometric clone)."""
    _check_rect(sheet, target)
    lanes, k = _fill_geometry(seed, target)
    delta: dict = {}
    for lane in lanes:
        seeds, rest = lane[:k], lane[k:]
        if mode == "formulas":
            for i, addr in enumerate(rest):
                delta[addr] = _clone(sheet.get(seeds[i % k]), addr, sheet)
            continue
        if mode != "values":
            raise ValueError(f"fill mode must be 'values' or 'formulas', not {mode!r}")
        values = [sheet.read_value(a) for a in seeds]
        try:
            series = continue_series(values, len(rest), variant, gesture)
        except NonNumericSeed:
            raise NonNumericSeed(f"value series seeded at {seeds[0]} needs numeric seed cells") from None
        for addr, v in zip(rest, series):
            delta[addr] = None if v is BLANK else Literal(v)
    return {a: c for a, c in delta.items() if not (c is None and sheet.get(a) is None)}


def delta_for(op: EditOp, sheet: Sheet, fill_variant: str = "excel") -> dict:
    """Dispatch an operation record to its delta builder."""
    if isinstance(op, Move):
        return move_block(sheet, op.src, op.dest)
    if isinstance(op, Copy):
        return copy_block(sheet, op.src, op.dest)
    if isinstance(op, Clear):
        return clear_contents(sheet, op.rect)
    if isinstance(op, Insert):
        return insert_axis(sheet, op.axis, op.at, op.n)
    if isinstance(op, Delete):
        return delete_axis(sheet, op.axis, op.at, op.n)
    if isinstance(op, Fill):
        return fill(sheet, op.seed, op.target, op.mode, op.gesture, fill_variant)
    raise TypeError(f"not a structural edit: {op!r}")
