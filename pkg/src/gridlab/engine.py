"""Cell evaluation and change propagation under a policy profile.

Local evaluation is recursive graph reduction over a cell's precedents;
global evaluation marks the reverse-transitive closure of an edit dirty
and re-evaluates exactly that set in dependency order. Cycles are handed
to the profile's circular policy, one strongly connected group at a time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Iterable

from . import edits
from .addr import Addr, Rect, row_major
from .depgraph import DepGraph
from .errors import CircularReferenceError, InputError
from .formula import (
    AGGREGATES,
    BinOp,
    BoolLit,
    Call,
    DeadRef,
    Expr,
    If,
    Neg,
    NumberLit,
    RangeRef,
    SingleRef,
    TextLit,
    range_extent,
)
from .grid import (
    BLANK,
    CIRC,
    DIV0,
    REF,
    VALUE,
    CellError,
    Content,
    Formula,
    Sheet,
    Value,
    binary_op,
    content_from_text,
    to_number,
    truth,
)

log = logging.getLogger(__name__)

STRICT = "strict"
EXCEL_ZERO = "excel-zero"
EXCEL_ITERATE = "excel-iterate"
GNUMERIC_TWO_STAGE = "gnumeric-two-stage"
CIRCULAR_POLICIES = (STRICT, EXCEL_ZERO, EXCEL_ITERATE, GNUMERIC_TWO_STAGE)

EXCEL_FILL = "excel"
GNUMERIC_FILL = "gnumeric"
SHOW_REF_ERROR = "show"
BLANK_BUT_POISONED = "blank"


@dataclass(frozen=True)
class PolicyProfile:
    circular: str = STRICT
    fill: str = EXCEL_FILL
    ref_display: str = SHOW_REF_ERROR
    iterate_max: int = 100
    clock: float = 0.0

    def __post_init__(self):
        if self.circular not in CIRCULAR_POLICIES:
            raise ValueError(f"circular must be one of {', '.join(CIRCULAR_POLICIES)}")
        if self.fill not in (EXCEL_FILL, GNUMERIC_FILL):
            raise ValueError("fill must be 'excel' or 'gnumeric'")
        if self.ref_display not in (SHOW_REF_ERROR, BLANK_BUT_POISONED):
            raise ValueError("ref_display must be 'show' or 'blank'")
        if self.iterate_max < 1:
            raise ValueError("iterate_max must be >= 1")

    @classmethod
    def parse(cls, text: str, path: str = "<profile>") -> "PolicyProfile":
        """Read flat ``key=value`` lines (``#`` comments allowed)."""
        kwargs: dict = {}
        names = {f.name for f in fields(cls)}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in names:
                raise InputError(f"unknown profile setting {line!r}", path, lineno, 1)
            try:
                kwargs[key] = int(value) if key == "iterate_max" else float(value) if key == "clock" else value
            except ValueError as exc:
                raise InputError(str(exc), path, lineno, len(key) + 2) from exc
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise InputError(str(exc), path) from exc

    @classmethod
    def load(cls, spec: str) -> "PolicyProfile":
        """Load a profile file, or a shipped profile by name (``excel``, ``gnumeric``...)."""
        p = Path(spec)
        if p.is_file():
            return cls.parse(p.read_text(encoding="utf-8"), str(p))
        shipped = resources.files("gridlab").joinpath("profiles", f"{spec}.profile")
        if shipped.is_file():
            return cls.parse(shipped.read_text(encoding="utf-8"), spec)
        raise InputError(f"no such profile file or shipped profile: {spec}", spec)

    def to_text(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))


def shipped_profiles() -> list[str]:
    root = resources.files("gridlab").joinpath("profiles")
    return sorted(p.name[: -len(".profile")] for p in root.iterdir() if p.name.endswith(".profile"))


@dataclass
class RecalcReport:
    evaluated: list = field(default_factory=list)
    value_changes: dict = field(default_factory=dict)
    eval_steps: int = 0


def same_value(a: Value, b: Value) -> bool:
    return type(a) is type(b) and a == b


class _Pass:
    """One evaluation pass. With ``reduce_all`` every formula precedent is
    reduced recursively (memoized); otherwise precedents are read from their
    cached values, which propagation has already brought up to date."""

    def __init__(self, engine: "Engine", reduce_all: bool = False, visited: list | None = None):
        self.engine = engine
        self.sheet = engine.sheet
        self.reduce_all = reduce_all
        self.visited = visited
        self.memo: dict = {}
        self.overrides: dict = {}
        self.active: set = set()
        self.steps = 0

    # cell access -------------------------------------------------------------

    def cell(self, addr: Addr) -> Value:
        if addr in self.overrides:
            return self.overrides[addr]
        if addr in self.memo:
            return self.memo[addr]
        if self.visited is not None and addr not in self.visited:
            self.visited.append(addr)
        content = self.sheet.get(addr)
        if not isinstance(content, Formula) or not self.reduce_all or content.frozen or addr in self.active:
            return self.sheet.read_value(addr)
        comp = self.engine.graph.components().get(addr)
        if comp is not None:
            self.memo.update(self.resolve_cycle(comp))
            return self.memo[addr]
        self.memo[addr] = self.formula(addr)
        return self.memo[addr]

    def formula(self, addr: Addr) -> Value:
        content = self.sheet.get(addr)
        self.active.add(addr)
        try:
            return self.eval(content.expr, addr)
        finally:
            self.active.discard(addr)

    # circular policies ---------------------------------------------------------

    def resolve_cycle(self, comp: tuple) -> dict:
        """Values for the cycle group ``comp`` under the profile's circular policy."""
        policy = self.engine.profile.circular
        if policy == STRICT:
            return {c: CIRC for c in comp}
        if policy == EXCEL_ZERO:
            return {c: 0.0 for c in comp}
        saved = self.overrides
        try:
            if policy == EXCEL_ITERATE:
                values = {c: self.sheet.read_value(c) for c in comp}
                for _ in range(self.engine.profile.iterate_max):
                    self.overrides = {**saved, **values}
                    values = {c: self.formula(c) for c in comp}
                return values
            # two-stage: stage 1 reads the cell's own prior value, stage 2
            # substitutes the stage-1 result for the self-reference
            prior = {c: self.sheet.read_value(c) for c in comp}
            out = {}
            for c in comp:
                self.overrides = {**saved, **prior}
                stage1 = self.formula(c)
                self.overrides[c] = stage1
                out[c] = self.formula(c)
            return out
        finally:
            self.overrides = saved

    # reduction -------------------------------------------------------------------

    def eval(self, node: Expr, host: Addr) -> Value:
        self.steps += 1
        if isinstance(node, NumberLit):
            return node.value
        if isinstance(node, TextLit):
            return node.value
        if isinstance(node, BoolLit):
            return node.value
        if isinstance(node, SingleRef):
            return self.cell(node.ref.resolve(host))
        if isinstance(node, BinOp):
            left = self.eval(node.left, host)
            right = self.eval(node.right, host)
            return binary_op(node.op, left, right)
        if isinstance(node, Neg):
            x = to_number(self.eval(node.operand, host))
            return x if isinstance(x, CellError) else -x
        if isinstance(node, If):
            cond = truth(self.eval(node.cond, host))
            if isinstance(cond, CellError):
                return cond
            return self.eval(node.then if cond else node.orelse, host)
        if isinstance(node, Call):
            if node.name == "NOW":
                return float(self.engine.profile.clock)
            return self.aggregate(node, host)
        if isinstance(node, DeadRef):
            return REF
        if isinstance(node, RangeRef):
            return VALUE
        raise TypeError(f"cannot evaluate {node!r}")

    def range_values(self, rect: Rect) -> list:
        """Non-blank member values in row-major order (blanks read as 0)."""
        if rect.size <= len(self.sheet):
            cells = rect.cells()
        else:
            cells = row_major(a for a in self.sheet.cells if rect.contains(a))
        return [self.cell(a) for a in cells]

    def aggregate(self, node: Call, host: Addr) -> Value:
        total = 0.0
        count = 0
        for arg in node.args:
            if isinstance(arg, RangeRef):
                self.steps += 1
                rect = range_extent(arg, host)
                values = self.range_values(rect)
                count += rect.size
            elif arg == DeadRef(True):
                self.steps += 1
                values = []
            else:
                values = [self.eval(arg, host)]
                count += 1
            for v in values:
                x = to_number(v)
                if isinstance(x, CellError):
                    return x
                total += x
        if node.name == "SUM":
            return total
        assert node.name in AGGREGATES
        return DIV0 if count == 0 else total / count


class Engine:
    """A sheet, its dependency graph and a profile, evaluated together."""

    def __init__(self, sheet: Sheet | None = None, profile: PolicyProfile | None = None):
        self.sheet = sheet if sheet is not None else Sheet()
        self.profile = profile or PolicyProfile()
        self.graph = DepGraph.build(self.sheet)

    @classmethod
    def load(cls, entries: Iterable[tuple[Addr, str]], profile: PolicyProfile | None = None) -> "Engine":
        """Build from ``(addr, raw)`` pairs and evaluate everything once.

        Cycles already present in the input are evaluated under the policy
        (strict gives #CIRC!) rather than rejected.
        """
        sheet = Sheet()
        for addr, raw in entries:
            sheet.set_content(addr, raw)
        engine = cls(sheet, profile)
        engine.full_recalc()
        return engine

    def copy(self) -> "Engine":
        return Engine(self.sheet.copy(), self.profile)

    def value(self, addr: Addr) -> Value:
        return self.sheet.read_value(addr)

    def evaluate_cell(self, addr: Addr, visited: list | None = None) -> Value:
        """Reduce ``addr``'s formula recursively without storing anything.

        ``visited`` (if given) receives each cell entered, in visiting order.
        """
        p = _Pass(self, reduce_all=True, visited=visited)
        value = p.cell(addr)
        self.last_steps = p.steps
        return value

    def edit(self, addr: Addr, raw: str) -> RecalcReport:
        """Set one cell's raw content and propagate (edit-and-propagate)."""
        self.sheet.check(addr)
        return self.apply({addr: content_from_text(raw, addr)})

    def apply(self, delta: dict) -> RecalcReport:
        """Install new contents (``None`` clears) atomically and propagate."""
        for addr in delta:
            self.sheet.check(addr)
        old = {a: self.sheet.get(a) for a in delta}
        shown = {a: self.sheet.read_value(a) for a in delta}
        self._install(delta)
        if self.profile.circular == STRICT:
            sccs = self.graph.components()
            closing = row_major(a for a in delta if a in sccs)
            if closing:
                path = self.graph.find_cycle(closing[0])
                self._install(old)
                raise CircularReferenceError(path)
        return self._recalc(set(delta), shown)

    def run(self, op) -> RecalcReport:
        """Execute one edit operation record (see :mod:`gridlab.edits`)."""
        if isinstance(op, edits.Set):
            return self.edit(op.addr, op.raw)
        return self.apply(edits.delta_for(op, self.sheet, self.profile.fill))

    def _install(self, delta: dict) -> None:
        for addr, content in delta.items():
            self.sheet.put(addr, content)
        for addr in delta:
            self.graph.rebuild_edges(self.sheet, addr)

    def full_recalc(self) -> RecalcReport:
        """Evaluate every (non-frozen) formula cell once in dependency order."""
        return self._recalc(set(self.sheet.formula_cells()))

    # propagation -------------------------------------------------------------------

    def _thaw(self) -> set:
        """Unfreeze zero-terminal cells whose cycle no longer exists."""
        frozen = {a for a, c in self.sheet.cells.items() if isinstance(c, Formula) and c.frozen}
        if not frozen:
            return set()
        roots = frozen & self.graph.cyclic_cells()
        keep = roots | self.graph.reachable(roots)
        thawed = frozen - keep
        for addr in thawed:
            self.sheet.get(addr).frozen = False
        return thawed

    def _recalc(self, seeds: set, shown: dict | None = None) -> RecalcReport:
        """Re-evaluate the dirty closure of ``seeds``. ``shown`` holds the
        values edited cells displayed before their content was replaced."""
        sheet, graph, policy = self.sheet, self.graph, self.profile.circular
        if policy == EXCEL_ZERO:
            seeds = seeds | self._thaw()
        dirty = graph.reachable(seeds) | {s for s in seeds if isinstance(sheet.get(s), Formula)}
        if policy == EXCEL_ITERATE:
            cyclic = graph.cyclic_cells()
            dirty |= cyclic | graph.reachable(cyclic)
        dirty = {a for a in dirty if isinstance(sheet.get(a), Formula) and not sheet.get(a).frozen}
        ordering = graph.order(dirty)
        sccs = graph.components()
        p = _Pass(self)
        report = RecalcReport()
        new_terminals = set()
        for comp in ordering.components:
            if comp[0] in sccs:
                values = p.resolve_cycle(comp)
                if policy == EXCEL_ZERO:
                    new_terminals.update(comp)
            else:
                values = {comp[0]: p.formula(comp[0])}
            for addr in comp:
                self._commit(addr, values[addr], report, (shown or {}).get(addr))
        if policy == EXCEL_ZERO:
            # cells downstream of a terminal get one evaluation, then freeze,
            # including dependents written after the cycle was confirmed
            roots = new_terminals | {a for a in sccs if sheet.get(a).frozen}
            if new_terminals:
                log.debug("zero-terminal freeze of %s", ", ".join(map(str, row_major(new_terminals))))
            for addr in new_terminals | (graph.reachable(roots) & dirty):
                sheet.get(addr).frozen = True
        report.eval_steps = p.steps
        return report

    def _commit(self, addr: Addr, value: Value, report: RecalcReport, shown: Value | None = None) -> None:
        content = self.sheet.get(addr)
        content.prior = content.cached
        content.cached = value
        old = content.prior if shown is None else shown
        report.evaluated.append(addr)
        if not same_value(old, value):
            report.value_changes[addr] = (old, value)
