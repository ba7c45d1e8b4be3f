"""Replay edit scripts under a profile, render traces, diff two profiles."""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .addr import Addr, row_major
from .engine import BLANK_BUT_POISONED, Engine, PolicyProfile, RecalcReport
from .errors import GridlabError
from .grid import REF, Value, format_value, parse_sheet_text, values_equal
from .script import Assert, Dump, Step, parse_script

TRACE_VERSION = "gridlab-trace 1"


@dataclass
class AssertResult:
    text: str
    ok: bool
    actual: str


@dataclass
class StepResult:
    index: int
    text: str
    report: RecalcReport | None = None
    error: str | None = None
    asserts: list = field(default_factory=list)
    dump: list | None = None
    values: dict = field(default_factory=dict)  # snapshot after the step


@dataclass
class Trace:
    profile: PolicyProfile
    sheet_name: str
    sheet_hash: str
    script_name: str
    script_hash: str
    steps: list = field(default_factory=list)
    final: list = field(default_factory=list)  # [(addr, Value, text)]
    final_values: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(1 for s in self.steps for a in s.asserts if not a.ok)

    @property
    def assertions(self) -> int:
        return sum(len(s.asserts) for s in self.steps)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def display(self, value: Value) -> str:
        if self.profile.ref_display == BLANK_BUT_POISONED and value == REF:
            return "poison=#REF!"
        return format_value(value) or "BLANK"

    def cell_line(self, addr: Addr, value: Value, text: str) -> str:
        if self.profile.ref_display == BLANK_BUT_POISONED and value == REF:
            shown = "value= poison=#REF!"
        else:
            shown = f"value={format_value(value)}"
        return f"{addr} {shown} text={_quote(text)}"

    def render(self) -> str:
        out = [
            TRACE_VERSION,
            f"profile: {self.profile.to_text()}",
            f"sheet: {self.sheet_name} sha256={self.sheet_hash}",
            f"script: {self.script_name} sha256={self.script_hash}",
        ]
        for s in self.steps:
            out.append(f"step {s.index}: {s.text}")
            if s.error:
                out.append(f"  error: {s.error}")
            if s.report is not None:
                out.append(" ".join(["  evaluated:", *map(str, s.report.evaluated)]))
                for addr in row_major(s.report.value_changes):
                    old, new = s.report.value_changes[addr]
                    out.append(f"  changed {addr}: {self.display(old)} -> {self.display(new)}")
                out.append(f"  eval_steps: {s.report.eval_steps}")
            for a in s.asserts:
                out.append(f"  assert {'pass' if a.ok else 'FAIL'}: {a.text} (actual {a.actual})")
            if s.dump is not None:
                out.append("  dump:")
                out.extend(f"    {line}" for line in s.dump)
        out.append("final:")
        out.extend(f"  {self.cell_line(*entry)}" for entry in self.final)
        verdict = "pass" if self.ok else "FAIL"
        out.append(f"result: {verdict} ({self.assertions - self.failures}/{self.assertions} assertions)")
        return "\n".join(out) + "\n"


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _snapshot(engine: Engine) -> list:
    return [(addr, engine.value(addr), engine.sheet.text(addr)) for addr in engine.sheet]


def _check(engine: Engine, a: Assert) -> tuple[bool, str]:
    if a.kind == "text":
        actual = engine.sheet.text(a.addr)
        return actual == a.expected, _quote(actual)
    actual = engine.value(a.addr)
    return values_equal(actual, a.expected), format_value(actual) or "BLANK"


def run_script(
    sheet_text: str,
    steps: list[Step],
    profile: PolicyProfile,
    sheet_name: str = "<sheet>",
    script_text: str = "",
    script_name: str = "<script>",
) -> Trace:
    """Load the sheet, execute ``steps`` in order and collect a trace.

    Operation errors (a strict-policy rejection, an overlapping move...)
    are recorded on their step and execution continues.
    """
    engine = Engine.load(parse_sheet_text(sheet_text, sheet_name), profile)
    trace = Trace(profile, sheet_name, _sha(sheet_text), script_name, _sha(script_text))
    for index, step in enumerate(steps, 1):
        result = StepResult(index, step.text)
        cmd = step.command
        if isinstance(cmd, Assert):
            ok, actual = _check(engine, cmd)
            result.asserts.append(AssertResult(step.text[len("ASSERT "):], ok, actual))
        elif isinstance(cmd, Dump):
            result.dump = [trace.cell_line(*entry) for entry in _snapshot(engine)]
        else:
            try:
                result.report = engine.run(cmd)
            except (GridlabError, ValueError) as exc:
                result.error = f"{type(exc).__name__}: {exc}"
        result.values = {addr: engine.value(addr) for addr in engine.sheet}
        trace.steps.append(result)
    trace.final = _snapshot(engine)
    trace.final_values = {addr: (format_value(v), text) for addr, v, text in trace.final}
    return trace


def run(sheet_path: str, script_path: str, profile: PolicyProfile) -> Trace:
    sheet_text = _read(sheet_path)
    script_text = _read(script_path) if script_path else ""
    steps = parse_script(script_text, script_path or "<script>")
    return run_script(sheet_text, steps, profile, _name(sheet_path), script_text, _name(script_path))


def _read(path: str | None) -> str:
    if not path:
        return ""
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _name(path: str | None) -> str:
    if not path:
        return "<none>"
    return path.replace("\\", "/").rsplit("/", 1)[-1]


# Diff ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Divergence:
    step: int | None  # None for the final snapshot
    addr: Addr
    a: str
    b: str
    first: bool = False

    def render(self) -> str:
        where = "final" if self.step is None else f"step {self.step}"
        flag = "  (first)" if self.first else ""
        return f"{where} {self.addr}: {self.a} | {self.b}{flag}"


def divergences(ta: Trace, tb: Trace) -> list[Divergence]:
    """Per-step and final-snapshot disagreements between two traces of the
    same script."""
    found: list = []
    before_a: dict = {}
    before_b: dict = {}
    for sa, sb in zip(ta.steps, tb.steps):
        touched = _changed(before_a, sa.values) | _changed(before_b, sb.values)
        for addr in row_major(touched):
            va, vb = _shown(sa.values, addr), _shown(sb.values, addr)
            if va != vb:
                found.append(Divergence(sa.index, addr, va, vb))
        before_a, before_b = sa.values, sb.values
    for addr in row_major(set(ta.final_values) | set(tb.final_values)):
        va = ta.final_values.get(addr, ("", ""))
        vb = tb.final_values.get(addr, ("", ""))
        if va != vb:
            a = va[0] if va[0] != vb[0] else f"{va[0]} {_quote(va[1])}"
            b = vb[0] if va[0] != vb[0] else f"{vb[0]} {_quote(vb[1])}"
            found.append(Divergence(None, addr, a, b))
    if found:
        found[0] = Divergence(found[0].step, found[0].addr, found[0].a, found[0].b, True)
    return found


def _changed(before: dict, after: dict) -> set:
    return {a for a in before.keys() | after.keys() if _shown(before, a) != _shown(after, a)}


def _shown(values: dict, addr: Addr) -> str:
    return format_value(values[addr]) if addr in values else ""


def diff(sheet_path: str, script_path: str, profile_a: PolicyProfile, profile_b: PolicyProfile):
    """Run both profiles on independent engines; return (traces, divergences)."""
    with ThreadPoolExecutor(max_workers=2) as pool:
        fa = pool.submit(run, sheet_path, script_path, profile_a)
        fb = pool.submit(run, sheet_path, script_path, profile_b)
        ta, tb = fa.result(), fb.result()
    return (ta, tb), divergences(ta, tb)


def render_diff(ta: Trace, tb: Trace, found: list[Divergence]) -> str:
    out = [
        f"a: {ta.profile.to_text()}",
        f"b: {tb.profile.to_text()}",
    ]
    out.extend(d.render() for d in found)
    out.append(f"divergences: {len(found)}")
    return "\n".join(out) + "\n"
