"""Projection-screen measures over the dependency structure.

Each cell displays its result on a screen; a formula reads the screens
in front of it. A cell's *depth* is how many formula layers stand between
it and the front row of constants. Aggregation ranges act as spotlights
over rectangles. The deviation score is the share of dependency edges
that run against reading order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .addr import Addr, Rect, row_major
from .depgraph import DepGraph
from .grid import Formula, Sheet


@dataclass
class ScreenReport:
    depth: dict = field(default_factory=dict)
    cyclic: set = field(default_factory=set)
    spotlights: dict = field(default_factory=dict)
    deviation_score: float = 0.0


def precedents(sheet: Sheet, graph: DepGraph, addr: Addr) -> set:
    """Cells ``addr`` reads, with ranges expanded to their occupied members."""
    out = set()
    for ref in graph.precedents_of(addr):
        if ref.kind == "single":
            out.add(ref.extent.first)
        elif ref.extent.size <= len(sheet):
            out.update(a for a in ref.extent.cells() if sheet.get(a) is not None)
        else:
            out.update(a for a in sheet.cells if ref.extent.contains(a))
    return out


def expanded_edges(sheet: Sheet, graph: DepGraph) -> set:
    """``(source, dependent)`` pairs of the expanded DDG."""
    return {(src, dep) for dep in graph.forward for src in precedents(sheet, graph, dep)}


def screen_depth(sheet: Sheet, graph: DepGraph) -> tuple[dict, set]:
    """Longest-path layering. Cells on a cycle, or behind one, get no depth
    and are returned in the second element instead."""
    depth = {addr: 0 for addr in sheet.cells if not isinstance(sheet.get(addr), Formula)}
    sccs = graph.components()
    undefined: set = set()
    for addr in graph.order(sheet.formula_cells()).cells:
        pre = precedents(sheet, graph, addr)
        if addr in sccs or pre & undefined:
            undefined.add(addr)
            continue
        floor = 0 if graph.precedents_of(addr) else -1
        depth[addr] = 1 + max((depth.get(p, 0) for p in pre), default=floor)
    return depth, undefined


def deviation_score(sheet: Sheet, graph: DepGraph, order: str = "row") -> float:
    """Fraction of expanded edges whose dependent comes before its source
    in reading order (``"row"``-major by default, or ``"col"``-major)."""
    key = Addr.sort_key if order == "row" else (lambda a: (a.col, a.row))
    edges = expanded_edges(sheet, graph)
    if not edges:
        return 0.0
    backward = sum(1 for src, dep in edges if key(dep) < key(src))
    return backward / len(edges)


def spotlight_map(sheet: Sheet, graph: DepGraph) -> dict:
    """Aggregation cell -> list of the rectangles its ranges illuminate."""
    out = {}
    for addr in row_major(graph.forward):
        rects = [ref.extent for ref in graph.precedents_of(addr) if ref.kind == "range"]
        if rects:
            out[addr] = rects
    return out


def analyze(sheet: Sheet, graph: DepGraph | None = None, order: str = "row") -> ScreenReport:
    graph = graph or DepGraph.build(sheet)
    depth, cyclic = screen_depth(sheet, graph)
    return ScreenReport(depth, cyclic, spotlight_map(sheet, graph), deviation_score(sheet, graph, order))


def range_label(rect: Rect) -> str:
    return f"{rect.first}:{rect.last}"


def render(report: ScreenReport) -> str:
    lines = ["depth:"]
    for addr in row_major(report.depth):
        lines.append(f"  {addr} {report.depth[addr]}")
    lines.append("cyclic: " + " ".join(str(a) for a in row_major(report.cyclic)))
    lines.append("spotlights:")
    for addr, rects in report.spotlights.items():
        lines.append(f"  {addr} " + " ".join(range_label(r) for r in rects))
    lines.append(f"deviation_score: {round(report.deviation_score, 6)!r}")
    return "\n".join(lines) + "\n"


def to_dot(sheet: Sheet, graph: DepGraph, depth: dict | None = None) -> str:
    """DOT digraph of the expanded DDG, optionally ranked by screen depth."""
    edges = sorted(expanded_edges(sheet, graph), key=lambda e: (e[0].sort_key(), e[1].sort_key()))
    nodes = set(sheet.cells) | {s for s, _ in edges}
    lines = ["digraph ddg {", "  rankdir=TB;"]
    for node in row_major(nodes):
        lines.append(f'  "{node}";')
    if depth:
        layers: dict = {}
        for addr, d in depth.items():
            layers.setdefault(d, []).append(addr)
        for d in sorted(layers):
            members = " ".join(f'"{a}";' for a in row_major(layers[d]))
            lines.append(f"  {{ rank=same; {members} }}")
    for src, dep in edges:
        lines.append(f'  "{src}" -> "{dep}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
