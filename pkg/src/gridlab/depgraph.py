"""Forward and reverse dependencies with separate single and range indexes.

Single references live in a hash index keyed by the source cell. Range
references are kept as one edge per rectangle in a plain rectangle table;
a dependents lookup scans it linearly, O(number of distinct rectangles).
That is adequate at desk scale and keeps range edges unexpanded.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .addr import Addr, Rect, row_major
from .formula import Reference, references
from .grid import Formula, Sheet


class EdgeChange(NamedTuple):
    added: list  # [(source, dependent)], source is an Addr or a Rect
    removed: list


class Ordering(NamedTuple):
    """Cells in dependency order plus the subset lying on a cycle."""

    cells: list
    cyclic: frozenset
    components: list  # strongly connected components, same order as ``cells``


@dataclass
class DepGraph:
    single_index: dict = field(default_factory=lambda: defaultdict(set))
    range_index: dict = field(default_factory=lambda: defaultdict(set))
    forward: dict = field(default_factory=dict)
    _sccs: dict | None = field(default=None, repr=False)

    @classmethod
    def build(cls, sheet: Sheet) -> "DepGraph":
        graph = cls()
        for addr in sheet.formula_cells():
            graph.rebuild_edges(sheet, addr)
        return graph

    def rebuild_edges(self, sheet: Sheet, addr: Addr) -> EdgeChange:
        """Replace ``addr``'s outgoing reads with those of its current content."""
        old = self.forward.pop(addr, [])
        content = sheet.get(addr)
        new = references(content.expr, addr) if isinstance(content, Formula) else []
        for ref in old:
            self._unlink(ref, addr)
        for ref in new:
            self._link(ref, addr)
        if new:
            self.forward[addr] = new
        self._sccs = None
        old_keys = {_edge_key(r, addr) for r in old}
        new_keys = {_edge_key(r, addr) for r in new}
        return EdgeChange(
            sorted(new_keys - old_keys, key=_edge_sort),
            sorted(old_keys - new_keys, key=_edge_sort),
        )

    def _link(self, ref: Reference, dependent: Addr) -> None:
        if ref.kind == "single":
            self.single_index[ref.extent.first].add(dependent)
        else:
            self.range_index[ref.extent].add(dependent)

    def _unlink(self, ref: Reference, dependent: Addr) -> None:
        index, key = (
            (self.single_index, ref.extent.first) if ref.kind == "single" else (self.range_index, ref.extent)
        )
        deps = index.get(key)
        if deps is None:
            return
        deps.discard(dependent)
        if not deps:
            del index[key]

    def dependents_of(self, addr: Addr) -> set:
        out = set(self.single_index.get(addr, ()))
        for rect, deps in self.range_index.items():
            if rect.contains(addr):
                out |= deps
        return out

    def precedents_of(self, addr: Addr) -> list:
        return list(self.forward.get(addr, ()))

    def edges(self) -> set:
        """Stored edges as ``(source, dependent)``; range sources are Rects."""
        return {_edge_key(r, dep) for dep, refs in self.forward.items() for r in refs}

    def expanded_edges(self) -> set:
        """Edges with each range expanded to its member cells."""
        out = set()
        for dep, refs in self.forward.items():
            for r in refs:
                for cell in r.extent.cells():
                    out.add((cell, dep))
        return out

    # Cycles & ordering -------------------------------------------------------

    def _successors(self, addr: Addr) -> list:
        return row_major(self.dependents_of(addr))

    def components(self) -> dict:
        """Map every formula cell on a cycle to its (row-major) SCC tuple."""
        if self._sccs is None:
            self._sccs = {}
            for comp in _tarjan(list(self.forward), self._successors):
                if len(comp) > 1 or comp[0] in self.dependents_of(comp[0]):
                    members = tuple(row_major(comp))
                    for cell in members:
                        self._sccs[cell] = members
        return self._sccs

    def cyclic_cells(self) -> frozenset:
        return frozenset(self.components())

    def find_cycle(self, addr: Addr) -> list | None:
        """A path ``addr -> ... -> addr`` along dependency edges, if one exists."""
        if addr not in self.components():
            return None
        parent = {addr: None}
        stack = [addr]
        comp = set(self.components()[addr])
        while stack:
            cur = stack.pop()
            for nxt in self._successors(cur):
                if nxt == addr:
                    path = [addr]
                    while cur is not None:
                        path.append(cur)
                        cur = parent[cur]
                    return path[::-1]
                if nxt in comp and nxt not in parent:
                    parent[nxt] = cur
                    stack.append(nxt)
        return None  # pragma: no cover - membership in an SCC guarantees a path

    def reachable(self, seeds: Iterable[Addr]) -> set:
        """Cells reachable from ``seeds`` over one or more dependency edges."""
        seen: set = set()
        stack = list(seeds)
        while stack:
            for nxt in self.dependents_of(stack.pop()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    def transitive_dependents(self, seeds: Iterable[Addr]) -> Ordering:
        """Reverse-DDG reachability from ``seeds`` in dependency order."""
        return self.order(self.reachable(seeds))

    def order(self, cells: Iterable[Addr]) -> Ordering:
        """Topological order of ``cells`` (ties row-major); SCCs kept together."""
        cells = set(cells)
        sccs = self.components()
        comp_of = {}
        for cell in cells:
            comp_of[cell] = tuple(c for c in sccs.get(cell, (cell,)) if c in cells)
        comps = set(comp_of.values())
        indegree = {comp: 0 for comp in comps}
        succ = defaultdict(set)
        for comp in comps:
            for cell in comp:
                for nxt in self.dependents_of(cell):
                    if nxt in cells and comp_of[nxt] != comp and comp_of[nxt] not in succ[comp]:
                        succ[comp].add(comp_of[nxt])
                        indegree[comp_of[nxt]] += 1
        heap = [(comp[0].sort_key(), comp) for comp in comps if indegree[comp] == 0]
        heapq.heapify(heap)
        ordered_comps = []
        while heap:
            _, comp = heapq.heappop(heap)
            ordered_comps.append(comp)
            for nxt in succ[comp]:
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    heapq.heappush(heap, (nxt[0].sort_key(), nxt))
        cyclic = frozenset(c for c in cells if c in sccs)
        return Ordering([c for comp in ordered_comps for c in comp], cyclic, ordered_comps)


def _edge_key(ref: Reference, dependent: Addr):
    return (ref.extent.first if ref.kind == "single" else ref.extent, dependent)


def _edge_sort(edge):
    src, dep = edge
    key = (src.top, src.left, src.bottom, src.right) if isinstance(src, Rect) else (src.row, src.col, src.row, src.col)
    return key + dep.sort_key()


def _tarjan(nodes: list, successors) -> list:
    """Iterative Tarjan SCC over ``nodes`` and everything reachable from them."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list = []
    counter = 0
    for root in row_major(nodes):
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(successors(nxt))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    cell = stack.pop()
                    on_stack.discard(cell)
                    comp.append(cell)
                    if cell == node:
                        break
                out.append(comp)
    return out
