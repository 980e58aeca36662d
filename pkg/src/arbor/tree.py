"""Trees with oriented edges, truncated by stub edges.

Every geometric edge {u, v} appears as two oriented edges e, bar(e).  A stub
edge leaves the vertex set: its ``omega`` is ``None`` and it has no reverse.
Stubs stand for pruned half-trees, i.e. the ends that a finite truncation
cannot hold.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping

from .report import Report


class TreeError(ValueError):
    pass


class Tree:
    """Finite tree with oriented edges and stub edges.

    ``alpha`` and ``omega`` map edge ids to vertex ids.  ``bar`` maps each
    non-stub edge to its reverse.  Instances are treated as immutable.
    """

    def __init__(
        self,
        vertices: Iterable[int],
        alpha: Mapping[int, int],
        omega: Mapping[int, int | None],
        bar: Mapping[int, int],
        stubs: Iterable[int] = (),
    ):
        self.vertices: tuple[int, ...] = tuple(sorted(set(vertices)))
        self.alpha: dict[int, int] = dict(alpha)
        self.omega: dict[int, int | None] = dict(omega)
        self.bar: dict[int, int] = dict(bar)
        self.stubs: frozenset[int] = frozenset(stubs)
        self.edges: tuple[int, ...] = tuple(sorted(self.alpha))
        self._vset = frozenset(self.vertices)
        self._out: dict[int, list[int]] = {v: [] for v in self.vertices}
        for e in self.edges:
            if self.alpha[e] not in self._out:
                raise TreeError(f"edge {e} starts at unknown vertex {self.alpha[e]}")
            self._out[self.alpha[e]].append(e)
        self._check()

    # construction

    @classmethod
    def build(cls, vertices, links=(), stubs_at=()):
        """Build from undirected links ``(u, v)`` and stub anchors.

        Link ``i`` gets edge ids ``2i`` (u to v) and ``2i + 1`` (v to u);
        stubs are numbered after the links in the order given.
        """
        alpha, omega, bar = {}, {}, {}
        for i, (u, v) in enumerate(links):
            a, b = 2 * i, 2 * i + 1
            alpha[a], omega[a], bar[a] = u, v, b
            alpha[b], omega[b], bar[b] = v, u, a
        stub_ids = []
        base = 2 * len(links)
        for j, u in enumerate(stubs_at):
            e = base + j
            alpha[e], omega[e] = u, None
            stub_ids.append(e)
        return cls(vertices, alpha, omega, bar, stub_ids)

    def _check(self):
        for e in self.edges:
            if e in self.stubs:
                if self.omega.get(e) is not None:
                    raise TreeError(f"stub {e} must have no omega")
                if e in self.bar:
                    raise TreeError(f"stub {e} must have no reverse")
                continue
            if e not in self.bar:
                raise TreeError(f"edge {e} has no reverse")
            b = self.bar[e]
            if b == e or self.bar.get(b) != e:
                raise TreeError(f"bar is not a fixed-point-free involution at {e}")
            if self.alpha[b] != self.omega[e] or self.omega[e] not in self._vset:
                raise TreeError(f"edge {e} and its reverse disagree on endpoints")
        n_geo = sum(1 for e in self.edges if e not in self.stubs) // 2
        if self.vertices and n_geo != len(self.vertices) - 1:
            raise TreeError("edge count does not match a tree")
        if self.vertices and len(self._flood(self.vertices[0], None)) != len(self.vertices):
            raise TreeError("tree is not connected")

    # basic queries

    def has_vertex(self, v) -> bool:
        return v in self._vset

    def out_edges(self, v: int) -> list[int]:
        """N_v: oriented edges starting at ``v`` (stubs included), sorted."""
        if v not in self._vset:
            raise TreeError(f"unknown vertex {v}")
        return self._out[v]

    def neighbors(self, v: int) -> list[int]:
        return [self.omega[e] for e in self._out[v] if e not in self.stubs]

    def is_stub(self, e: int) -> bool:
        return e in self.stubs

    def internal_edges(self) -> list[int]:
        return [e for e in self.edges if e not in self.stubs]

    def geometric_edges(self) -> list[int]:
        """One orientation per geometric edge: the one with the smaller id."""
        return [e for e in self.edges if e not in self.stubs and e < self.bar[e]]

    def edge_between(self, u: int, v: int) -> int:
        for e in self._out[u]:
            if self.omega[e] == v:
                return e
        raise TreeError(f"{u} and {v} are not adjacent")

    def _flood(self, start, banned_edge):
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for e in self._out[u]:
                if e in self.stubs or e == banned_edge or self.bar.get(e) == banned_edge:
                    continue
                w = self.omega[e]
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def bfs(self, root: int | None = None):
        """Return (order, parent_edge, depth) of a breadth-first search."""
        if root is None:
            root = self.vertices[0]
        order, parent, depth = [root], {root: None}, {root: 0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for e in self._out[u]:
                if e in self.stubs:
                    continue
                w = self.omega[e]
                if w not in depth:
                    depth[w] = depth[u] + 1
                    parent[w] = e
                    order.append(w)
                    queue.append(w)
        return order, parent, depth

    # operations

    def path(self, t: int, s: int) -> list[int]:
        """Edges of the unique embedded path from ``t`` to ``s``."""
        for v in (t, s):
            if v not in self._vset:
                raise TreeError(f"unknown vertex {v}")
        if t == s:
            return []
        parent = {t: None}
        queue = deque([t])
        while queue:
            u = queue.popleft()
            if u == s:
                break
            for e in self._out[u]:
                if e in self.stubs:
                    continue
                w = self.omega[e]
                if w not in parent:
                    parent[w] = e
                    queue.append(w)
        edges = []
        v = s
        while parent[v] is not None:
            e = parent[v]
            edges.append(e)
            v = self.alpha[e]
        return edges[::-1]

    def n_set(self, subtree: Iterable[int]) -> list[int]:
        """Edges leaving the vertex set (stubs included), sorted."""
        s = frozenset(subtree)
        out = []
        for v in sorted(s):
            for e in self.out_edges(v):
                if e in self.stubs or self.omega[e] not in s:
                    out.append(e)
        return sorted(out)

    def half_tree(self, e: int) -> frozenset[int]:
        """Vertices of the component containing omega(e) once e is removed."""
        if e in self.stubs:
            raise TreeError(f"half_tree of stub edge {e} lies outside the truncation")
        if e not in self.alpha:
            raise TreeError(f"unknown edge {e}")
        return frozenset(self._flood(self.omega[e], e))

    def is_subtree(self, vs: Iterable[int]) -> bool:
        s = frozenset(vs)
        if not s or not s <= self._vset:
            return False
        start = min(s)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self.neighbors(u):
                if w in s and w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(s)

    def hull(self, vs: Iterable[int]) -> frozenset[int]:
        """Smallest subtree containing the given vertices."""
        vs = sorted(set(vs))
        out = {vs[0]}
        for v in vs[1:]:
            for e in self.path(vs[0], v):
                out.add(self.omega[e])
        return frozenset(out)

    def induced(self, subtree: Iterable[int]) -> "Tree":
        """Restriction to a subtree; edges leaving it become stubs (ids kept)."""
        s = frozenset(subtree)
        if not self.is_subtree(s):
            raise TreeError("vertex set does not induce a subtree")
        alpha, omega, bar, stubs = {}, {}, {}, []
        for v in s:
            for e in self._out[v]:
                alpha[e] = v
                if e in self.stubs or self.omega[e] not in s:
                    omega[e] = None
                    stubs.append(e)
                else:
                    omega[e] = self.omega[e]
                    bar[e] = self.bar[e]
        return Tree(s, alpha, omega, bar, stubs)

    def validate_partition(self, cells) -> Report:
        rep = Report("partition")
        seen: dict[int, int] = {}
        for i, cell in enumerate(cells):
            cell = frozenset(cell)
            for v in sorted(cell):
                if v not in self._vset:
                    rep.add("unknown-vertex", f"vertex {v} in cell {i}", v)
                elif v in seen:
                    rep.add("overlap", f"vertex {v} in cells {seen[v]} and {i}", v)
                else:
                    seen[v] = i
            if cell and cell <= self._vset and not self.is_subtree(cell):
                rep.add("disconnected-cell", f"cell {i} is not a subtree", i)
            if not cell:
                rep.add("empty-cell", f"cell {i} is empty", i)
        missing = sorted(self._vset - seen.keys())
        if missing:
            rep.add("non-cover", f"vertices {missing} in no cell", missing)
        return rep

    # io

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [
                {
                    "id": e,
                    "alpha": self.alpha[e],
                    "omega": self.omega[e],
                    "bar": self.bar.get(e),
                }
                for e in self.edges
            ],
            "stubs": sorted(self.stubs),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Tree":
        alpha, omega, bar = {}, {}, {}
        for rec in data["edges"]:
            e = int(rec["id"])
            alpha[e] = int(rec["alpha"])
            omega[e] = None if rec["omega"] is None else int(rec["omega"])
            if rec.get("bar") is not None:
                bar[e] = int(rec["bar"])
        return cls(data["vertices"], alpha, omega, bar, data.get("stubs", []))

    def to_dot(self, labels: Mapping[int, object] | None = None) -> str:
        lines = ["graph T {"]
        for v in self.vertices:
            lab = f"{v}" if not labels or v not in labels else f"{v}:{labels[v]}"
            lines.append(f'  v{v} [label="{lab}"];')
        for e in self.geometric_edges():
            lines.append(f"  v{self.alpha[e]} -- v{self.omega[e]};")
        for e in sorted(self.stubs):
            lines.append(f'  s{e} [shape=point];')
            lines.append(f"  v{self.alpha[e]} -- s{e} [style=dashed];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return isinstance(other, Tree) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def __repr__(self):
        return f"Tree({len(self.vertices)} vertices, {len(self.edges)} edges, {len(self.stubs)} stubs)"
