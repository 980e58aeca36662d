"""Label algebra for dense tree systems of manifolds.

Constituents carry labels from a finite alphabet of closed manifolds.  The
checks and rewrites here work on labels only; the homeomorphisms that
justify relabeling a punctured connected sum are recorded in the rewrite
log as axiom steps rather than constructed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .metric import FiniteCompactum
from .report import Report
from .system import TreeSystem
from .tree import Tree

AXIOM = "peripheral-relabel"


class PromiseError(ValueError):
    pass


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    names: tuple
    nonorientable: frozenset = frozenset()

    def __post_init__(self):
        if not self.names:
            raise LabelError("empty alphabet")
        if not set(self.nonorientable) <= set(self.names):
            raise LabelError("nonorientable labels outside the alphabet")

    @property
    def orientation(self) -> str:
        return "nonorientable-present" if self.nonorientable else "oriented"

    def __contains__(self, m):
        return m in self.names


@dataclass(frozen=True)
class ConnectedSumWord:
    """Multiset of manifold labels joined by connected sum."""

    counts: tuple  # sorted (label, multiplicity) pairs
    orientation: str = "oriented"

    @classmethod
    def of(cls, labels: Mapping | Iterable, orientation: str = "oriented"):
        c = Counter(labels) if not isinstance(labels, Mapping) else Counter(dict(labels))
        items = tuple(sorted(((k, int(v)) for k, v in c.items() if v > 0), key=lambda kv: repr(kv[0])))
        return cls(items, orientation)

    def support(self) -> frozenset:
        return frozenset(k for k, _ in self.counts)


def sum_normalize(w: ConnectedSumWord) -> ConnectedSumWord:
    """Collapse every multiplicity to one; the orientation class is kept."""
    if not w.counts:
        raise LabelError("empty connected-sum word")
    return ConnectedSumWord(tuple((k, 1) for k, _ in w.counts), w.orientation)


def spaces_equal(w1: ConnectedSumWord, w2: ConnectedSumWord) -> bool:
    return sum_normalize(w1) == sum_normalize(w2)


@dataclass(frozen=True)
class Promise:
    """What lies beyond a stub: the label of the next vertex and all labels beyond."""

    first: object
    beyond: frozenset

    def __post_init__(self):
        if self.first not in self.beyond:
            raise PromiseError("the first label must occur beyond the stub")


@dataclass
class LabeledSystem:
    system: TreeSystem
    alphabet: Alphabet
    promises: dict[int, Promise] = field(default_factory=dict)
    signs: dict[int, int] | None = None  # connector orientation flags

    @property
    def labels(self) -> dict:
        return self.system.labels

    @property
    def tree(self) -> Tree:
        return self.system.tree

    def word(self, vertices=None) -> ConnectedSumWord:
        vs = self.tree.vertices if vertices is None else vertices
        return ConnectedSumWord.of([self.labels[v] for v in vs], self._orientation(vs))

    def _orientation(self, vs):
        return "nonorientable-present" if any(self.labels[v] in self.alphabet.nonorientable for v in vs) else "oriented"

    def to_json(self, sidecar_dir=None) -> dict:
        return {
            "system": self.system.to_json(sidecar_dir),
            "alphabet": {"names": list(self.alphabet.names), "nonorientable": sorted(self.alphabet.nonorientable, key=repr)},
            "promises": [{"stub": z, "first": p.first, "beyond": sorted(p.beyond, key=repr)} for z, p in sorted(self.promises.items())],
            "signs": None if self.signs is None else [{"edge": e, "sign": s} for e, s in sorted(self.signs.items())],
        }

    @classmethod
    def from_json(cls, data: dict, base=None) -> "LabeledSystem":
        system = TreeSystem.from_json(data["system"], base)
        a = data["alphabet"]
        alphabet = Alphabet(tuple(a["names"]), frozenset(a.get("nonorientable", ())))
        promises = {int(p["stub"]): Promise(p["first"], frozenset(p["beyond"])) for p in data.get("promises", [])}
        signs = None if data.get("signs") is None else {int(r["edge"]): int(r["sign"]) for r in data["signs"]}
        return cls(system, alphabet, promises, signs)

    def validate(self) -> Report:
        rep = Report("labeled")
        tree = self.tree
        if self.labels is None:
            rep.add("labels", "system has no labels")
            return rep
        for t in tree.vertices:
            if t not in self.labels:
                rep.add("labels", f"vertex {t} has no label", t)
            elif self.labels[t] not in self.alphabet:
                rep.add("labels", f"label {self.labels[t]!r} at {t} not in the alphabet", t)
        for z, p in self.promises.items():
            if not p.beyond <= set(self.alphabet.names):
                rep.add("promise", f"stub {z} promises labels outside the alphabet", z)
        if self.alphabet.orientation == "oriented":
            for e in tree.internal_edges():
                if self.signs is None or e not in self.signs:
                    rep.add("orientation", f"oriented alphabet but edge {e} has no sign", e)
                elif self.signs[e] not in (1, -1) or self.signs[e] != self.signs.get(tree.bar[e]):
                    rep.add("orientation", f"signs of {e} and its reverse disagree", e)
        return rep

    def neighbour_label(self, e: int):
        if self.tree.is_stub(e):
            if e not in self.promises:
                raise PromiseError(f"stub {e} has no label promise")
            return self.promises[e].first
        return self.labels[self.tree.omega[e]]

    def half_tree_labels(self, e: int) -> set:
        tree = self.tree
        if tree.is_stub(e):
            if e not in self.promises:
                raise PromiseError(f"stub {e} has no label promise")
            return set(self.promises[e].beyond)
        out = set()
        for v in tree.half_tree(e):
            out.add(self.labels[v])
            for z in tree.out_edges(v):
                if tree.is_stub(z):
                    if z not in self.promises:
                        raise PromiseError(f"stub {z} has no label promise")
                    out |= self.promises[z].beyond
        return out


def two_saturation(L: LabeledSystem) -> Report:
    """Every vertex sees at least two edges into each label."""
    rep = Report("2-saturation")
    for t in L.tree.vertices:
        seen = Counter(L.neighbour_label(e) for e in L.tree.out_edges(t))
        for m in L.alphabet.names:
            if seen[m] < 2:
                rep.add("2-saturated", f"vertex {t} has {seen[m]} edges into label {m!r}", (t, m))
    return rep


def is_2_saturated(L: LabeledSystem) -> bool:
    return two_saturation(L).ok


def weak_saturation(L: LabeledSystem) -> Report:
    """Every half-tree, stub sides included, holds every label."""
    rep = Report("weak-saturation")
    full = set(L.alphabet.names)
    for e in L.tree.edges:
        missing = full - L.half_tree_labels(e)
        if missing:
            rep.add("weakly-saturated", f"half-tree beyond {e} misses {sorted(map(repr, missing))}", e)
    return rep


def is_weakly_saturated(L: LabeledSystem) -> bool:
    return weak_saturation(L).ok


# combinatorial constituents


def unit_system(tree: Tree, labels, interior: int = 2, tails=None, dense: bool = True) -> TreeSystem:
    """Unit-metric constituents: two points per edge plus ``interior`` points.

    Peripherals are the edge's point pair; connectors match them in order.
    Every point is within distance 1 of a peripheral, the declared
    resolution.
    """
    cons, per, con = {}, {}, {}
    slot = {}
    for t in tree.vertices:
        out = tree.out_edges(t)
        n = 2 * len(out) + interior
        d = np.ones((n, n)) - np.eye(n)
        ids = [("p", e, k) for e in out for k in (0, 1)] + [("i", t, k) for k in range(interior)]
        cons[t] = FiniteCompactum(d, ids=ids, resolution=1.0)
        for j, e in enumerate(out):
            per[e] = [2 * j, 2 * j + 1]
            slot[e] = (2 * j, 2 * j + 1)
    for e in tree.internal_edges():
        con[e] = list(slot[tree.bar[e]])
    if tails is None:
        tails = {z: 1.0 for z in tree.stubs}
    return TreeSystem(tree, cons, per, con, tails, labels=dict(labels), dense=dense)


# saturation


def saturation_cells(L: LabeledSystem, root: int | None = None) -> list[frozenset]:
    """Partition into subtrees that each hold every label where possible.

    Cells grow from the root: a cell is the hull of the shortest paths to
    the nearest vertex of each label inside the current half-tree.  A
    leftover piece that cannot hold every label joins its parent cell.
    """
    tree = L.tree
    full = set(L.alphabet.names)
    root = tree.vertices[0] if root is None else root
    cells: list[set] = []
    pending = [(root, None)]  # (start vertex, parent cell index)
    while pending:
        start, parent = pending.pop(0)
        if parent is None:
            region = set(tree.vertices)
        else:
            e = tree.edge_between(next(iter(cells[parent] & set(tree.neighbors(start)))), start)
            region = set(tree.half_tree(e))
        present = {L.labels[v] for v in region}
        if present != full and parent is not None:
            cells[parent] |= region
            continue
        order, par_edge, _ = _bfs_within(tree, start, region)
        cell = {start}
        for m in sorted(present, key=repr):
            v = next(u for u in order if L.labels[u] == m)
            while v != start:
                cell.add(v)
                v = tree.alpha[par_edge[v]]
        idx = len(cells)
        cells.append(cell)
        for v in sorted(cell):
            for w in tree.neighbors(v):
                if w in region and w not in cell:
                    pending.append((w, idx))
    return [frozenset(c) for c in cells]


def _bfs_within(tree, start, region):
    order, par, depth = [start], {}, {start: 0}
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for e in tree.out_edges(u):
            if tree.is_stub(e):
                continue
            w = tree.omega[e]
            if w in region and w not in depth:
                depth[w] = depth[u] + 1
                par[w] = e
                order.append(w)
    return order, par, depth


@dataclass
class SaturationResult:
    labeled: LabeledSystem
    log: list[dict]
    cells: list[frozenset]
    domains: dict[int, tuple[int, object]]  # new vertex -> (cell index, label)


def saturate(L: LabeledSystem, interior: int = 2) -> SaturationResult:
    """Rewrite a weakly saturated system into a 2-saturated one.

    Cells from :func:`saturation_cells` are consolidated; each cell's
    constituent, a punctured connected sum of its labels, is re-decomposed
    into a path of domains, one per label of its normalized word.  Edges
    leaving the cell are handed out so that every domain gets two edges into
    every label; the cell's stubs come next, and fresh stubs promising the
    whole alphabet fill any gap.  Choices go to the smallest ids first.
    """
    weak = weak_saturation(L)
    if not weak.ok:
        raise LabelError(f"system is not weakly saturated: {weak.violations[0].detail}")
    tree = L.tree
    names = sorted(L.alphabet.names, key=repr)
    full = frozenset(names)
    cells = saturation_cells(L)
    cell_of = {v: i for i, c in enumerate(cells) for v in c}
    log = [{"op": "consolidate", "params": {"cells": [sorted(c) for c in cells]}}]

    # edges between cells, seen from the parent cell
    children: dict[int, list[int]] = {i: [] for i in range(len(cells))}
    root_cell = cell_of[tree.vertices[0]]
    order = [root_cell]
    seen = {root_cell}
    for ci in order:
        for v in sorted(cells[ci]):
            for e in tree.out_edges(v):
                if tree.is_stub(e):
                    continue
                cj = cell_of[tree.omega[e]]
                if cj != ci and cj not in seen:
                    seen.add(cj)
                    children[ci].append(e)
                    order.append(cj)

    vid: dict[tuple[int, object], int] = {}
    domains: dict[int, tuple[int, object]] = {}
    labels: dict[int, object] = {}
    alpha, omega, bar = {}, {}, {}
    stubs, promises = [], {}
    next_edge = [0]

    def new_edge_pair(u, v):
        e = next_edge[0]
        next_edge[0] += 2
        alpha[e], omega[e], bar[e] = u, v, e + 1
        alpha[e + 1], omega[e + 1], bar[e + 1] = v, u, e
        return e

    def new_stub(u, promise):
        e = next_edge[0]
        next_edge[0] += 2
        alpha[e], omega[e] = u, None
        stubs.append(e)
        promises[e] = promise
        return e

    entry_label: dict[int, object] = {}
    entry_from: dict[int, int] = {}
    for ci in order:
        cell = cells[ci]
        word = ConnectedSumWord.of([L.labels[v] for v in cell])
        norm = sum_normalize(word)
        dom_labels = [k for k, _ in norm.counts]
        log.append({"op": "relabel-cell", "params": {"cell": sorted(cell), "word": [[_plain(k), m] for k, m in word.counts], "domains": [_plain(k) for k in dom_labels]}, "axiom": AXIOM})
        for m in dom_labels:
            v = len(vid)
            vid[(ci, m)] = v
            domains[v] = (ci, m)
            labels[v] = m
        # a path of domains in label order
        for m1, m2 in zip(dom_labels, dom_labels[1:]):
            new_edge_pair(vid[(ci, m1)], vid[(ci, m2)])
        if ci in entry_label:
            # the parent already chose which of our domains it enters
            u = vid[(ci, entry_label[ci])]
            e = new_edge_pair(entry_from[ci], u)
        need = {vid[(ci, m)]: Counter() for m in dom_labels}
        for e, a in list(alpha.items()):
            if a in need and omega.get(e) is not None:
                need[a][labels[omega[e]]] += 1
            elif a in need and e in promises:
                need[a][promises[e].first] += 1
        free_children = list(children[ci])
        free_stubs = sorted(z for v in cell for z in tree.out_edges(v) if tree.is_stub(z))
        for u in sorted(need):
            for m in names:
                while need[u][m] < 2:
                    if free_children:
                        e = free_children.pop(0)
                        cj = cell_of[tree.omega[e]]
                        entry_label[cj], entry_from[cj] = m, u
                        need[u][m] += 1
                        log.append({"op": "attach", "params": {"edge": e, "domain": u, "label": _plain(m)}})
                        continue
                    z = next((z for z in free_stubs if m in L.promises[z].beyond), None)
                    if z is not None:
                        free_stubs.remove(z)
                        new_stub(u, Promise(m, L.promises[z].beyond))
                        log.append({"op": "attach-stub", "params": {"stub": z, "domain": u, "label": _plain(m)}})
                    else:
                        new_stub(u, Promise(m, full))
                        log.append({"op": "add-stub", "params": {"domain": u, "label": _plain(m)}, "axiom": AXIOM})
                    need[u][m] += 1
        # leftovers go to the first domain
        first = vid[(ci, dom_labels[0])]
        for e in free_children:
            cj = cell_of[tree.omega[e]]
            entry_label[cj] = sorted((k for k, _ in sum_normalize(ConnectedSumWord.of([L.labels[v] for v in cells[cj]])).counts), key=repr)[0]
            entry_from[cj] = first
        for z in free_stubs:
            p = L.promises[z]
            new_stub(first, p)
    new_tree = Tree(sorted(labels), alpha, omega, bar, stubs)
    system = unit_system(new_tree, labels, interior)
    signs = None
    if L.alphabet.orientation == "oriented":
        signs = {e: 1 for e in new_tree.internal_edges()}
    out = LabeledSystem(system, L.alphabet, promises, signs)
    return SaturationResult(out, log, cells, domains)


def label_content_preserved(before: LabeledSystem, res: SaturationResult) -> Report:
    rep = Report("label-content")
    if not spaces_equal(before.word(), res.labeled.word()):
        rep.add("global", "normalized label content changed")
    for ci, cell in enumerate(res.cells):
        mine = [v for v, (c, _) in res.domains.items() if c == ci]
        w_in = ConnectedSumWord.of([before.labels[v] for v in cell])
        w_out = ConnectedSumWord.of([res.labeled.labels[v] for v in mine])
        if not spaces_equal(w_in, w_out):
            rep.add("cell", f"cell {ci} changes normalized content", ci)
    return rep


def _plain(x):
    return x if isinstance(x, (str, int, float)) else repr(x)
