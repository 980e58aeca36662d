"""Seeded random tree systems over Euclidean point clouds."""

from __future__ import annotations

import numpy as np

from ..metric import FiniteCompactum
from ..system import TreeSystem
from ..tree import Tree


def gen_random(seed: int, depth: int = 3, children=(1, 3), points=(8, 16), peripheral=(1, 3), stubs: int = 1, dim: int = 2) -> TreeSystem:
    """Random rooted tree of point clouds with random connector bijections.

    Every vertex above ``depth`` gets a random number of children in the
    ``children`` range; vertices at ``depth`` get ``stubs`` stubs each.  Each
    constituent is a uniform sample of the unit cube in ``dim`` dimensions,
    and every edge draws a peripheral of a random size from ``peripheral``
    shared by both of its sides.  Tails are twice the largest constituent
    diameter.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    rng = np.random.default_rng(seed)
    links, stub_at, level = [], [], {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            if level[v] == depth:
                stub_at.extend([v] * stubs)
                continue
            for _ in range(int(rng.integers(children[0], children[1] + 1))):
                c = len(level)
                level[c] = level[v] + 1
                links.append((v, c))
                nxt.append(c)
        frontier = nxt
    tree = Tree.build(sorted(level), links, stub_at)
    sizes = {}
    for e in tree.edges:
        if tree.is_stub(e) or e < tree.bar[e]:
            sizes[e] = int(rng.integers(peripheral[0], peripheral[1] + 1))
            if not tree.is_stub(e):
                sizes[tree.bar[e]] = sizes[e]
    cons, per = {}, {}
    for t in tree.vertices:
        out = tree.out_edges(t)
        need = sum(sizes[e] for e in out)
        n = max(int(rng.integers(points[0], points[1] + 1)), need + 1)
        xy = rng.random((n, dim))
        cons[t] = FiniteCompactum.from_points(xy, ids=list(range(n)))
        perm = rng.permutation(n)
        pos = 0
        for e in out:
            per[e] = np.sort(perm[pos : pos + sizes[e]])
            pos += sizes[e]
    con = {}
    for e in tree.geometric_edges():
        b = tree.bar[e]
        img = rng.permutation(per[b])
        con[e] = img
        con[b] = per[e][np.argsort(img)]
    tail = 2 * max(K.diameter for K in cons.values())
    tails = {z: tail for z in tree.stubs}
    theta = TreeSystem(tree, cons, per, con, tails)
    theta.meta["generator"] = {"kind": "random", "seed": seed, "depth": depth}
    return theta


def random_partition(tree: Tree, rng: np.random.Generator, p_merge: float = 0.5) -> list[frozenset]:
    """Partition into subtrees by keeping each geometric edge with probability ``p_merge``."""
    parent = {v: v for v in tree.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in tree.geometric_edges():
        if rng.random() < p_merge:
            parent[find(tree.alpha[e])] = find(tree.omega[e])
    cells: dict[int, set] = {}
    for v in tree.vertices:
        cells.setdefault(find(v), set()).add(v)
    return [frozenset(c) for c in sorted(cells.values(), key=min)]
