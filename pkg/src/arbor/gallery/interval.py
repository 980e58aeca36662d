"""Tree of internally punctured intervals.

Every constituent is a grid sample of ``[0, L]`` with open subintervals
removed.  The removed intervals never touch the ends, so the boundary points
0 and L are never peripheral.  Each non-root constituent has one extra hole
whose endpoints glue to the parent's hole.
"""

from __future__ import annotations

import numpy as np

from ..metric import FiniteCompactum
from ..system import TreeSystem
from ..tree import Tree


def _layout(n: int, holes: int, hole_steps: int) -> list[tuple[int, int]]:
    free = n - holes * hole_steps
    if free < holes + 1:
        raise ValueError("not enough grid steps between holes")
    base, extra = divmod(free, holes + 1)
    spacers = [base + (1 if i < extra else 0) for i in range(holes + 1)]
    out, pos = [], 0
    for j in range(holes):
        pos += spacers[j]
        out.append((pos, hole_steps))
        pos += hole_steps
    return out


def gen_punctured_interval(depth: int, holes: int = 2, hole_frac: float = 0.2, scale: float = 0.3, samples: int = 40) -> TreeSystem:
    """Truncated tree of punctured intervals with ``depth`` levels.

    A child constituent is ``scale`` times as long as its parent.  Stub
    tails bound the diameter of the pruned subtree, twice the geometric ray
    sum of lengths.  The canonical retractions are stored in
    ``theta.meta["retractions"]``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not 0 < scale < 1:
        raise ValueError(f"length schedule is not null: scale {scale}")
    hole_steps = max(1, int(round(hole_frac * samples)))
    if (holes + 1) * hole_steps >= samples:
        raise ValueError("holes cover the interval")

    length = {0: 1.0}
    level = {0: 0}
    holes_at: dict[int, dict[int, tuple[int, int]]] = {}
    parent_edge: dict[int, int] = {}
    alpha, omega, bar, stubs, tails = {}, {}, {}, [], {}
    order, queue, next_id = [], [0], 1
    while queue:
        v = queue.pop(0)
        order.append(v)
        own = holes + (0 if v == 0 else 1)
        slots = _layout(samples, own, hole_steps)
        holes_at[v] = {}
        if v != 0:
            holes_at[v][bar[parent_edge[v]]] = slots.pop(0)
        for slot in slots:
            c = next_id
            next_id += 1
            e, b = 2 * (c - 1), 2 * (c - 1) + 1
            holes_at[v][e] = slot
            if level[v] + 1 < depth:
                length[c] = length[v] * scale
                level[c] = level[v] + 1
                parent_edge[c] = e
                alpha[e], omega[e], bar[e] = v, c, b
                alpha[b], omega[b], bar[b] = c, v, e
                queue.append(c)
            else:
                alpha[e], omega[e] = v, None
                stubs.append(e)
                tails[e] = 2 * length[v] * scale / (1 - scale)
    tree = Tree(order, alpha, omega, bar, stubs)

    grids, cons, per = {}, {}, {}
    for v in order:
        ks = np.arange(samples + 1)
        keep = np.ones(len(ks), dtype=bool)
        for s, ln in holes_at[v].values():
            keep &= ~((ks > s) & (ks < s + ln))
        grids[v] = ks[keep]
        x = grids[v] * (length[v] / samples)
        at = {int(k): i for i, k in enumerate(grids[v])}
        for e, (s, ln) in holes_at[v].items():
            per[e] = [at[s], at[s + ln]]
        K = FiniteCompactum(np.abs(x[:, None] - x[None, :]), ids=grids[v].tolist(), coords=x[:, None])
        allp = np.unique(np.concatenate([per[e] for e in holes_at[v]])) if holes_at[v] else None
        res = float(K.dist[:, allp].min(axis=1).max()) if allp is not None else K.diameter
        cons[v] = FiniteCompactum(K.dist, K.ids, K.coords, resolution=res)
    con = {}
    for e in tree.internal_edges():
        # lower endpoint to lower endpoint
        con[e] = list(per[tree.bar[e]])
    theta = TreeSystem(tree, cons, per, con, tails, dense=True)
    theta.meta["retractions"] = interval_retractions(theta)
    theta.meta["generator"] = {"kind": "punctured-interval", "weights": "uniform", "depth": depth, "holes": holes, "hole_frac": hole_frac, "scale": scale, "samples": samples}
    return theta


def interval_retractions(theta: TreeSystem) -> dict[int, np.ndarray]:
    """Collapse-then-project retractions: points left of a hole go to its
    lower end, the rest to its upper end.  Foreign holes lie on one side of
    the hole, so their endpoints collapse to one point."""
    out = {}
    for e in theta.tree.edges:
        K = theta.constituents[theta.tree.alpha[e]]
        lo, hi = theta.peripherals[e]
        x = K.coords[:, 0]
        out[e] = np.where(x <= x[lo], lo, hi).astype(np.intp)
    return out


def interval_cuts(n: int, cuts) -> "Decomposition":
    """Decomposition of ``n`` grid points of [0, 1] by single cut points.

    Cut ``c`` is the grid index of the separator; its halves are the points
    at or below and at or above it.
    """
    from ..decomp import Decomposition, Splitting

    x = np.linspace(0.0, 1.0, n)
    K = FiniteCompactum(np.abs(x[:, None] - x[None, :]), coords=x[:, None], resolution=1.0 / (n - 1))
    cuts = sorted(set(int(c) for c in cuts))
    if cuts and (cuts[0] <= 0 or cuts[-1] >= n - 1):
        raise ValueError("cuts must be interior grid points")
    ks = np.arange(n)
    splits = [Splitting(ks == c, ks <= c, ks >= c, name=("cut", c)) for c in cuts]
    return Decomposition(K, splits)
