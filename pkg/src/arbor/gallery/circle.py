"""Tree of circles: the circle with a null family of open arcs removed.

The root is the unit circle (circumference 2*pi) sampled on a uniform grid.
Each constituent carries ``gaps`` removed arcs of lengths
``ratio * L * 2**-j`` where ``L`` is the length of its free part.  The
constituent glued into a removed arc of length ``g`` is a circle of
circumference ``2g`` whose free half has length ``g``; the other half is the
arc that the parent removed.  With this choice the glued space is exactly a
sample of the unit circle with its arc-length metric, so realizations can be
compared with a plain circle sample.

All lengths are integer multiples of the constituent's grid step, so
peripheral points are exact grid points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..inverse import ExtendedFamily
from ..metric import FiniteCompactum
from ..system import TreeSystem
from ..tree import Tree


@dataclass
class CircleLayout:
    """Grid data of one constituent, positions in steps of its own grid."""

    steps: int  # grid steps around the whole circle
    h: float  # step length
    angle0: float  # unit-circle angle of position 0
    arcs: dict[int, tuple[int, int]] = field(default_factory=dict)  # edge -> (start, length) in steps
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))  # step of each point of K

    def angles(self, k):
        return self.angle0 + np.asarray(k) * self.h


def _gap_steps(n: int, ratio: float, gaps: int) -> list[int]:
    return [max(2, int(round(ratio * n * 2.0**-j))) for j in range(gaps)]


def _spread(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i >= parts - extra else 0) for i in range(parts)]


def removed_fraction(ratio: float, gaps: int, samples: int) -> float:
    return sum(_gap_steps(samples, ratio, gaps)) / samples


def gen_punctured_circle(depth: int, ratio: float = 0.25, gaps: int = 3, samples: int = 96, max_depth: int | None = None) -> TreeSystem:
    """Truncated tree of circles with ``depth`` levels of constituents.

    Vertex and edge ids follow breadth-first numbering of the untruncated
    tree, so the system at depth d is the restriction of the one at d + 1.
    Stub tails are the exact diameter sums of the pruned subtrees.
    ``max_depth`` stops puncturing: constituents at that level have no arcs
    removed and the system stops growing.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    f = removed_fraction(ratio, gaps, samples)
    if not 0 < f < 1:
        raise ValueError(f"arc schedule is not null: removed fraction {f:.3g}")
    gsteps = _gap_steps(samples, ratio, gaps)
    if samples - sum(gsteps) < gaps + 1:
        raise ValueError("not enough grid steps between removed arcs")

    layouts: dict[int, CircleLayout] = {}
    level: dict[int, int] = {}
    parent_edge: dict[int, int] = {}
    alpha, omega, bar, stubs, tails = {}, {}, {}, [], {}
    # root
    layouts[0] = CircleLayout(samples, 2 * np.pi / samples, 0.0)
    level[0] = 0
    queue = [0]
    next_id = 1
    order = []
    while queue:
        v = queue.pop(0)
        order.append(v)
        lay = layouts[v]
        punct = max_depth is None or level[v] < max_depth - 1
        if not punct:
            continue
        # gaps + 1 spacers keep every arc away from position 0 and the far end
        spacers = _spread(samples - sum(gsteps), gaps + 1)
        pos = 0
        starts = []
        for j in range(gaps):
            pos += spacers[j]
            starts.append(pos)
            pos += gsteps[j]
        for j in range(gaps):
            c = next_id
            next_id += 1
            e, b = 2 * (c - 1), 2 * (c - 1) + 1
            lay.arcs[e] = (starts[j], gsteps[j])
            g = gsteps[j] * lay.h
            if level[v] + 1 < depth:
                layouts[c] = CircleLayout(2 * samples, g / samples, lay.angle0 + starts[j] * lay.h)
                layouts[c].arcs[b] = (samples, samples)
                level[c] = level[v] + 1
                parent_edge[c] = e
                alpha[e], omega[e], bar[e] = v, c, b
                alpha[b], omega[b], bar[b] = c, v, e
                queue.append(c)
            else:
                alpha[e], omega[e] = v, None
                stubs.append(e)
                tails[e] = _tail(g, level[v] + 1, f, max_depth)
    tree = Tree(order, alpha, omega, bar, stubs)
    cons, per, con = {}, {}, {}
    for v in order:
        lay = layouts[v]
        closed = v != 0
        ks = np.arange(lay.steps // (2 if closed else 1) + (1 if closed else 0))
        inside = np.zeros(len(ks), dtype=bool)
        for e, (s, L) in lay.arcs.items():
            if v != 0 and e == tree.bar.get(parent_edge.get(v)):
                continue
            inside[(ks > s) & (ks < s + L)] = True
        lay.grid = ks[~inside]
        pos = lay.grid * lay.h
        circ = lay.steps * lay.h
        diff = np.abs(pos[:, None] - pos[None, :])
        dist = np.minimum(diff, circ - diff)
        coords = np.stack([np.cos(lay.angles(lay.grid)), np.sin(lay.angles(lay.grid))], axis=1)
        cons[v] = FiniteCompactum(dist, ids=lay.grid.tolist(), coords=coords)
    for v in order:
        lay = layouts[v]
        at = {int(k): i for i, k in enumerate(lay.grid)}
        for e, (s, L) in lay.arcs.items():
            if v != 0 and e == tree.bar[parent_edge[v]]:
                per[e] = [at[0], at[samples]]
            else:
                per[e] = [at[s], at[s + L]]
    for e in tree.internal_edges():
        a, o = tree.alpha[e], tree.omega[e]
        if o in parent_edge and parent_edge[o] == e:
            s, L = layouts[a].arcs[e]
            at_a = {int(k): i for i, k in enumerate(layouts[a].grid)}
            at_o = {int(k): i for i, k in enumerate(layouts[o].grid)}
            pairs = {at_a[s]: at_o[0], at_a[s + L]: at_o[samples]}
            con[e] = [pairs[i] for i in sorted(per[e])]
            inv = {j: i for i, j in pairs.items()}
            con[tree.bar[e]] = [inv[j] for j in sorted(per[tree.bar[e]])]
    for v in order:
        K = cons[v]
        allp = np.unique(np.concatenate([per[e] for e in tree.out_edges(v)])) if tree.out_edges(v) else None
        res = float(K.dist[:, allp].min(axis=1).max()) if allp is not None else K.diameter
        cons[v] = FiniteCompactum(K.dist, K.ids, K.coords, resolution=res)
    theta = TreeSystem(tree, cons, per, con, tails, dense=max_depth is None)
    theta.meta["circle"] = layouts
    theta.meta["generator"] = {"kind": "punctured-circle", "weights": "uniform", "depth": depth, "ratio": ratio, "gaps": gaps, "samples": samples, "max_depth": max_depth}
    return theta


def _tail(g: float, lvl: int, f: float, max_depth):
    """Sum of constituent diameters in the subtree filling an arc of length g."""
    if max_depth is None:
        return g / (1 - f)
    total, width = 0.0, g
    for _ in range(lvl, max_depth):
        total += width
        width *= f
    return total


def circle_generator(**params):
    return lambda depth: gen_punctured_circle(depth, **params)


def arc_family(theta: TreeSystem, v: int = 0):
    """Peripheral subsets at one vertex, for nullity profiles."""
    return [theta.peripherals[e] for e in theta.tree.out_edges(v)]


def standard_family(theta: TreeSystem) -> ExtendedFamily:
    """Extended family whose extended constituents are full circle samples.

    ``Delta_e`` is the removed arc sampled on the constituent's grid.  The map
    ``delta_e`` collapses every other removed arc to a point and stretches
    the rest of the circle linearly (in arc length) onto ``Delta_e``.
    """
    tree = theta.tree
    lay = theta.meta["circle"]
    hat, dpts, step_index = {}, {}, {}
    for v in tree.vertices:
        L = lay[v]
        K = theta.constituents[v]
        idx = {int(k): i for i, k in enumerate(L.grid)}
        extra = []
        for e in tree.out_edges(v):
            s, ln = L.arcs[e]
            inner = [(s + k) % L.steps for k in range(1, ln)]
            for k in inner:
                idx[k] = K.n + len(extra)
                extra.append(k)
            base = theta.peripherals[e]
            dpts[e] = np.concatenate([base, [idx[k] for k in inner]]).astype(np.intp)
        ks = np.concatenate([L.grid, np.array(extra, dtype=int)])
        pos = ks * L.h
        circ = L.steps * L.h
        diff = np.abs(pos[:, None] - pos[None, :])
        dist = np.minimum(diff, circ - diff)
        coords = np.stack([np.cos(L.angles(ks)), np.sin(L.angles(ks))], axis=1)
        hat[v] = FiniteCompactum(dist, ids=ks.tolist(), coords=coords, resolution=L.h)
        step_index[v] = (idx, ks)
    E = ExtendedFamily(theta, "standard", hat, dpts)
    for z in tree.stubs:
        s, ln = lay[tree.alpha[z]].arcs[z]
        E.end_point[z] = step_index[tree.alpha[z]][0][(s + ln // 2) % lay[tree.alpha[z]].steps]
    for e in tree.internal_edges():
        t, s = tree.alpha[e], tree.omega[e]
        Ls, Lt = lay[s], lay[t]
        x0, ln = Ls.arcs[tree.bar[e]]
        y0, lt = Lt.arcs[e]
        idx_s, ks_s = step_index[s]
        idx_t, _ = step_index[t]
        span = Ls.steps - ln
        foreign = []
        for f in E.foreign(e):
            a, lf = Ls.arcs[f]
            foreign.append(((a - (x0 + ln)) % Ls.steps, lf))

        def collapsed(u):
            return u - sum(min(max(u - a, 0), lf) for a, lf in foreign)

        total = collapsed(span)
        m = np.full(hat[s].n, -1, dtype=np.intp)
        for i, k in enumerate(ks_s):
            u = (int(k) - (x0 + ln)) % Ls.steps
            if u > span:
                continue  # interior of the excluded arc
            target = (y0 + int(round(lt * collapsed(u) / total))) % Lt.steps
            m[i] = idx_t[target]
        E.delta[e] = m
    return E
