"""Seeded instances shared by several test modules."""

from __future__ import annotations

import numpy as np

from arbor.decomp import nested_family
from arbor.gallery import gen_punctured_circle, gen_punctured_interval


def window_nest(theta, t, rng, levels, cyclic):
    """Nested index windows around a random point of K_t that avoid every peripheral.

    Constituent points are stored in arc-length order, so a window free of
    peripheral points is a solid run and its two end points separate it.
    """
    K = theta.constituents[t]
    n = K.n
    P = np.unique(np.concatenate([theta.peripherals[e] for e in theta.tree.out_edges(t)]))
    if not cyclic:
        P = np.union1d(P, [0, n - 1])
    i = np.arange(n)
    gap = np.abs(i[:, None] - P[None, :])
    if cyclic:
        gap = np.minimum(gap, n - gap)
    gap = gap.min(axis=1)
    levels = min(levels, int(gap.max()) - 1)
    if levels < 1:
        raise ValueError(f"K_{t} has no room for a window")
    x0 = int(rng.choice(np.flatnonzero(gap >= levels + 1)))
    off = np.abs(i - x0)
    if cyclic:
        off = np.minimum(off, n - off)
    nested = []
    for k in range(levels):
        r = int(gap[x0]) - 1 - k
        nested.append((off == r, off <= r))
    C, rep = nested_family(theta, t, x0, nested)
    return C, rep


def roundtrip_cases(count: int = 10):
    """``count`` seeded (system, {vertex: decomposition}) pairs, half circles, half intervals."""
    out = []
    for seed in range(count):
        rng = np.random.default_rng(seed)
        if seed % 2 == 0:
            theta, cyclic = gen_punctured_circle(2), True
        else:
            theta, cyclic = gen_punctured_interval(2 + seed % 3 // 2, samples=60), False
        verts = sorted(theta.tree.vertices)
        k = 1 + seed % min(3, len(verts))
        chosen = sorted(rng.choice(verts, size=k, replace=False).tolist())
        C = {t: window_nest(theta, t, rng, 1 + seed % 3, cyclic)[0] for t in chosen}
        out.append((seed, theta, C))
    return out
