"""Slow reference implementations that share no code with the package."""

from __future__ import annotations

from collections import deque

import numpy as np


def tree_path(tree, t, s):
    """Oriented edges from t to s, by breadth-first search over tree.alpha/omega."""
    prev = {t: None}
    queue = deque([t])
    while queue:
        u = queue.popleft()
        if u == s:
            break
        for e, a in tree.alpha.items():
            if a != u or tree.omega.get(e) is None:
                continue
            v = tree.omega[e]
            if v not in prev:
                prev[v] = (u, e)
                queue.append(v)
    out = []
    while prev[s] is not None:
        u, e = prev[s]
        out.append(e)
        s = u
    return out[::-1]


def star_distance(theta, base, weights, t, i, s, j):
    """Distance through base points along the tree path from (t, i) to (s, j)."""
    d = lambda v: theta.constituents[v].dist  # noqa: E731
    if t == s:
        return weights[t] * d(t)[i, j]
    path = tree_path(theta.tree, t, s)
    total = weights[t] * d(t)[i, base[path[0]]]
    for into, out in zip(path, path[1:]):
        v = theta.tree.omega[into]
        total += weights[v] * d(v)[base[theta.tree.bar[into]], base[out]]
    total += weights[s] * d(s)[base[theta.tree.bar[path[-1]]], j]
    return total


def glued_distances(theta, base, weights):
    """Floyd-Warshall over all points with zero-length gluing edges.

    Returns the full matrix and the offset of each constituent.
    """
    verts = sorted(theta.tree.vertices)
    offsets, n = {}, 0
    for v in verts:
        offsets[v] = n
        n += theta.constituents[v].n
    D = np.full((n, n), np.inf)
    for v in verts:
        o, k = offsets[v], theta.constituents[v].n
        D[o : o + k, o : o + k] = weights[v] * theta.constituents[v].dist
    for e in theta.tree.alpha:
        if theta.tree.omega.get(e) is None:
            continue
        a, b = theta.tree.alpha[e], theta.tree.omega[e]
        # base points are glued in the star space, the rest by the quotient
        for x, y in zip(theta.peripherals[e], theta.connectors[e]):
            D[offsets[a] + x, offsets[b] + y] = D[offsets[b] + y, offsets[a] + x] = 0.0
    for k in range(n):
        D = np.minimum(D, D[:, k, None] + D[None, k, :])
    return D, offsets
