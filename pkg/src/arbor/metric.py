"""Finite metric spaces and the metric toolbox.

A :class:`FiniteCompactum` is a distance matrix with point ids, optional
coordinates and a sampling resolution.  Everything that glues spaces goes
through :func:`quotient_metric`, the shortest-chain quotient in which
identified points are joined at cost zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .report import Report

TRIANGLE_TOL = 1e-9
EXACT_TRIANGLE_LIMIT = 700


class DegenerateQuotientError(ValueError):
    """Two distinct classes ended up at distance zero."""


class FiniteCompactum:
    """A finite metric space.

    Points are addressed by index ``0..n-1``; ``ids`` carries the opaque
    identity of each point (kept through subspaces and gluings), ``coords``
    optional Euclidean coordinates used for exports and correspondence hints.
    """

    __slots__ = ("dist", "ids", "coords", "resolution", "_index", "_diam")

    def __init__(self, dist, ids: Sequence[Hashable] | None = None, coords=None, resolution: float = 0.0):
        d = np.asarray(dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        self.dist = d
        n = d.shape[0]
        self.ids = tuple(range(n)) if ids is None else tuple(ids)
        if len(self.ids) != n:
            raise ValueError("ids and matrix size disagree")
        self.coords = None if coords is None else np.asarray(coords, dtype=np.float64)
        if self.coords is not None and self.coords.shape[0] != n:
            raise ValueError("coords and matrix size disagree")
        self.resolution = float(resolution)
        self._index = None
        self._diam = None

    @classmethod
    def from_points(cls, points, ids=None, resolution=0.0):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        diff = pts[:, None, :] - pts[None, :, :]
        return cls(np.sqrt((diff**2).sum(-1)), ids=ids, coords=pts, resolution=resolution)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self):
        return self.n

    @property
    def diameter(self) -> float:
        if self._diam is None:
            self._diam = float(self.dist.max()) if self.n else 0.0
        return self._diam

    def index_of(self, pid) -> int:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.ids)}
        return self._index[pid]

    def subset_diameter(self, idx) -> float:
        idx = np.asarray(list(idx), dtype=np.intp)
        if idx.size == 0:
            return 0.0
        return float(self.dist[np.ix_(idx, idx)].max())

    def subspace(self, idx) -> "FiniteCompactum":
        idx = np.asarray(list(idx), dtype=np.intp)
        return FiniteCompactum(
            self.dist[np.ix_(idx, idx)],
            ids=[self.ids[i] for i in idx],
            coords=None if self.coords is None else self.coords[idx],
            resolution=self.resolution,
        )

    def scaled(self, factor: float) -> "FiniteCompactum":
        return FiniteCompactum(self.dist * factor, self.ids, self.coords, self.resolution * factor)

    def with_ids(self, ids) -> "FiniteCompactum":
        return FiniteCompactum(self.dist, ids, self.coords, self.resolution)

    def __repr__(self):
        return f"FiniteCompactum(n={self.n}, diam={self.diameter:.4g})"

    # serialization

    def to_json(self, sidecar: Path | None = None) -> dict:
        out = {"n": self.n, "ids": [_id_json(p) for p in self.ids], "resolution": self.resolution}
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        if sidecar is None:
            out["dist"] = self.dist.ravel().tolist()
        else:
            sidecar = Path(sidecar)
            self.dist.astype("<f8").tofile(sidecar)
            out["dist_path"] = sidecar.name
        return out

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "FiniteCompactum":
        n = int(data["n"])
        if "dist_path" in data:
            path = Path(data["dist_path"])
            if base is not None and not path.is_absolute():
                path = Path(base) / path
            dist = np.fromfile(path, dtype="<f8").reshape(n, n)
        else:
            dist = np.asarray(data["dist"], dtype=np.float64).reshape(n, n)
        ids = [_id_from_json(p) for p in data.get("ids", range(n))]
        return cls(dist, ids=ids, coords=data.get("coords"), resolution=data.get("resolution", 0.0))


def _id_json(p):
    if isinstance(p, tuple):
        return [_id_json(q) for q in p]
    if isinstance(p, np.integer):
        return int(p)
    return p


def _id_from_json(p):
    if isinstance(p, list):
        return tuple(_id_from_json(q) for q in p)
    return p


# validation


def validate_metric(m: FiniteCompactum, tol: float = TRIANGLE_TOL, seed: int = 0) -> Report:
    """Check symmetry, zero diagonal, positivity and the triangle inequality.

    Tolerances are absolute on the unit-normalized scale.  Spaces above
    ``EXACT_TRIANGLE_LIMIT`` points get a sampled triangle check (all pairs
    against a seeded set of pivots) rather than the full cubic one.
    """
    rep = Report("metric")
    d = m.dist
    n = m.n
    scale = max(m.diameter, 1e-300)
    atol = tol * scale
    rep.data["n"] = n
    if n == 0:
        return rep
    if not np.all(np.isfinite(d)):
        rep.add("non-finite", "distance matrix has non-finite entries")
        return rep
    if np.abs(np.diag(d)).max() > atol:
        rep.add("diagonal", "nonzero self-distance")
    asym = np.abs(d - d.T).max()
    if asym > atol:
        rep.add("symmetry", f"max asymmetry {asym:.3g}")
    if (d < -atol).any():
        rep.add("negative", "negative distance")
    if n > 1:
        off = d.copy()
        np.fill_diagonal(off, np.inf)
        mn = off.min()
        if mn <= atol * 1e-3:
            i, j = np.unravel_index(np.argmin(off), off.shape)
            rep.add("positivity", f"points {i},{j} at distance {mn:.3g}", (int(i), int(j)))
    worst = _triangle_excess(d, seed)
    rep.data["triangle_excess"] = worst[0]
    rep.data["triangle_exact"] = worst[2]
    if worst[0] > atol:
        rep.add("triangle", f"triangle excess {worst[0]:.3g} at {worst[1]}", worst[1])
    return rep


def _triangle_excess(d, seed):
    n = d.shape[0]
    if n <= EXACT_TRIANGLE_LIMIT:
        pivots = np.arange(n)
        exact = True
    else:
        rng = np.random.default_rng(seed)
        pivots = np.sort(rng.choice(n, size=48, replace=False))
        exact = False
    worst, where = 0.0, None
    for k in pivots:
        through = d[:, k, None] + d[None, k, :]
        excess = d - through
        i = int(np.argmax(excess))
        v = excess.flat[i]
        if v > worst:
            worst = float(v)
            a, c = divmod(i, n)
            where = (int(a), int(k), int(c))
    return worst, where, exact


# subsets


def hausdorff(m: FiniteCompactum, a, b) -> float:
    a = np.asarray(list(a), dtype=np.intp)
    b = np.asarray(list(b), dtype=np.intp)
    if a.size == 0 or b.size == 0:
        raise ValueError("hausdorff distance of an empty subset")
    block = m.dist[np.ix_(a, b)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def default_ladder(diam: float, steps: int = 21) -> np.ndarray:
    return diam * 2.0 ** -np.arange(steps)


def nullity_profile(m: FiniteCompactum, family: Iterable, ladder=None):
    """Count family members with diameter above each epsilon.

    Returns ``(ladder, counts)``.  The default ladder is ``diam * 2**-k`` for
    ``k = 0..20``.
    """
    diams = np.array([m.subset_diameter(s) for s in family], dtype=np.float64)
    if ladder is None:
        ladder = default_ladder(m.diameter)
    ladder = np.asarray(ladder, dtype=np.float64)
    counts = (diams[None, :] > ladder[:, None]).sum(axis=1) if diams.size else np.zeros(len(ladder), int)
    return ladder, counts


def profile_from_diameters(diams, ladder):
    diams = np.asarray(diams, dtype=np.float64)
    ladder = np.asarray(ladder, dtype=np.float64)
    if diams.size == 0:
        return np.zeros(len(ladder), dtype=int)
    return (diams[None, :] > ladder[:, None]).sum(axis=1)


# gluing


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb

    def classes(self, n):
        groups: dict[int, list[int]] = {}
        for i in range(n):
            groups.setdefault(self.find(i), []).append(i)
        return sorted(groups.values())


@dataclass
class Quotient:
    space: FiniteCompactum
    classes: list[tuple[int, ...]]
    class_of: np.ndarray
    chain: np.ndarray  # chain pseudometric on the original points


def chain_closure(d: np.ndarray, pairs) -> np.ndarray:
    """Shortest-chain pseudometric where each pair is joined at cost zero.

    Only the points touched by identifications can act as relays, so the
    closure is computed on that portal set and then extended to all pairs.
    """
    d = np.asarray(d, dtype=np.float64)
    pairs = [(int(a), int(b)) for a, b in pairs if a != b]
    if not pairs:
        return d.copy()
    portals = np.array(sorted({p for ab in pairs for p in ab}), dtype=np.intp)
    pos = {int(p): i for i, p in enumerate(portals)}
    dp = d[np.ix_(portals, portals)].copy()
    for a, b in pairs:
        dp[pos[a], pos[b]] = dp[pos[b], pos[a]] = 0.0
    for k in range(len(portals)):
        np.minimum(dp, dp[:, k, None] + dp[None, k, :], out=dp)
    g = d[:, portals]
    h = g.copy()
    for k in range(len(portals)):
        np.minimum(h, g[:, k, None] + dp[None, k, :], out=h)
    out = d.copy()
    for k in range(len(portals)):
        np.minimum(out, h[:, k, None] + g[None, :, k], out=out)
    return out


def quotient_metric(m: FiniteCompactum, pairs, degeneracy_tol: float = 1e-12, chain=None) -> Quotient:
    """Quotient by the equivalence generated by ``pairs``.

    The representative of a class is its smallest index; the quotient keeps
    that point's id and coordinates.  Raises :class:`DegenerateQuotientError`
    when two distinct classes are at chain distance zero.  ``chain`` lets a
    caller supply a closure it computed with structural shortcuts.
    """
    n = m.n
    pairs = list(pairs)
    uf = UnionFind(n)
    for a, b in pairs:
        uf.union(int(a), int(b))
    classes = [tuple(c) for c in uf.classes(n)]
    class_of = np.empty(n, dtype=np.intp)
    for ci, c in enumerate(classes):
        class_of[list(c)] = ci
    if chain is None:
        chain = chain_closure(m.dist, pairs)
    reps = np.array([c[0] for c in classes], dtype=np.intp)
    qd = chain[np.ix_(reps, reps)]
    qd = np.minimum(qd, qd.T)
    np.fill_diagonal(qd, 0.0)
    if len(reps) > 1:
        off = qd.copy()
        np.fill_diagonal(off, np.inf)
        mn = off.min()
        if mn <= degeneracy_tol * max(m.diameter, 1e-300):
            i, j = np.unravel_index(np.argmin(off), off.shape)
            raise DegenerateQuotientError(
                f"classes {classes[i]} and {classes[j]} collapse (distance {mn:.3g})"
            )
    space = FiniteCompactum(
        qd,
        ids=[m.ids[r] for r in reps],
        coords=None if m.coords is None else m.coords[reps],
        resolution=m.resolution,
    )
    return Quotient(space, classes, class_of, chain)


# Gromov-Hausdorff bounds


def _check_correspondence(nx, ny, corr):
    corr = np.asarray(corr, dtype=np.intp).reshape(-1, 2)
    if not (np.isin(np.arange(nx), corr[:, 0]).all() and np.isin(np.arange(ny), corr[:, 1]).all()):
        raise ValueError("correspondence is not surjective onto both spaces")
    return corr


def distortion(x: FiniteCompactum, y: FiniteCompactum, corr, chunk: int = 1024) -> float:
    corr = _check_correspondence(x.n, y.n, corr)
    i, j = corr[:, 0], corr[:, 1]
    worst = 0.0
    for s in range(0, len(corr), chunk):
        a = x.dist[np.ix_(i[s : s + chunk], i)]
        b = y.dist[np.ix_(j[s : s + chunk], j)]
        worst = max(worst, float(np.abs(a - b).max()))
    return worst


def gh_upper(x: FiniteCompactum, y: FiniteCompactum, corr) -> float:
    """Half the distortion of a correspondence: an upper bound for d_GH."""
    return distortion(x, y, corr) / 2.0


def greedy_correspondence(x: FiniteCompactum, y: FiniteCompactum, hint=None) -> np.ndarray:
    """Mutual nearest matching, by coordinates when available.

    ``hint`` may be a pair of coordinate arrays for x and y.  Without
    coordinates the spaces are compared through distance profiles to a few
    farthest-point anchors matched in order.
    """
    norm = 2
    if hint is not None:
        cx, cy = (np.asarray(h, dtype=np.float64) for h in hint)
    elif x.coords is not None and y.coords is not None and x.coords.shape[1] == y.coords.shape[1]:
        cx, cy = x.coords, y.coords
    else:
        k = min(8, x.n, y.n)
        ax, ay = farthest_points(x, k), farthest_points(y, k)
        cx, cy = x.dist[:, ax], y.dist[:, ay]
        norm = np.inf
    if cx.ndim == 1:
        cx, cy = cx[:, None], cy[:, None]
    _, to_y = cKDTree(cy).query(cx, p=norm)
    _, to_x = cKDTree(cx).query(cy, p=norm)
    pairs = {(i, int(to_y[i])) for i in range(x.n)} | {(int(to_x[j]), j) for j in range(y.n)}
    return np.array(sorted(pairs), dtype=np.intp)


def farthest_points(m: FiniteCompactum, k: int) -> list[int]:
    if m.n == 0:
        return []
    chosen = [0]
    near = m.dist[0].copy()
    while len(chosen) < k:
        nxt = int(np.argmax(near))
        if near[nxt] == 0:
            break
        chosen.append(nxt)
        np.minimum(near, m.dist[nxt], out=near)
    return chosen


def circle_sample(n: int, phase: float = 0.0, radius: float = 1.0) -> FiniteCompactum:
    """n equally spaced points on a circle with the arc-length metric."""
    theta = phase + 2 * np.pi * np.arange(n) / n
    return arc_metric_space(theta, radius)


def arc_metric_space(theta, radius: float = 1.0, ids=None) -> FiniteCompactum:
    theta = np.asarray(theta, dtype=np.float64)
    diff = np.abs(theta[:, None] - theta[None, :]) % (2 * np.pi)
    d = radius * np.minimum(diff, 2 * np.pi - diff)
    coords = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return FiniteCompactum(d, ids=ids, coords=coords)
