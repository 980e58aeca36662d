"""Finite realizations of the limit of a tree system.

Two steps.  :func:`realize_star` builds the star space: the disjoint union of
the (rescaled) constituents with the base points of each edge identified,
measured through base points along tree paths.  :func:`realize_limit` then
applies the chain quotient gluing every peripheral point to its image.  Each
stub edge is represented by an end marker sitting at the class of its base
point and contributes its tail bound to the error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .metric import FiniteCompactum, UnionFind, gh_upper, quotient_metric
from .system import TreeSystem, restrict


@dataclass
class BasePointing:
    base: dict[int, int]  # edge -> point index in K_alpha(e)

    def __getitem__(self, e):
        return self.base[e]

    def restricted(self, edges: Iterable[int]) -> "BasePointing":
        return BasePointing({e: self.base[e] for e in edges})


def choose_basepoints(theta: TreeSystem, rule: str = "min", seed: int | None = None) -> BasePointing:
    """Pick b_e on the canonical orientation, force the partner through phi.

    ``rule="min"`` takes the lowest point id of the peripheral, ``"random"``
    draws uniformly with the given seed.
    """
    tree = theta.tree
    rng = np.random.default_rng(seed) if rule == "random" else None
    if rule not in ("min", "random"):
        raise ValueError(f"unknown base point rule {rule!r}")

    def pick(e):
        pts = theta.peripherals[e]
        if len(pts) == 0:
            raise ValueError(f"edge {e} has an empty peripheral")
        if rng is not None:
            return int(pts[rng.integers(len(pts))])
        K = theta.constituents[tree.alpha[e]]
        return int(min(pts, key=lambda i: (_sort_key(K.ids[i]), i)))

    base = {}
    for e in tree.edges:
        if tree.is_stub(e):
            base[e] = pick(e)
        elif e < tree.bar[e]:
            b = pick(e)
            base[e] = b
            base[tree.bar[e]] = theta.phi(e)[b]
    return BasePointing(base)


def _sort_key(pid):
    return (0, pid) if isinstance(pid, (int, np.integer)) else (1, repr(pid))


@dataclass
class WeightSchedule:
    weights: dict[int, float]
    ratio: float | None = None  # set for geometric schedules
    depth: dict[int, int] | None = None

    def tail(self, theta: TreeSystem, e: int) -> float:
        """Bound on the weighted diameter of everything beyond stub ``e``."""
        t = theta.tree.alpha[e]
        if self.ratio is None:
            return theta.tails.get(e, 0.0) * self.weights[t]
        # every pruned constituent has weighted diameter ratio**depth
        return 2 * self.ratio ** (self.depth[t] + 1) / (1 - self.ratio)

    def __getitem__(self, t):
        return self.weights[t]

    @classmethod
    def uniform(cls, theta: TreeSystem) -> "WeightSchedule":
        return cls({t: 1.0 for t in theta.tree.vertices})

    @classmethod
    def geometric(cls, theta: TreeSystem, ratio: float = 0.5, root: int | None = None) -> "WeightSchedule":
        """lambda_t = ratio**depth(t) / diam(K_t): unit-normalized, summable along rays."""
        _, _, depth = theta.tree.bfs(root)
        out = {}
        for t in theta.tree.vertices:
            diam = theta.constituents[t].diameter
            out[t] = ratio ** depth[t] / (diam if diam > 0 else 1.0)
        return cls(out, ratio, dict(depth))

    def restricted(self, vertices) -> "WeightSchedule":
        depth = None if self.depth is None else {t: self.depth[t] for t in vertices}
        return WeightSchedule({t: self.weights[t] for t in vertices}, self.ratio, depth)


def _defaults(theta, bp, w):
    if bp is None:
        bp = choose_basepoints(theta)
    if w is None:
        w = WeightSchedule.geometric(theta)
    return bp, w


@dataclass
class StarSpace:
    """The star space: constituents glued only at base points."""

    space: FiniteCompactum
    index: dict[int, np.ndarray]  # vertex -> star index of each local point
    members: list[tuple[tuple[int, int], ...]]
    raw: np.ndarray = field(repr=False)  # metric on the disjoint union
    offsets: dict[int, int] = field(repr=False, default_factory=dict)


def path_constants(theta: TreeSystem, bp: BasePointing, w: WeightSchedule):
    """For each ordered vertex pair: (first edge, last edge, middle sum).

    The middle sum is the weighted distance between consecutive base points
    inside the intermediate constituents of the path.
    """
    tree = theta.tree
    out = {}
    for t in tree.vertices:
        stack = [(tree.omega[e], e, e, 0.0) for e in tree.out_edges(t) if not tree.is_stub(e)]
        while stack:
            u, first, inc, c = stack.pop()
            out[(t, u)] = (first, inc, c)
            back = tree.bar[inc]
            Ku = theta.constituents[u].dist
            for f in tree.out_edges(u):
                if f == back or tree.is_stub(f):
                    continue
                stack.append((tree.omega[f], first, f, c + w[u] * Ku[bp[back], bp[f]]))
    return out


def realize_star(theta: TreeSystem, bp: BasePointing | None = None, w: WeightSchedule | None = None) -> StarSpace:
    bp, w = _defaults(theta, bp, w)
    tree = theta.tree
    verts = tree.vertices
    offsets, n = {}, 0
    for t in verts:
        offsets[t] = n
        n += theta.constituents[t].n
    raw = np.empty((n, n), dtype=np.float64)
    consts = path_constants(theta, bp, w)
    for t in verts:
        Kt = theta.constituents[t].dist * w[t]
        ot, nt = offsets[t], Kt.shape[0]
        raw[ot : ot + nt, ot : ot + nt] = Kt
        for s in verts:
            if s == t:
                continue
            first, last, c = consts[(t, s)]
            Ks = theta.constituents[s].dist
            os_, ns = offsets[s], Ks.shape[0]
            left = Kt[:, bp[first]]
            right = w[s] * Ks[bp[tree.bar[last]], :]
            raw[ot : ot + nt, os_ : os_ + ns] = left[:, None] + c + right[None, :]
    uf = UnionFind(n)
    for e in tree.geometric_edges():
        uf.union(offsets[tree.alpha[e]] + bp[e], offsets[tree.omega[e]] + bp[tree.bar[e]])
    groups = uf.classes(n)
    reps = np.array([g[0] for g in groups], dtype=np.intp)
    flat = np.empty(n, dtype=np.intp)
    for ci, g in enumerate(groups):
        flat[g] = ci
    owner = []
    for t in verts:
        owner.extend((t, i) for i in range(theta.constituents[t].n))
    members = [tuple(owner[i] for i in g) for g in groups]
    d = raw[np.ix_(reps, reps)]
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    ids = [_class_id(theta, members[c]) for c in range(len(groups))]
    coords = _class_coords(theta, members)
    index = {t: flat[offsets[t] : offsets[t] + theta.constituents[t].n] for t in verts}
    return StarSpace(FiniteCompactum(d, ids=ids, coords=coords), index, members, raw, offsets)


def _class_id(theta, members):
    ids = [theta.constituents[t].ids[i] for t, i in members]
    if all(p == ids[0] for p in ids):
        return ids[0]
    return tuple(sorted(((t, theta.constituents[t].ids[i]) for t, i in members), key=repr))


def _class_coords(theta, members):
    if any(theta.constituents[t].coords is None for t in theta.tree.vertices):
        return None
    return np.array([theta.constituents[m[0][0]].coords[m[0][1]] for m in members])


@dataclass
class Realization:
    """Finite approximation of the limit with end markers and an error bound."""

    space: FiniteCompactum
    classes: list[tuple[tuple[int, int], ...]]  # members (vertex, local index)
    index: dict[int, np.ndarray]  # vertex -> class of each local point
    end_markers: dict[int, int]  # stub edge -> class of its base point
    error: float
    basepoints: BasePointing
    weights: WeightSchedule
    star: StarSpace | None = field(default=None, repr=False)

    def point(self, t: int, i: int) -> int:
        return int(self.index[t][i])

    def provenance(self, theta: TreeSystem):
        return [[(t, theta.constituents[t].ids[i]) for t, i in c] for c in self.classes]

    def vertex_family(self):
        return {t: np.unique(ix) for t, ix in self.index.items()}


def gluing_pairs(theta: TreeSystem, bp: BasePointing, star_index: Mapping[int, np.ndarray]):
    tree = theta.tree
    pairs = []
    for e in tree.geometric_edges():
        a, o = tree.alpha[e], tree.omega[e]
        for x, y in theta.phi(e).items():
            if x != bp[e]:
                pairs.append((int(star_index[a][x]), int(star_index[o][y])))
    return pairs


def star_chain_closure(theta: TreeSystem, star: StarSpace, pairs) -> np.ndarray:
    """Chain closure of the star metric, computed block by block.

    A star distance between two constituents passes through a base point of
    each, so a shortest chain can always enter and leave a constituent
    through its peripheral points.  Only those portals need relaying.
    """
    d = star.space.dist
    n = d.shape[0]
    local = {}
    for t in theta.tree.vertices:
        pts = [theta.peripherals[e] for e in theta.tree.out_edges(t)]
        loc = np.unique(np.concatenate(pts)) if pts else np.zeros(0, dtype=np.intp)
        local[t] = np.unique(star.index[t][loc])
    portals = np.unique(np.concatenate([p for p in local.values()] + [np.zeros(0, dtype=np.intp)]))
    if len(portals) == 0 or not pairs:
        return d.copy()
    pos = np.full(n, -1, dtype=np.intp)
    pos[portals] = np.arange(len(portals))
    dp = d[np.ix_(portals, portals)].copy()
    for a, b in pairs:
        dp[pos[a], pos[b]] = dp[pos[b], pos[a]] = 0.0
    for k in range(len(portals)):
        np.minimum(dp, dp[:, k, None] + dp[None, k, :], out=dp)
    # h[x, q]: shortest chain from x to portal q leaving through x's own portals
    h = np.full((n, len(portals)), np.inf)
    for t, ix in star.index.items():
        rows = np.unique(ix)
        for p in local[t]:
            h[rows] = np.minimum(h[rows], d[rows, p, None] + dp[pos[p]][None, :])
    out = d.copy()
    for t, ix in star.index.items():
        cols = np.unique(ix)
        block = out[:, cols]
        for q in local[t]:
            np.minimum(block, h[:, pos[q], None] + d[q, cols][None, :], out=block)
        out[:, cols] = block
    return np.minimum(out, out.T)


def realize_limit(theta: TreeSystem, bp: BasePointing | None = None, w: WeightSchedule | None = None) -> Realization:
    bp, w = _defaults(theta, bp, w)
    star = realize_star(theta, bp, w)
    pairs = gluing_pairs(theta, bp, star.index)
    q = quotient_metric(star.space, pairs, chain=star_chain_closure(theta, star, pairs))
    classes = [tuple(m for s in cls for m in star.members[s]) for cls in q.classes]
    for c in classes:
        if len(c) > 2:
            raise ValueError(f"class {c} has more than two members")
    index = {t: q.class_of[ix] for t, ix in star.index.items()}
    tree = theta.tree
    markers = {e: int(index[tree.alpha[e]][bp[e]]) for e in sorted(tree.stubs)}
    error = max((w.tail(theta, e) for e in tree.stubs), default=0.0)
    return Realization(q.space, classes, index, markers, float(error), bp, w, star)


def embedding_distortion(theta: TreeSystem, R: Realization) -> dict[int, float]:
    """Per vertex: max |d_R - lambda_t d_t| over pairs of K_t."""
    out = {}
    for t in theta.tree.vertices:
        ix = R.index[t]
        d = R.space.dist[np.ix_(ix, ix)]
        out[t] = float(np.abs(d - R.weights[t] * theta.constituents[t].dist).max())
    return out


# refinement


def collapse_correspondence(shallow: TreeSystem, R1: Realization, deep: TreeSystem, R2: Realization) -> np.ndarray:
    """Pair each deep point with itself or with the base point of its stub."""
    st, dt = shallow.tree, deep.tree
    root = st.vertices[0]
    exit_edge = {}
    for t in dt.vertices:
        if st.has_vertex(t):
            continue
        for e in dt.path(root, t):
            if not st.has_vertex(dt.omega[e]):
                exit_edge[t] = e
                break
    pairs = set()
    for c2, members in enumerate(R2.classes):
        for t, i in members:
            if st.has_vertex(t):
                pairs.add((R1.point(t, i), c2))
            else:
                e = exit_edge[t]
                pairs.add((R1.end_markers[e], c2))
    return np.array(sorted(pairs), dtype=np.intp)


@dataclass
class RefineResult:
    bound: float
    tail: float
    shallow: Realization
    deep: Realization


def refine_and_compare(generator: Callable[[int], TreeSystem], depth: int, weights: str = "uniform") -> RefineResult:
    """GH bound between the realizations at ``depth`` and ``depth + 1``.

    The generator must be prefix-consistent: the deeper system agrees with
    the shallower one on the shallower vertex set and reuses its edge ids.
    """
    a, b = generator(depth), generator(depth + 1)
    wa = WeightSchedule.uniform(a) if weights == "uniform" else WeightSchedule.geometric(a)
    wb = WeightSchedule.uniform(b) if weights == "uniform" else WeightSchedule.geometric(b)
    R1, R2 = realize_limit(a, w=wa), realize_limit(b, w=wb)
    corr = collapse_correspondence(a, R1, b, R2)
    return RefineResult(gh_upper(R1.space, R2.space, corr), R1.error, R1, R2)


# partial unions and basis sets


@dataclass
class PartialUnion:
    space: FiniteCompactum
    embeddings: dict[int, np.ndarray]
    family: dict[int, np.ndarray]  # e in N_F -> points of Sigma_e in K_F
    realization: Realization


def partial_union(theta: TreeSystem, F, bp: BasePointing | None = None, w: WeightSchedule | None = None) -> PartialUnion:
    F = frozenset(F)
    bp, w = _defaults(theta, bp, w)
    sub = restrict(theta, F)
    R = realize_limit(sub, bp.restricted(sub.tree.edges), w.restricted(F))
    fam = {}
    for e in theta.tree.n_set(F):
        t = theta.tree.alpha[e]
        fam[e] = np.unique(R.index[t][theta.peripherals[e]])
    return PartialUnion(R.space, dict(R.index), fam, R)


class SaturationError(ValueError):
    pass


def g_set(theta: TreeSystem, R: Realization, F, U, pu: PartialUnion | None = None):
    """Basis set G(U) as realization indices plus the stubs whose ends it holds."""
    F = frozenset(F)
    tree = theta.tree
    if pu is None:
        pu = partial_union(theta, F, R.basepoints, R.weights)
    U = {int(u) for u in U}
    for e, A in pu.family.items():
        inside = sum(1 for a in A.tolist() if a in U)
        if 0 < inside < len(A):
            raise SaturationError(f"U meets the peripheral of edge {e} only partly")
    pts = set()
    for u in U:
        for t, i in pu.realization.classes[u]:
            pts.add(R.point(t, i))
    ends = []
    for e, A in pu.family.items():
        if not A.size or A[0] not in U:
            continue
        if tree.is_stub(e):
            ends.append(e)
            continue
        for s in tree.half_tree(e):
            pts.update(R.index[s].tolist())
            ends.extend(z for z in tree.out_edges(s) if tree.is_stub(z))
    return np.array(sorted(pts), dtype=np.intp), sorted(ends)


# the inverse system of star spaces


class StarInverseSystem:
    """Star spaces of finite subtrees with their collapsing projections."""

    def __init__(self, theta: TreeSystem, bp: BasePointing | None = None, w: WeightSchedule | None = None):
        self.theta = theta
        self.bp, self.w = _defaults(theta, bp, w)
        self._spaces: dict[frozenset, StarSpace] = {}

    def space(self, F) -> StarSpace:
        F = frozenset(F)
        if F not in self._spaces:
            sub = restrict(self.theta, F)
            self._spaces[F] = realize_star(sub, self.bp.restricted(sub.tree.edges), self.w.restricted(F))
        return self._spaces[F]

    def project(self, F2, F1) -> np.ndarray:
        F1, F2 = frozenset(F1), frozenset(F2)
        if not F1 <= F2:
            raise ValueError("projection needs F1 inside F2")
        tree = self.theta.tree
        S1, S2 = self.space(F1), self.space(F2)
        anchor = min(F1)
        out = np.empty(S2.space.n, dtype=np.intp)
        for c, members in enumerate(S2.members):
            t, i = members[0]
            if t in F1:
                out[c] = S1.index[t][i]
                continue
            for e in tree.path(anchor, t):
                if tree.omega[e] not in F1:
                    out[c] = S1.index[tree.alpha[e]][self.bp[e]]
                    break
        return out


def star_inverse_system(theta: TreeSystem, bp: BasePointing | None = None, w: WeightSchedule | None = None) -> StarInverseSystem:
    return StarInverseSystem(theta, bp, w)
