"""Extended spaces, the associated inverse system and its threads.

Each oriented edge ``e`` gets a space ``Delta_e`` attached to ``K_{alpha(e)}``
along the peripheral ``Sigma_e``.  The extended constituent ``hat[t]`` is
``K_t`` with all its ``Delta_e`` glued on; its first ``K_t.n`` points are
``K_t`` itself and the base of ``Delta_e`` is ``Sigma_e`` (same indices).
A map ``delta_e`` sends ``hat[omega(e)]`` minus the open part of
``Delta_{bar e}`` into ``Delta_e``; it is stored as an index array over
``hat[omega(e)]`` with ``-1`` on the excluded points.

Spaces over finite subtrees ``F`` glue the extended constituents and keep
``Delta_e`` only for edges leaving ``F``.  Bonding maps retract one vertex at
a time through ``delta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from .metric import FiniteCompactum, UnionFind, validate_metric
from .report import Report
from .system import TreeSystem

KINDS = ("trivial", "conical", "standard", "custom")


class FinenessError(ValueError):
    pass


@dataclass
class ExtendedFamily:
    theta: TreeSystem
    kind: str
    hat: dict[int, FiniteCompactum]
    delta_points: dict[int, np.ndarray]  # e -> indices of Delta_e in hat[alpha(e)], base first
    delta: dict[int, np.ndarray] = field(default_factory=dict)  # e -> map hat[omega(e)] -> hat[alpha(e)]
    end_point: dict[int, int] = field(default_factory=dict)  # stub -> surrogate limit point in Delta
    levels: int = 0

    def owner(self, t: int) -> np.ndarray:
        """Edge owning each non-base point of hat[t] (-1 for points of K_t)."""
        own = np.full(self.hat[t].n, -1, dtype=np.int64)
        n0 = self.theta.constituents[t].n
        for e in self.theta.tree.out_edges(t):
            pts = self.delta_points[e]
            own[pts[pts >= n0]] = e
        return own

    def foreign(self, e: int) -> list[int]:
        """Edges out of omega(e) other than bar(e)."""
        tree = self.theta.tree
        return [f for f in tree.out_edges(tree.omega[e]) if f != tree.bar[e]]


# construction


def cone_metric(base: np.ndarray, levels: int, height: float) -> np.ndarray:
    """Truncated linear cone over a finite metric space.

    Points are ``(s, k/levels)`` for ``k < levels`` (k = 0 is the base, in the
    order of ``base``) followed by the apex.  Distance between ``(s, u)`` and
    ``(s', u')`` is ``|u - u'| h + (1 - max(u, u')) d(s, s')``.
    """
    m = base.shape[0]
    u = np.concatenate([np.repeat(np.arange(levels) / levels, m), [1.0]])
    s = np.concatenate([np.tile(np.arange(m), levels), [0]])
    ds = base[np.ix_(s, s)]
    d = np.abs(u[:, None] - u[None, :]) * height + (1 - np.maximum(u[:, None], u[None, :])) * ds
    np.fill_diagonal(d, 0.0)
    return d


def glue_pieces(n: int, pieces) -> np.ndarray:
    """Shortest-path metric on ``n`` points covered by metric pieces.

    ``pieces`` is a list of ``(indices, matrix)``; shared indices glue.
    """
    big = np.full((n, n), np.inf)
    for idx, mat in pieces:
        idx = np.asarray(idx, dtype=np.intp)
        sub = big[np.ix_(idx, idx)]
        big[np.ix_(idx, idx)] = np.minimum(sub, mat)
    np.fill_diagonal(big, 0.0)
    g = csgraph_from_dense(big, null_value=np.inf)
    d = shortest_path(g, method="D", directed=False)
    return d


def _nearest(d_row_block: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """Index into ``cands`` of the nearest candidate per row (lowest on ties)."""
    return cands[np.argmin(d_row_block, axis=1)]


def build_extended(theta: TreeSystem, kind: str = "trivial", levels: int = 4, retractions=None, spaces=None) -> ExtendedFamily:
    """Trivial or conical extended family with its delta maps.

    ``retractions`` (trivial kind) maps edge ``e`` to an array over
    ``K_{alpha(e)}`` with values in ``Sigma_e``; the delta map of ``bar(e)``
    is then ``phi_e`` after the retraction.  Standard and custom families are
    supplied ready-made (``spaces``), e.g. by the gallery.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if kind in ("standard", "custom"):
        if spaces is None:
            raise ValueError(f"{kind} family needs supplied Delta spaces and delta maps")
        return spaces
    tree = theta.tree
    if kind == "trivial":
        hat = dict(theta.constituents)
        dpts = {e: theta.peripherals[e].copy() for e in tree.edges}
        E = ExtendedFamily(theta, "trivial", hat, dpts, levels=0)
        E.end_point = {z: int(theta.peripherals[z][0]) for z in tree.stubs}
        for e in tree.internal_edges():
            s = tree.omega[e]
            b = tree.bar[e]
            K = theta.constituents[s]
            sig = theta.peripherals[b]
            if retractions is not None and b in retractions:
                r = np.asarray(retractions[b], dtype=np.intp)
            else:
                r = _nearest(K.dist[:, sig], sig)
            phi = theta.phi(b)
            E.delta[e] = np.array([phi[int(x)] for x in r], dtype=np.intp)
        return E
    hat, dpts, cone_idx, apex = {}, {}, {}, {}
    for t in tree.vertices:
        K = theta.constituents[t]
        n = K.n
        pieces = [(np.arange(n), K.dist)]
        for e in tree.out_edges(t):
            sig = theta.peripherals[e]
            m = len(sig)
            base = K.dist[np.ix_(sig, sig)]
            h = base.max() / 2 if m > 1 and base.max() > 0 else max(K.diameter, 1.0) / 4
            cm = cone_metric(base, levels, h)
            check = validate_metric(FiniteCompactum(cm))
            if not check.ok:
                raise ValueError(f"cone over Sigma_{e} is not a metric: {check.kinds()}")
            new = np.arange(n, n + m * (levels - 1) + 1)
            idx = np.concatenate([sig, new])
            n += len(new)
            pieces.append((idx, cm))
            dpts[e] = idx
            cone_idx[e] = idx[:-1].reshape(levels, m).T  # [position in sigma, level]
            apex[e] = int(idx[-1])
        d = glue_pieces(n, pieces)
        ids = list(K.ids) + [("cone", e, j) for e in tree.out_edges(t) for j in range(len(dpts[e]) - len(theta.peripherals[e]))]
        hat[t] = FiniteCompactum(d, ids=ids, resolution=K.resolution)
    E = ExtendedFamily(theta, "conical", hat, dpts, levels=levels)
    E.end_point = {z: apex[z] for z in tree.stubs}
    E.delta = build_delta_conical(theta, E, cone_idx, apex)
    return E


def build_delta_conical(theta: TreeSystem, E: ExtendedFamily, cone_idx=None, apex=None) -> dict[int, np.ndarray]:
    """Delta maps into cones: base by phi, foreign peripherals collapsed.

    A point of ``K_{omega(e)}`` off the peripheral goes to the cone level
    given by its normalized distance to the peripheral (at least level one),
    above the image of its nearest peripheral point.  Every foreign
    ``Delta_{e'}`` goes to the image of its point nearest to the peripheral.
    """
    tree = theta.tree
    L = E.levels
    if cone_idx is None:
        cone_idx, apex = {}, {}
        for e in tree.edges:
            m = len(theta.peripherals[e])
            idx = E.delta_points[e]
            cone_idx[e] = idx[:-1].reshape(L, m).T
            apex[e] = int(idx[-1])
    out = {}
    for e in tree.internal_edges():
        s, b = tree.omega[e], tree.bar[e]
        K = theta.constituents[s]
        sig = theta.peripherals[b]
        pos_in_target = {int(x): k for k, x in enumerate(theta.peripherals[e])}
        phi = theta.phi(b)
        dist_to = K.dist[:, sig]
        near = np.argmin(dist_to, axis=1)
        dmin = dist_to[np.arange(K.n), near]
        D = dmin.max()

        def image(x):
            if dmin[x] == 0:
                return int(phi[int(sig[near[x]])])
            k = int(np.clip(np.rint(dmin[x] / D * L), 1, L)) if D > 0 else L
            if k >= L:
                return apex[e]
            p = pos_in_target[phi[int(sig[near[x]])]]
            return int(cone_idx[e][p, k])

        m = np.full(E.hat[s].n, -1, dtype=np.intp)
        for x in range(K.n):
            m[x] = image(x)
        for f in E.foreign(e):
            pf = theta.peripherals[f]
            rep = int(pf[np.argmin(dmin[pf])])
            m[E.delta_points[f]] = image(rep)
        out[e] = m
    return out


# predicates on families


def check_boundary(E: ExtendedFamily) -> Report:
    rep = Report("delta-boundary")
    theta, tree = E.theta, E.theta.tree
    for e in tree.internal_edges():
        b = tree.bar[e]
        for x, y in theta.phi(b).items():
            if E.delta[e][x] != y:
                rep.add("boundary", f"delta_{e} disagrees with phi on {x}", (e, x))
                break
        allowed = set(E.delta_points[e].tolist())
        dom = _domain(E, e)
        vals = E.delta[e][dom]
        if not set(vals.tolist()) <= allowed:
            rep.add("range", f"delta_{e} leaves Delta_{e}", e)
    return rep


def _domain(E: ExtendedFamily, e: int) -> np.ndarray:
    """Indices of hat[omega(e)] forming the domain of delta_e."""
    tree = E.theta.tree
    s = tree.omega[e]
    n0 = E.theta.constituents[s].n
    excl = E.delta_points[tree.bar[e]]
    mask = np.ones(E.hat[s].n, dtype=bool)
    mask[excl[excl >= n0]] = False
    return np.flatnonzero(mask)


def check_contracting(E: ExtendedFamily):
    """Max Lipschitz ratio of delta_e on foreign Delta's, as ``(c, C)`` or None."""
    tree = E.theta.tree
    c = 0.0
    for e in tree.internal_edges():
        dt = E.hat[tree.alpha[e]].dist
        ds = E.hat[tree.omega[e]].dist
        for f in E.foreign(e):
            pts = E.delta_points[f]
            img = E.delta[e][pts]
            src = ds[np.ix_(pts, pts)]
            dst = dt[np.ix_(img, img)]
            mask = src > 0
            if mask.any():
                c = max(c, float((dst[mask] / src[mask]).max()))
    C = max(h.diameter for h in E.hat.values())
    return (c, C) if c < 1 else None


def is_zero_contracting(E: ExtendedFamily) -> bool:
    tree = E.theta.tree
    for e in tree.internal_edges():
        for f in E.foreign(e):
            if len(np.unique(E.delta[e][E.delta_points[f]])) != 1:
                return False
    return True


def _valid_path(tree, gamma):
    if len(gamma) < 2:
        return False
    for a, b in zip(gamma, gamma[1:]):
        if tree.is_stub(a) or tree.omega[a] != tree.alpha[b] or tree.bar[a] == b:
            return False
    return True


def delta_gamma(E: ExtendedFamily, gamma) -> np.ndarray:
    """Composite map Delta_{e_m} -> Delta_{e_1} along an edge path.

    Returns an array aligned with ``delta_points[e_m]`` holding indices of
    ``hat[alpha(e_1)]``.
    """
    tree = E.theta.tree
    gamma = list(gamma)
    if not _valid_path(tree, gamma):
        raise ValueError(f"invalid path {gamma}")
    pts = E.delta_points[gamma[-1]]
    for e in reversed(gamma[:-1]):
        pts = E.delta[e][pts]
    return pts


@dataclass
class FineCertificate:
    max_diam: dict[int, float]  # path length -> max image diameter
    per_edge: dict[int, dict[int, float]]
    contracting: tuple | None
    zero_contracting: bool
    certified: bool
    reason: str

    def to_json(self):
        return {
            "max_diam": self.max_diam,
            "contracting": self.contracting,
            "zero_contracting": self.zero_contracting,
            "certified": self.certified,
            "reason": self.reason,
        }


def iter_paths(tree, start: int, max_len: int):
    stack = [[start]]
    while stack:
        p = stack.pop()
        if len(p) >= 2:
            yield p
        last = p[-1]
        if len(p) >= max_len or tree.is_stub(last):
            continue
        for f in tree.out_edges(tree.omega[last]):
            if f != tree.bar[last]:
                stack.append(p + [f])


def check_fine(E: ExtendedFamily, depth: int = 4, tol: float = 1e-12) -> FineCertificate:
    tree = E.theta.tree
    per_edge: dict[int, dict[int, float]] = {}
    overall: dict[int, float] = {}
    for e in tree.internal_edges():
        dist = E.hat[tree.alpha[e]].dist
        prof: dict[int, float] = {}
        for gamma in iter_paths(tree, e, depth):
            img = np.unique(delta_gamma(E, gamma))
            dm = float(dist[np.ix_(img, img)].max())
            L = len(gamma)
            prof[L] = max(prof.get(L, 0.0), dm)
            overall[L] = max(overall.get(L, 0.0), dm)
        per_edge[e] = prof
    cc = check_contracting(E)
    zero = is_zero_contracting(E)
    if zero:
        certified, reason = True, "0-contracting"
    elif cc is not None and all(v <= cc[1] * cc[0] ** (L - 1) + tol for L, v in overall.items()):
        certified, reason = True, f"contracting c={cc[0]:.4g}"
    elif overall and max(overall.values()) <= tol:
        certified, reason = True, "images already points"
    else:
        certified, reason = False, "no decay certificate"
    return FineCertificate(dict(sorted(overall.items())), per_edge, cc, zero, certified, reason)


# spaces over subtrees and bonding maps


class HatSpace:
    """The extended partial union over a finite subtree, as a point set.

    Points are keys ``(t, j)`` with ``j`` an index of ``hat[t]``; points of
    ``K_F`` glued across internal edges share one canonical key.
    """

    def __init__(self, E: ExtendedFamily, F):
        self.E = E
        self.F = frozenset(F)
        theta, tree = E.theta, E.theta.tree
        if not tree.is_subtree(self.F):
            raise ValueError("F is not a subtree")
        members = []
        for t in sorted(self.F):
            own = E.owner(t)
            for j in range(E.hat[t].n):
                e = own[j]
                if e >= 0 and not tree.is_stub(e) and tree.omega[e] in self.F:
                    continue
                members.append((t, j))
        pos = {k: i for i, k in enumerate(members)}
        uf = UnionFind(len(members))
        for e in tree.geometric_edges():
            a, o = tree.alpha[e], tree.omega[e]
            if a in self.F and o in self.F:
                for x, y in theta.phi(e).items():
                    uf.union(pos[(a, x)], pos[(o, y)])
        groups = uf.classes(len(members))
        self.keys = [members[g[0]] for g in groups]
        self.index = {}
        for ci, g in enumerate(groups):
            for m in g:
                self.index[members[m]] = ci
        self.groups = [[members[m] for m in g] for g in groups]

    @property
    def n(self):
        return len(self.keys)

    def metric(self) -> FiniteCompactum:
        pieces = []
        for t in sorted(self.F):
            loc = [j for j in range(self.E.hat[t].n) if (t, j) in self.index]
            idx = [self.index[(t, j)] for j in loc]
            pieces.append((idx, self.E.hat[t].dist[np.ix_(loc, loc)]))
        return FiniteCompactum(glue_pieces(self.n, pieces), ids=[tuple(k) for k in self.keys])

    def origin_vertex(self, i):
        return self.keys[i][0]


def pull(E: ExtendedFamily, F, t: int, j: int):
    """Image in the space over F of point j of hat[t], t possibly outside F."""
    tree = E.theta.tree
    F = frozenset(F)
    if t in F:
        return t, j
    anchor = min(F)
    path = tree.path(anchor, t)
    k = next(i for i, e in enumerate(path) if tree.omega[e] not in F)
    for e in reversed(path[k:]):
        j = int(E.delta[e][j])
        if j < 0:
            raise ValueError("point outside the domain of a delta map")
        t = tree.alpha[e]
    return t, j


def bond(E: ExtendedFamily, big: HatSpace, small: HatSpace, order=None) -> np.ndarray:
    """Bonding map from the space over ``big.F`` to the one over ``small.F``.

    ``order`` lists the vertices of big.F minus small.F in the order they are
    added; the map retracts them in reverse.  Defaults to breadth-first from
    the smaller subtree.
    """
    tree = E.theta.tree
    if not small.F <= big.F:
        raise ValueError("bonding map needs nested subtrees")
    extra = big.F - small.F
    if order is None:
        order, cur = [], set(small.F)
        while len(order) < len(extra):
            for v in sorted(extra - set(order)):
                if any(w in cur for w in tree.neighbors(v)):
                    order.append(v)
                    cur.add(v)
                    break
    order = list(order)
    if sorted(order) != sorted(extra):
        raise ValueError("order must list the added vertices")
    current = {v for v in small.F}
    attach = {}
    for v in order:
        e = next((f for f in tree.out_edges(v) if not tree.is_stub(f) and tree.omega[f] in current), None)
        if e is None:
            raise ValueError("order does not grow a subtree")
        attach[v] = tree.bar[e]  # edge from the current subtree to v
        current.add(v)
    out = np.empty(big.n, dtype=np.intp)
    for i, (t, j) in enumerate(big.keys):
        while t not in small.F:
            e = attach[t]
            j = int(E.delta[e][j])
            t = tree.alpha[e]
        out[i] = small.index[(t, j)]
    return out


class InverseBundle:
    """Spaces over a chain of subtrees with the bonding maps between them."""

    def __init__(self, E: ExtendedFamily, chain):
        chain = [frozenset(F) for F in chain]
        for a, b in zip(chain, chain[1:]):
            if not a < b:
                raise ValueError("subtree chain must be strictly increasing")
        self.E = E
        self.chain = chain
        self._spaces = {}
        self.spaces = [self.space(F) for F in chain]
        self.bonds = [bond(E, self.spaces[i + 1], self.spaces[i]) for i in range(len(chain) - 1)]
        self.certificate: FineCertificate | None = None

    def space(self, F) -> HatSpace:
        F = frozenset(F)
        if F not in self._spaces:
            self._spaces[F] = HatSpace(self.E, F)
        return self._spaces[F]

    def bonding(self, F_big, F_small, order=None) -> np.ndarray:
        return bond(self.E, self.space(F_big), self.space(F_small), order)


def build_bundle(theta: TreeSystem, E: ExtendedFamily, chain) -> InverseBundle:
    return InverseBundle(E, chain)


def balls(tree, radii, root=None):
    """Chain of combinatorial balls around a root vertex."""
    _, _, depth = tree.bfs(root)
    return [frozenset(v for v, d in depth.items() if d <= r) for r in radii]


def check_functoriality(bundle: InverseBundle, triples) -> Report:
    rep = Report("functoriality")
    count = 0
    for F1, F2, F3 in triples:
        direct = bundle.bonding(F3, F1)
        comp = bundle.bonding(F2, F1)[bundle.bonding(F3, F2)]
        count += 1
        if not np.array_equal(direct, comp):
            rep.add("functoriality", f"composition differs for sizes {len(F1)},{len(F2)},{len(F3)}")
    rep.data["triples"] = count
    return rep


# threads


@dataclass
class Thread:
    values: tuple[int, ...]  # index in each space of the chain
    kind: str  # "point" or "end"
    witness: object  # realization class or stub edge
    stabilizes_at: int | None = None


@dataclass
class ThreadReport:
    threads: list[Thread]
    beta: dict  # thread position -> realization class or ("end", stub)
    bijective: bool
    compatible: bool
    stable: bool
    report: Report


def evaluate_threads(bundle: InverseBundle, R, certificate: FineCertificate | None = None) -> ThreadReport:
    """Threads of all realization points and end markers, and the map beta.

    The chain must end with the whole truncated tree.  End threads start at
    the family's surrogate limit point of the stub's Delta.
    """
    E = bundle.E
    theta, tree = E.theta, E.theta.tree
    cert = certificate or bundle.certificate or check_fine(E)
    if not cert.certified:
        raise FinenessError("fineness is not certified; end threads are ill-defined")
    if bundle.chain[-1] != frozenset(tree.vertices):
        raise ValueError("the chain must end with the whole truncated tree")
    rep = Report("threads")
    threads: list[Thread] = []

    def thread_of(t, j):
        vals = []
        for F, S in zip(bundle.chain, bundle.spaces):
            u, k = pull(E, F, t, j)
            vals.append(S.index[(u, k)])
        return tuple(vals)

    for c, members in enumerate(R.classes):
        t, i = members[0]
        vals = thread_of(t, i)
        first = next(k for k, F in enumerate(bundle.chain) if any(m[0] in F for m in members))
        threads.append(Thread(vals, "point", c, first))
    for z in sorted(tree.stubs):
        threads.append(Thread(thread_of(tree.alpha[z], E.end_point[z]), "end", z))
    compatible = True
    for th in threads:
        for k, b in enumerate(bundle.bonds):
            if b[th.values[k + 1]] != th.values[k]:
                compatible = False
                rep.add("compatibility", f"thread of {th.kind} {th.witness} breaks at level {k}", th.witness)
                break
    stable = True
    for th in threads:
        if th.kind != "point":
            continue
        t, i = R.classes[th.witness][0]
        for k in range(th.stabilizes_at, len(bundle.chain)):
            if not _same_class(bundle.spaces[k], R.classes[th.witness], th.values[k]):
                stable = False
                rep.add("stabilization", f"point {th.witness} moves after its vertex appears", th.witness)
                break
    seen = {}
    for pos, th in enumerate(threads):
        if th.values in seen:
            rep.add("beta-injective", f"threads {seen[th.values]} and {pos} coincide", (seen[th.values], pos))
        else:
            seen[th.values] = pos
    beta = {pos: (th.witness if th.kind == "point" else ("end", th.witness)) for pos, th in enumerate(threads)}
    bij = "beta-injective" not in rep.kinds()
    rep.data.update({"threads": len(threads), "points": R.space.n, "ends": len(tree.stubs)})
    return ThreadReport(threads, beta, bij, compatible, stable, rep)


def _same_class(space: HatSpace, members, value):
    return any(space.index.get(m) == value for m in members)


# hypotheses of the dimension estimate


def validate_dim_hypotheses(theta: TreeSystem, retractions) -> Report:
    """Retraction property and contraction constants on foreign peripherals."""
    rep = Report("dim-hypotheses")
    tree = theta.tree
    c = 0.0
    for e in tree.edges:
        if e not in retractions:
            rep.add("missing", f"no retraction for edge {e}", e)
            continue
        r = np.asarray(retractions[e], dtype=np.intp)
        t = tree.alpha[e]
        K = theta.constituents[t]
        sig = theta.peripherals[e]
        if r.shape != (K.n,) or not set(r.tolist()) <= set(sig.tolist()):
            rep.add("not-retraction", f"r_{e} does not land in its peripheral", e)
            continue
        if not np.array_equal(r[sig], sig):
            rep.add("not-retraction", f"r_{e} moves points of its peripheral", e)
            continue
        for f in tree.out_edges(t):
            if f == e:
                continue
            pf = theta.peripherals[f]
            src = K.dist[np.ix_(pf, pf)]
            dst = K.dist[np.ix_(r[pf], r[pf])]
            mask = src > 0
            if mask.any():
                c = max(c, float((dst[mask] / src[mask]).max()))
    C = max(k.diameter for k in theta.constituents.values())
    rep.data.update({"c": c, "C": C})
    if rep.ok and c >= 1:
        rep.add("not-contracting", f"contraction constant {c:.4g} is not below 1")
    return rep


# weak Jakobsche sequences


@dataclass
class Disk:
    interior: np.ndarray
    boundary: np.ndarray

    @property
    def points(self):
        return np.concatenate([self.interior, self.boundary])


@dataclass
class JakobscheSequence:
    spaces: list[FiniteCompactum]
    disks: list[dict[object, list[Disk]]]
    maps: list[np.ndarray]  # maps[i]: spaces[i+1] -> spaces[i]
    base_label: object
    alphabet: list
    origin: list[list]  # per level, per point: label of the piece it came from (None for disk interiors)
    resolution: float = 0.0
    dense: bool = True

    def composite(self, i: int, j: int) -> np.ndarray:
        """pi_{i,j}: spaces[j] -> spaces[i]."""
        m = np.arange(self.spaces[j].n)
        for k in range(j - 1, i - 1, -1):
            m = self.maps[k][m]
        return m

    def to_json(self):
        return {
            "sequence": [
                {
                    "space": X.to_json(),
                    "disks": {str(M): [{"interior": d.interior.tolist(), "boundary": d.boundary.tolist()} for d in ds] for M, ds in D.items()},
                    "origin": o,
                }
                for X, D, o in zip(self.spaces, self.disks, self.origin)
            ],
            "maps": [m.tolist() for m in self.maps],
            "base_label": self.base_label,
            "alphabet": list(self.alphabet),
            "resolution": self.resolution,
            "dense": self.dense,
        }


def validate_weak_jakobsche(seq: JakobscheSequence, tol: float = 1e-9) -> Report:
    rep = Report("weak-jakobsche")
    n = len(seq.spaces)
    all_disks = [[(M, d) for M in sorted(D, key=repr) for d in D[M]] for D in seq.disks]
    # (1)
    for i, ds in enumerate(all_disks):
        for (_, a), (_, b) in combinations(ds, 2):
            if np.intersect1d(a.points, b.points).size:
                rep.add("1", f"disks at level {i} intersect", i)
                break
    # (2)
    for i in range(n - 1):
        X, Y, pi = seq.spaces[i], seq.spaces[i + 1], seq.maps[i]
        interior = np.zeros(X.n, dtype=bool)
        for _, d in all_disks[i]:
            interior[d.interior] = True
        outside = np.flatnonzero(~interior)
        pre = np.flatnonzero(~interior[pi])
        img = pi[pre]
        if len(np.unique(img)) != len(pre) or set(img.tolist()) != set(outside.tolist()):
            rep.add("2", f"pi_{i} is not a bijection off the disks", i)
            continue
        dis = np.abs(Y.dist[np.ix_(pre, pre)] - X.dist[np.ix_(img, img)]).max() if len(pre) else 0.0
        if dis > tol:
            rep.add("2", f"pi_{i} distorts distances off the disks by {dis:.3g}", i)
    # (3a)
    if seq.base_label not in seq.alphabet:
        rep.add("3a", f"first space label {seq.base_label!r} is not in the alphabet")
    # (3b)
    for i in range(n - 1):
        pi = seq.maps[i]
        for M, d in all_disks[i]:
            if M not in seq.alphabet:
                rep.add("3b", f"disk label {M!r} not in the alphabet", (i, M))
                continue
            pre = np.flatnonzero(np.isin(pi, d.interior))
            labs = {seq.origin[i + 1][p] for p in pre} - {None}
            if labs != {M}:
                rep.add("3b", f"preimage of a disk labeled {M!r} at level {i} carries {sorted(map(repr, labs))}", (i, M))
            back = np.flatnonzero(np.isin(pi, d.boundary))
            if len(back) != len(d.boundary):
                rep.add("3b", f"boundary of a disk labeled {M!r} at level {i} is not preserved", (i, M))
    # (4)
    for i in range(n):
        bnd = [d.boundary for _, d in all_disks[i]]
        if not bnd:
            continue
        bnd = np.unique(np.concatenate(bnd))
        for j in range(i + 1, n):
            comp = seq.composite(i, j)
            for _, d in all_disks[j]:
                if np.intersect1d(comp[d.points], bnd).size:
                    rep.add("4", f"a disk of level {j} lands on a disk boundary of level {i}", (i, j))
                    break
    # (5)
    nul = {}
    for i in range(n):
        X = seq.spaces[i]
        m = []
        for j in range(i, n):
            comp = seq.composite(i, j)
            ds = [X.subset_diameter(np.unique(comp[d.points])) for _, d in all_disks[j]]
            m.append(max(ds) if ds else None)
        nul[i] = m
        vals = [v for v in m if v is not None]
        if len(vals) >= 2 and (any(b > a + tol for a, b in zip(vals, vals[1:])) or not max(vals[1:]) < vals[0]):
            rep.add("5", f"images of later disks in level {i} do not shrink", i)
    rep.data["nullity"] = nul
    # (6)
    if not seq.dense:
        rep.add("6", "sequence is not declared dense")
    else:
        for i in range(n):
            X = seq.spaces[i]
            for M in seq.alphabet:
                pts = []
                for j in range(i, n):
                    comp = seq.composite(i, j)
                    pts.extend(comp[d.points].tolist() for d in seq.disks[j].get(M, []))
                flat = np.unique([p for ps in pts for p in ps]).astype(np.intp)
                if flat.size == 0:
                    rep.add("6", f"label {M!r} has no disks from level {i} on", (i, M))
                    continue
                gap = float(X.dist[:, flat].min(axis=1).max())
                if gap > seq.resolution + tol:
                    rep.add("6", f"level {i}: disks of label {M!r} leave a gap {gap:.3g}", (i, M))
    return rep
