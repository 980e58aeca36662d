"""Splittings of a finite compactum, tree decompositions and dual trees.

A splitting is stored as three boolean masks over the ambient points:
the separator ``A`` and the two closed halfspaces ``Y`` and ``Z``.  Open
halfspaces are ``Y \\ A`` and ``Z \\ A``.  Halfspaces are addressed by
``(index, side)`` with side 0 for ``Y`` and 1 for ``Z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .metric import FiniteCompactum, default_ladder, distortion
from .realize import Realization, WeightSchedule, realize_limit
from .report import Report
from .system import TreeSystem
from .tree import Tree


class DecompositionError(ValueError):
    pass


@dataclass
class Splitting:
    A: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    name: object = None

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=bool)
        self.Y = np.asarray(self.Y, dtype=bool)
        self.Z = np.asarray(self.Z, dtype=bool)

    @classmethod
    def from_indices(cls, n, A, Y, Z, name=None):
        masks = []
        for idx in (A, Y, Z):
            m = np.zeros(n, dtype=bool)
            m[np.asarray(list(idx), dtype=np.intp)] = True
            masks.append(m)
        return cls(*masks, name=name)

    @classmethod
    def from_halfspace(cls, A, H, name=None):
        """Splitting with closed halfspace ``H`` and the closure of its complement."""
        A, H = np.asarray(A, dtype=bool), np.asarray(H, dtype=bool)
        return cls(A, H, ~H | A, name=name)

    def half(self, side: int) -> np.ndarray:
        return self.Y if side == 0 else self.Z

    def open_half(self, side: int) -> np.ndarray:
        return self.half(side) & ~self.A


@dataclass
class Decomposition:
    ambient: FiniteCompactum
    splittings: list[Splitting] = field(default_factory=list)

    def __len__(self):
        return len(self.splittings)

    def to_json(self):
        ids = self.ambient.ids
        pick = lambda m: [_jid(ids[i]) for i in np.flatnonzero(m)]  # noqa: E731
        return {
            "ambient": self.ambient.n,
            "splittings": [{"A": pick(s.A), "Y": pick(s.Y), "Z": pick(s.Z)} for s in self.splittings],
        }

    @classmethod
    def from_json(cls, data, ambient: FiniteCompactum):
        out = []
        for s in data["splittings"]:
            idx = [[ambient.index_of(_pid(p)) for p in s[k]] for k in ("A", "Y", "Z")]
            out.append(Splitting.from_indices(ambient.n, *idx))
        return cls(ambient, out)


def _jid(p):
    return list(p) if isinstance(p, tuple) else p


def _pid(p):
    return tuple(_pid(q) for q in p) if isinstance(p, list) else p


# predicates


def validate_splitting(K: FiniteCompactum, s: Splitting) -> Report:
    rep = Report("splitting")
    if not (len(s.A) == len(s.Y) == len(s.Z) == K.n):
        rep.add("ambient", "masks do not match the ambient size")
        return rep
    if not (s.Y | s.Z).all():
        rep.add("cover", f"{int((~(s.Y | s.Z)).sum())} points in neither halfspace")
    if not np.array_equal(s.Y & s.Z, s.A):
        rep.add("intersection", "Y and Z do not meet exactly in A")
    if not s.A.any():
        rep.add("empty-separator", "separator is empty")
    if np.array_equal(s.A, s.Y) or np.array_equal(s.A, s.Z):
        rep.add("improper", "separator equals a halfspace")
    oy, oz = s.open_half(0), s.open_half(1)
    gap = float(K.dist[np.ix_(oy, oz)].min()) if oy.any() and oz.any() else float("inf")
    rep.data["open_gap"] = gap
    rep.data["separates"] = gap > 0
    return rep


def noncross(s1: Splitting, s2: Splitting) -> bool:
    """True iff some halfspace of s1 misses some halfspace of s2."""
    for a in (0, 1):
        for b in (0, 1):
            if not (s1.half(a) & s2.half(b)).any():
                # consequences: disjoint separators, H1 inside the open complement of H2
                assert not (s1.A & s2.A).any()
                assert not (s1.half(a) & ~s2.open_half(1 - b)).any()
                return True
    return False


def disjoint_pair(s1: Splitting, s2: Splitting):
    """The sides (a, b) with s1.half(a) and s2.half(b) disjoint, or None."""
    for a in (0, 1):
        for b in (0, 1):
            if not (s1.half(a) & s2.half(b)).any():
                return a, b
    return None


def check_noncrossing(C: Decomposition) -> Report:
    rep = Report("noncrossing")
    for i, j in combinations(range(len(C)), 2):
        if not noncross(C.splittings[i], C.splittings[j]):
            rep.add("cross", f"splittings {i} and {j} cross", (i, j))
    rep.data["pairs"] = len(C) * (len(C) - 1) // 2
    return rep


def separates(C: Decomposition, i1: int, i2: int, i3: int) -> bool:
    s1, s2, s3 = (C.splittings[i] for i in (i1, i2, i3))
    for side in (0, 1):
        if (s1.A <= s2.open_half(side)).all() and (s3.A <= s2.open_half(1 - side)).all():
            return True
    return False


def is_discrete(C: Decomposition) -> Report:
    """Max number of separators between two separators (finite at desk scale)."""
    rep = Report("discrete")
    worst, m = 0, len(C)
    for i, k in combinations(range(m), 2):
        cnt = sum(1 for j in range(m) if j not in (i, k) and separates(C, i, j, k))
        worst = max(worst, cnt)
    rep.data["max_separating"] = worst
    return rep


def is_fine(C: Decomposition, ladder=None) -> Report:
    """Profile eps -> number of splittings with both halfspaces wider than eps."""
    rep = Report("fine")
    K = C.ambient
    if ladder is None:
        ladder = default_ladder(K.diameter if K.diameter > 0 else 1.0)
    widths = [min(K.subset_diameter(s.Y), K.subset_diameter(s.Z)) for s in C.splittings]
    rep.data["ladder"] = list(map(float, ladder))
    rep.data["counts"] = [int(sum(w > eps for w in widths)) for eps in ladder]
    return rep


# domains and the dual tree


@dataclass
class Domain:
    points: np.ndarray  # boolean mask
    adjacent: list[tuple[int, int]]  # halfspaces (index, side) pointing into the domain


def _lambda(C: Decomposition, i: int, side: int) -> list[tuple[int, int]]:
    """Separators adjacent to A_i inside H = side of i, with the side facing A_i."""
    s = C.splittings[i]
    inside = []
    for j, t in enumerate(C.splittings):
        if j == i:
            continue
        if (t.A <= s.open_half(side)).all():
            facing = 0 if (s.A <= t.open_half(0)).all() else 1
            inside.append((j, facing))
    out = []
    for j, facing in inside:
        if not any(separates(C, i, k, j) for k, _ in inside if k != j):
            out.append((j, facing))
    return out


def domain(C: Decomposition, i: int, side: int) -> Domain:
    s = C.splittings[i]
    lam = _lambda(C, i, side)
    pts = s.half(side).copy()
    for j, facing in lam:
        pts &= C.splittings[j].half(facing)
    if not (s.A <= pts).all():
        raise DecompositionError(f"domain of ({i}, {side}) misses its separator")
    adjacent = [(i, side)] + lam
    for j, t in enumerate(C.splittings):
        if j != i and all(j != k for k, _ in lam) and (t.A & pts).any():
            raise DecompositionError(f"domain of ({i}, {side}) meets non-adjacent separator {j}")
    return Domain(pts, adjacent)


@dataclass
class DualTree:
    tree: Tree
    domains: dict[int, Domain]
    edge_of: dict[int, tuple[int, int]]  # edge id -> (splitting index, side)

    def to_dot(self):
        return self.tree.to_dot({v: int(d.points.sum()) for v, d in self.domains.items()})


def dual_tree(C: Decomposition) -> DualTree:
    """Dual tree with edge ``2i + side`` pointing into the domain on that side.

    An empty decomposition gives one vertex holding every point.
    """
    n = C.ambient.n
    if not len(C):
        whole = Domain(np.ones(n, dtype=bool), [])
        return DualTree(Tree([0], {}, {}, {}), {0: whole}, {})
    rep = check_noncrossing(C)
    if not rep.ok:
        raise DecompositionError(f"decomposition is not noncrossing: {rep.violations[0].detail}")
    found: dict[bytes, int] = {}
    domains: dict[int, Domain] = {}
    into = {}
    for i in range(len(C)):
        for side in (0, 1):
            d = domain(C, i, side)
            key = np.packbits(d.points).tobytes()
            if key not in found:
                found[key] = len(found)
                domains[found[key]] = d
            into[(i, side)] = found[key]
    # renumber domains by their smallest point for determinism
    order = sorted(domains, key=lambda v: int(np.flatnonzero(domains[v].points)[0]) if domains[v].points.any() else n)
    renum = {old: new for new, old in enumerate(order)}
    domains = {renum[v]: d for v, d in domains.items()}
    alpha, omega, bar, edge_of = {}, {}, {}, {}
    for (i, side), v in into.items():
        e = 2 * i + side
        omega[e] = renum[v]
        alpha[e] = renum[into[(i, 1 - side)]]
        bar[e] = 2 * i + 1 - side
        edge_of[e] = (i, side)
    try:
        tree = Tree(sorted(domains), alpha, omega, bar)
    except ValueError as exc:
        raise DecompositionError(f"dual graph is not a tree: {exc}") from exc
    for i, s in enumerate(C.splittings):
        holders = [v for v, d in domains.items() if (s.A <= d.points).all()]
        if len(holders) != 2:
            raise DecompositionError(f"separator {i} lies in {len(holders)} domains")
    return DualTree(tree, domains, edge_of)


# associated system and reconstruction


def associated_system(C: Decomposition, dt: DualTree | None = None, extra_stubs=None) -> TreeSystem:
    """Constituents are the domains, peripherals the separators, connectors identities.

    ``extra_stubs`` maps a stub edge id to ``(point mask, tail)``; the stub
    is attached to the domain holding those points.
    """
    K = C.ambient
    dt = dt or dual_tree(C)
    tree = dt.tree
    local, cons = {}, {}
    for v, d in dt.domains.items():
        idx = np.flatnonzero(d.points)
        local[v] = {int(p): k for k, p in enumerate(idx)}
        cons[v] = K.subspace(idx)
    per, con = {}, {}
    for e, (i, _) in dt.edge_of.items():
        A = np.flatnonzero(C.splittings[i].A)
        a, o = tree.alpha[e], tree.omega[e]
        per[e] = [local[a][int(p)] for p in A]
        con[e] = [local[o][int(p)] for p in A]
    alpha, omega, bar = dict(tree.alpha), dict(tree.omega), dict(tree.bar)
    tails, stubs = {}, []
    for z, (mask, tail) in sorted((extra_stubs or {}).items()):
        pts = np.flatnonzero(mask)
        owner = [v for v, d in dt.domains.items() if d.points[pts].all()]
        if not owner:
            raise DecompositionError(f"stub {z} lies in no single domain")
        v = owner[0]
        alpha[z], omega[z] = v, None
        stubs.append(z)
        per[z] = [local[v][int(p)] for p in pts]
        tails[z] = tail
    full = Tree(tree.vertices, alpha, omega, bar, stubs)
    theta = TreeSystem(full, cons, per, con, tails)
    prof = {}
    for v in tree.vertices:
        diams = [cons[v].subset_diameter(per[e]) for e in full.out_edges(v)]
        prof[v] = sorted(diams, reverse=True)
    theta.meta["separator_diameters"] = prof
    theta.meta["domain_points"] = {v: np.flatnonzero(d.points) for v, d in dt.domains.items()}
    return theta


def reconstruct_check(C: Decomposition) -> Report:
    """Realize the associated system with unit weights and compare with the ambient."""
    rep = Report("reconstruct")
    K = C.ambient
    theta = associated_system(C)
    fine = is_fine(C)
    rep.data["fineness"] = fine.data["counts"]
    R = realize_limit(theta, w=WeightSchedule.uniform(theta))
    pts = theta.meta["domain_points"]
    beta = np.full(R.space.n, -1, dtype=np.intp)
    for c, members in enumerate(R.classes):
        images = {int(pts[t][i]) for t, i in members}
        if len(images) != 1:
            rep.add("beta-ill-defined", f"class {c} maps to {sorted(images)}", c)
            continue
        beta[c] = images.pop()
    hit = np.bincount(beta[beta >= 0], minlength=K.n)
    if (hit > 1).any():
        rep.add("beta-injective", f"{int((hit > 1).sum())} ambient points hit twice")
    if (hit == 0).any():
        rep.add("beta-surjective", f"{int((hit == 0).sum())} ambient points missed")
    bij = rep.ok
    rep.data["bijective"] = bij
    if bij:
        corr = np.stack([np.arange(R.space.n), beta], axis=1)
        rep.data["distortion"] = distortion(R.space, K, corr)
    return rep


# compatibility with a tree system


def compatible(Ct: Decomposition, theta: TreeSystem, t: int) -> Report:
    """Every peripheral at t lies in an open halfspace of every separator,
    and inside a single domain."""
    rep = Report("compatible")
    tree = theta.tree
    for j, s in enumerate(Ct.splittings):
        for e in tree.out_edges(t):
            sig = np.zeros(Ct.ambient.n, dtype=bool)
            sig[theta.peripherals[e]] = True
            if (sig & s.A).any():
                rep.add("meets-separator", f"peripheral {e} meets separator {j}", (e, j))
            elif not ((sig <= s.open_half(0)).all() or (sig <= s.open_half(1)).all()):
                rep.add("crosses", f"peripheral {e} crosses splitting {j}", (e, j))
    if rep.ok and len(Ct):
        dt = dual_tree(Ct)
        for e in tree.out_edges(t):
            if not any(d.points[theta.peripherals[e]].all() for d in dt.domains.values()):
                rep.add("not-discrete", f"peripheral {e} is spread over several domains", e)
    return rep


def nested_family(theta: TreeSystem, t: int, x0: int, nested, resolution: float | None = None):
    """Decomposition of K_t from nested closed halfspaces around ``x0``.

    ``nested`` is a list of ``(A, H)`` masks with ``H`` shrinking.  Checks
    that every halfspace is saturated, that the nesting is strict, and that
    the last halfspace is a point up to ``resolution``.  Returns the
    decomposition and its compatibility report.
    """
    K = theta.constituents[t]
    res = K.resolution if resolution is None else resolution
    rep = Report("nested-family")
    splits = []
    prev = None
    for k, (A, H) in enumerate(nested):
        A, H = np.asarray(A, dtype=bool), np.asarray(H, dtype=bool)
        s = Splitting.from_halfspace(A, H, name=("nested", t, k))
        v = validate_splitting(K, s)
        for viol in v.violations:
            rep.add("splitting", f"level {k}: {viol.kind}", k)
        if not H[x0] or A[x0]:
            rep.add("center", f"level {k} does not hold x0 in its interior", k)
        for e in theta.tree.out_edges(t):
            sig = theta.peripherals[e]
            if A[sig].any():
                raise DecompositionError(f"peripheral {e} meets separator {k}")
            if H[sig].any() and not (H & ~A)[sig].all():
                rep.add("saturation", f"level {k} cuts peripheral {e}", (k, e))
        if prev is not None and not (H <= (prev & ~prev_A)).all():
            rep.add("nesting", f"level {k} is not inside the open level {k - 1}", k)
        prev, prev_A = H, A
        splits.append(s)
    if prev is not None and K.subset_diameter(prev) > res + 1e-12:
        rep.add("singleton", f"innermost halfspace has diameter {K.subset_diameter(prev):.3g} > {res:.3g}")
    C = Decomposition(K, splits)
    rep.merge(compatible(C, theta, t))
    return C, rep


# limit decomposition


@dataclass
class LimitDecomposition:
    decomposition: Decomposition
    sources: list  # ("edge", e) or ("local", t, j)
    pieces: dict[tuple[int, int], list[np.ndarray]]  # induced halfspace -> attached pieces
    local: dict[tuple[int, int], np.ndarray]  # induced halfspace -> image of H
    report: Report


def _mask(n, idx):
    m = np.zeros(n, dtype=bool)
    m[np.asarray(idx, dtype=np.intp)] = True
    return m


def c_lim(theta: TreeSystem, C: dict, R: Realization | None = None) -> LimitDecomposition:
    """Splittings of the realization induced by the C_t together with the
    splittings along the peripherals of the system.

    Checks pairwise noncrossing and the diameter estimate
    ``diam G(H) <= diam H + 2 max diam H'`` over the pieces H' that G adds.
    """
    tree = theta.tree
    if R is None:
        R = realize_limit(theta, w=WeightSchedule.uniform(theta))
    X = R.space
    n = X.n
    rep = Report("c-lim")
    for t, Ct in C.items():
        comp = compatible(Ct, theta, t)
        if not comp.ok:
            raise DecompositionError(f"C_{t} is not compatible: {comp.violations[0].detail}")

    def beyond(e):
        if tree.is_stub(e):
            return _mask(n, [R.end_markers[e]] + [R.point(tree.alpha[e], i) for i in theta.peripherals[e]])
        return _mask(n, np.concatenate([R.index[s] for s in tree.half_tree(e)]))

    splits, sources = [], []
    for e in tree.geometric_edges():
        A = _mask(n, R.index[tree.alpha[e]][theta.peripherals[e]])
        Y = beyond(tree.bar[e])
        Z = beyond(e)
        splits.append(Splitting(A, Y, Z, name=("edge", e)))
        sources.append(("edge", e))
    pieces, local = {}, {}
    for t in sorted(C):
        for j, s in enumerate(C[t].splittings):
            ix = R.index[t]
            A = _mask(n, ix[np.flatnonzero(s.A)])
            halves = []
            for side in (0, 1):
                H = s.half(side)
                G = _mask(n, ix[np.flatnonzero(H)])
                attached = []
                for e in tree.out_edges(t):
                    if H[theta.peripherals[e]].all():
                        P = beyond(e)
                        attached.append(P)
                        G |= P
                key = (len(splits), side)
                pieces[key] = attached
                local[key] = _mask(n, ix[np.flatnonzero(H)])
                halves.append(G)
            splits.append(Splitting(A, halves[0], halves[1], name=("local", t, j)))
            sources.append(("local", t, j))
    D = Decomposition(X, splits)
    for i, s in enumerate(splits):
        v = validate_splitting(X, s)
        for viol in v.violations:
            rep.add("splitting", f"{sources[i]}: {viol.kind}", i)
    rep.merge(check_noncrossing(D))
    worst, checked = -np.inf, 0
    for (i, side), attached in pieces.items():
        G = splits[i].half(side)
        lhs = X.subset_diameter(G)
        rhs = X.subset_diameter(local[(i, side)]) + 2 * max((X.subset_diameter(P) for P in attached), default=0.0)
        checked += 1
        worst = max(worst, lhs - rhs)
        if lhs > rhs + 1e-9 * max(1.0, X.diameter):
            rep.add("claim-2", f"{sources[i]} side {side}: {lhs:.6g} > {rhs:.6g}", (i, side))
    rep.data.update({"splittings": len(splits), "halfspaces_checked": checked, "worst_slack": float(worst) if checked else None})
    return LimitDecomposition(D, sources, pieces, local, rep)
