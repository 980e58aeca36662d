"""Consolidation, subdivision and the puncture-to-end pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decomp import Decomposition, LimitDecomposition, c_lim, dual_tree
from .metric import FiniteCompactum, distortion
from .realize import BasePointing, Realization, WeightSchedule, _defaults, realize_limit
from .report import Report
from .system import TreeSystem, find_isomorphism, restrict
from .tree import Tree


class RewriteError(ValueError):
    pass


# consolidation


@dataclass
class Consolidation:
    system: TreeSystem
    cells: list[frozenset]
    cell_of: dict[int, int]  # original vertex -> cell vertex id
    local: dict[int, np.ndarray]  # original vertex -> index in the cell constituent of each point
    basepoints: BasePointing  # inherited base points of the consolidated system
    pieces: dict[int, Realization] = field(repr=False, default_factory=dict)

    def canonical_map(self, R: Realization, R_pi: Realization) -> np.ndarray:
        """The bijection i_Pi from realize(theta) onto realize(theta_Pi)."""
        out = np.empty(R.space.n, dtype=np.intp)
        for c, members in enumerate(R.classes):
            imgs = {R_pi.point(self.cell_of[t], int(self.local[t][i])) for t, i in members}
            if len(imgs) != 1:
                raise RewriteError(f"class {c} splits under consolidation")
            out[c] = imgs.pop()
        return out


def consolidate(theta: TreeSystem, cells, bp: BasePointing | None = None, w: WeightSchedule | None = None) -> Consolidation:
    """Merge the constituents of each cell into their realized partial union.

    Weights are baked into the merged constituents, so the consolidated
    system is realized with unit weights.  A cell keeps the smallest vertex
    id it contains; crossing edges and stubs keep their ids.
    """
    tree = theta.tree
    cells = [frozenset(c) for c in cells]
    rep = tree.validate_partition(cells)
    if not rep.ok:
        raise RewriteError(f"invalid partition: {rep.violations[0].detail}")
    bp, w = _defaults(theta, bp, w)
    cell_of, local, pieces, cons = {}, {}, {}, {}
    for S in cells:
        cid = min(S)
        sub = restrict(theta, S)
        R = realize_limit(sub, bp.restricted(sub.tree.edges), w.restricted(S))
        pieces[cid] = R
        cons[cid] = R.space
        for t in S:
            cell_of[t] = cid
            local[t] = R.index[t]
    alpha, omega, bar, stubs = {}, {}, {}, []
    per, con, tails, base = {}, {}, {}, {}
    for e in tree.edges:
        a = tree.alpha[e]
        if not tree.is_stub(e) and cell_of[tree.omega[e]] == cell_of[a]:
            continue
        alpha[e] = cell_of[a]
        per[e] = local[a][theta.peripherals[e]]
        base[e] = int(local[a][bp[e]])
        if tree.is_stub(e):
            omega[e] = None
            stubs.append(e)
            tails[e] = w.tail(theta, e)
        else:
            o = tree.omega[e]
            omega[e], bar[e] = cell_of[o], tree.bar[e]
            con[e] = local[o][theta.connectors[e]]
    new_tree = Tree(sorted(cons), alpha, omega, bar, stubs)
    for cid, K in cons.items():
        # glued peripherals stop being peripheral, so density is re-declared
        # at the spacing that survives
        own = [per[e] for e in new_tree.out_edges(cid)]
        res = float(K.dist[:, np.unique(np.concatenate(own))].min(axis=1).max()) if own else K.diameter
        cons[cid] = FiniteCompactum(K.dist, K.ids, K.coords, resolution=max(res, K.resolution))
    labels = None
    if theta.labels is not None:
        labels = {min(S): tuple(sorted((theta.labels[t] for t in S), key=repr)) for S in cells}
    out = TreeSystem(new_tree, cons, per, con, tails, labels=labels, dense=theta.dense)
    return Consolidation(out, cells, cell_of, local, BasePointing(base), pieces)


def consolidation_distortion(theta: TreeSystem, cells, bp: BasePointing | None = None, w: WeightSchedule | None = None) -> dict:
    """Distortion of i_Pi between realize(theta) and realize(theta_Pi)."""
    bp, w = _defaults(theta, bp, w)
    cz = consolidate(theta, cells, bp, w)
    R = realize_limit(theta, bp, w)
    Rp = realize_limit(cz.system, cz.basepoints, WeightSchedule.uniform(cz.system))
    imap = cz.canonical_map(R, Rp)
    bij = len(np.unique(imap)) == R.space.n == Rp.space.n
    corr = np.stack([np.arange(R.space.n), imap], axis=1)
    return {"bijective": bool(bij), "distortion": distortion(R.space, Rp.space, corr), "consolidation": cz}


# subdivision


@dataclass
class Subdivision:
    system: TreeSystem
    provenance: dict[int, int]  # new vertex -> original vertex
    domain_points: dict[int, np.ndarray]  # new vertex -> indices in the original constituent
    limit: LimitDecomposition | None
    realization: Realization


def subdivide(theta: TreeSystem, C: dict[int, Decomposition]) -> Subdivision:
    """Associated system of the limit decomposition.

    Each domain lies in one constituent and keeps that constituent's metric
    and point ids.  Original edges keep their ids; the domain of ``t`` that
    holds its first peripheral point keeps the id ``t``.
    """
    tree = theta.tree
    R = realize_limit(theta, w=WeightSchedule.uniform(theta))
    C = {t: Ct for t, Ct in C.items() if len(Ct)}
    if not tree.geometric_edges() and not C:
        prov = {t: t for t in tree.vertices}
        pts = {t: np.arange(theta.constituents[t].n) for t in tree.vertices}
        return Subdivision(theta.copy(), prov, pts, None, R)
    L = c_lim(theta, C, R)
    if not L.report.ok:
        raise RewriteError(f"limit decomposition failed: {L.report.violations[0].detail}")
    dt = dual_tree(L.decomposition)
    member_at = [{t: i for t, i in members} for members in R.classes]
    owner, local_pts = {}, {}
    for v, d in dt.domains.items():
        idx = np.flatnonzero(d.points)
        cands = [t for t in tree.vertices if all(t in member_at[c] for c in idx)]
        if not cands:
            raise RewriteError(f"domain {v} spreads over several constituents")
        t = cands[0]
        owner[v] = t
        local_pts[v] = np.array([member_at[c][t] for c in idx], dtype=np.intp)
    # vertex ids
    vid = {}
    for t in tree.vertices:
        mine = [v for v in sorted(dt.domains) if owner[v] == t]
        if not mine:
            raise RewriteError(f"vertex {t} lost its constituent")
        first = int(theta.peripherals[tree.out_edges(t)[0]][0]) if tree.out_edges(t) else None
        keep = next((v for v in mine if first is not None and first in local_pts[v]), mine[0])
        vid[keep] = t
    nxt = max(tree.vertices) + 1
    for v in sorted(dt.domains):
        if v not in vid:
            vid[v] = nxt
            nxt += 1
    # edge ids
    base_id = max(tree.edges, default=-1) + 1
    base_id += base_id % 2
    local_rank = {}
    eid = {}
    for e, (i, side) in dt.edge_of.items():
        src = L.sources[i]
        if src[0] == "edge":
            orig = src[1]
            eid[e] = orig if side == 1 else tree.bar[orig]
        else:
            k = local_rank.setdefault(i, len(local_rank))
            eid[e] = base_id + 2 * k + side
    cons, per, con = {}, {}, {}
    alpha, omega, bar = {}, {}, {}
    pos = {}
    for v in dt.domains:
        t = owner[v]
        cons[vid[v]] = theta.constituents[t].subspace(local_pts[v])
        pos[v] = {int(c): k for k, c in enumerate(np.flatnonzero(dt.domains[v].points))}
    for e, (i, _) in dt.edge_of.items():
        a, o = dt.tree.alpha[e], dt.tree.omega[e]
        A = np.flatnonzero(L.decomposition.splittings[i].A)
        f = eid[e]
        alpha[f], omega[f], bar[f] = vid[a], vid[o], eid[dt.tree.bar[e]]
        per[f] = [pos[a][int(c)] for c in A]
        con[f] = [pos[o][int(c)] for c in A]
    stubs, tails = [], {}
    for z in sorted(tree.stubs):
        t = tree.alpha[z]
        cls = R.index[t][theta.peripherals[z]]
        v = next(v for v in sorted(dt.domains) if owner[v] == t and all(int(c) in pos[v] for c in cls))
        alpha[z], omega[z] = vid[v], None
        stubs.append(z)
        per[z] = [pos[v][int(c)] for c in cls]
        tails[z] = theta.tails.get(z, 0.0)
    new_tree = Tree(sorted(cons), alpha, omega, bar, stubs)
    labels = None if theta.labels is None else {vid[v]: theta.labels[owner[v]] for v in dt.domains}
    out = TreeSystem(new_tree, cons, per, con, tails, labels=labels, dense=theta.dense)
    prov = {vid[v]: owner[v] for v in dt.domains}
    return Subdivision(out, prov, {vid[v]: local_pts[v] for v in dt.domains}, L, R)


def canonical_partition(sub: Subdivision) -> list[frozenset]:
    groups: dict[int, set] = {}
    for v, t in sub.provenance.items():
        groups.setdefault(t, set()).add(v)
    return [frozenset(groups[t]) for t in sorted(groups)]


def roundtrip_check(theta: TreeSystem, C: dict[int, Decomposition], tol: float = 1e-9) -> Report:
    """Consolidate a subdivision along the canonical partition and compare."""
    rep = Report("roundtrip")
    sub = subdivide(theta, C)
    cz = consolidate(sub.system, canonical_partition(sub), w=WeightSchedule.uniform(sub.system))
    back = cz.system
    if theta.labels is not None:
        back.labels = {v: theta.labels[v] for v in back.tree.vertices}
    iso = find_isomorphism(back, theta)
    rep.data["vertices"] = {"original": len(theta.tree.vertices), "subdivided": len(sub.system.tree.vertices)}
    if iso is None:
        rep.add("isomorphism", "no isomorphism between the round trip and the original")
        return rep
    rep.data["vertex_map"] = {str(k): v for k, v in sorted(iso.vertex_map.items())}
    Ra = realize_limit(back, w=WeightSchedule.uniform(back))
    Rb = realize_limit(theta, w=WeightSchedule.uniform(theta))
    pairs = set()
    for c, members in enumerate(Ra.classes):
        for t, i in members:
            pairs.add((c, Rb.point(iso.vertex_map[t], int(iso.point_maps[t][i]))))
    corr = np.array(sorted(pairs), dtype=np.intp)
    if len(corr) != Ra.space.n or len(np.unique(corr[:, 1])) != Rb.space.n:
        rep.add("realization", "point maps do not induce a bijection of realizations")
        return rep
    d = distortion(Ra.space, Rb.space, corr)
    rep.data["realization_distortion"] = d
    if d > tol * max(1.0, Rb.space.diameter):
        rep.add("realization", f"realizations differ by {d:.3g}")
    return rep


# puncture to end


@dataclass
class PunctureResult:
    system: TreeSystem
    end: int  # stub edge carrying the image of x
    steps: list[dict]
    subdivision: Subdivision
    path: list[int]  # subdivided vertices from outermost to innermost


def puncture_to_end(theta: TreeSystem, t_star: int, x: int, C: Decomposition, sphere_label="sphere") -> PunctureResult:
    """Turn the point ``x`` of ``K_{t_star}`` into an end.

    ``C`` is a nested family around ``x``.  The subdivision expands
    ``t_star`` into a path ``t_0, ..., t_m`` with ``x`` in ``t_m``; each
    intermediate ``t_i`` is a punctured sphere and is merged with one of its
    other neighbours ``s_i``, whose label it takes.  The innermost domain
    and everything attached to it is pruned into a stub.
    """
    if theta.labels is None:
        raise RewriteError("puncture_to_end needs a labeled system")
    tree = theta.tree
    steps: list[dict] = []
    sub = subdivide(theta, {t_star: C})
    S = sub.system
    st = S.tree
    mine = [v for v, t in sub.provenance.items() if t == t_star]
    inner = next(v for v in mine if x in sub.domain_points[v].tolist())
    # the expanded path from the kept domain to the one holding x
    path = [t_star] + [st.omega[e] for e in st.path(t_star, inner)] if inner != t_star else [t_star]
    if any(v not in mine for v in path):
        raise RewriteError("the nested family does not expand into a path")
    steps.append({"op": "subdivide", "params": {"vertex": t_star, "path": path}})
    if len(path) < 2:
        raise RewriteError("x is not separated from the rest of the constituent")
    labels = dict(S.labels)
    for v in path[1:]:
        labels[v] = sphere_label
    steps.append({"op": "label", "params": {"kept": t_star, "spheres": path[1:]}, "axiom": "peripheral-relabel"})
    cells, used = [], set(path)
    for i, v in enumerate(path[1:-1], start=1):
        cand = [w for w in st.neighbors(v) if w not in used and w not in mine]
        if not cand:
            raise RewriteError(f"no admissible neighbour to merge with {v}")
        s = min(cand)
        used.add(s)
        cells.append(frozenset({v, s}))
        labels[v] = labels[s]
        steps.append({"op": "merge", "params": {"piece": v, "with": s, "label": _plain(labels[s])}, "axiom": "peripheral-relabel"})
    # prune the innermost domain
    last = path[-1]
    into = st.edge_between(path[-2], last)
    pruned = st.half_tree(into)
    keep = frozenset(st.vertices) - pruned
    R = realize_limit(S, w=WeightSchedule.uniform(S))
    region = np.unique(np.concatenate([R.index[v] for v in pruned]))
    sigma = R.space.subset_diameter(region)
    trimmed = restrict(S, keep)
    trimmed.tails[into] = float(sigma)
    trimmed.labels = {v: labels[v] for v in keep}
    steps.append({"op": "prune", "params": {"edge": into, "tail": float(sigma), "removed": sorted(pruned)}})
    singles = [frozenset({v}) for v in sorted(keep) if not any(v in c for c in cells)]
    cz = consolidate(trimmed, cells + singles, w=WeightSchedule.uniform(trimmed))
    out = cz.system
    # merged pieces already carry the label of their partner
    out.labels = {cz.cell_of[v]: labels[v] for v in keep}
    return PunctureResult(out, into, steps, sub, path)


def _plain(x):
    return x if isinstance(x, (str, int, float)) else repr(x)
