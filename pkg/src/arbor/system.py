"""Truncated tree systems of finite metric spaces.

A system hangs a :class:`FiniteCompactum` on every vertex of a
:class:`Tree`, a peripheral subset on every oriented edge and a gluing
bijection on every non-stub edge.  Stub edges carry a tail bound instead of a
connector: an upper bound on the total diameter of everything pruned beyond
them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Mapping

import numpy as np

from .metric import FiniteCompactum, default_ladder, profile_from_diameters, validate_metric
from .report import Report
from .tree import Tree, TreeError

SCHEMA = "arbor.system/1"


class SystemError_(ValueError):
    pass


class TreeSystem:
    """Tree + constituents + peripherals + connectors + tail bounds.

    ``peripherals[e]`` is a sorted index array into ``K_{alpha(e)}``;
    ``connectors[e][k]`` is the index in ``K_{omega(e)}`` of the image of
    ``peripherals[e][k]``.  The constructor normalizes but does not validate,
    so broken systems can be built and then inspected by
    :func:`validate_system`.
    """

    def __init__(
        self,
        tree: Tree,
        constituents: Mapping[int, FiniteCompactum],
        peripherals: Mapping[int, object],
        connectors: Mapping[int, object] | None = None,
        tails: Mapping[int, float] | None = None,
        labels: Mapping[int, object] | None = None,
        dense: bool = False,
    ):
        self.tree = tree
        self.constituents = dict(constituents)
        self.peripherals: dict[int, np.ndarray] = {}
        self.connectors: dict[int, np.ndarray] = {}
        connectors = connectors or {}
        for e, pts in peripherals.items():
            pts = np.asarray(list(pts), dtype=np.intp)
            order = np.argsort(pts, kind="stable")
            self.peripherals[e] = pts[order]
            if e in connectors:
                self.connectors[e] = np.asarray(list(connectors[e]), dtype=np.intp)[order]
        for e in connectors:
            if e not in self.peripherals:
                self.connectors[e] = np.asarray(list(connectors[e]), dtype=np.intp)
        self.tails = {int(k): float(v) for k, v in (tails or {}).items()}
        self.labels = None if labels is None else dict(labels)
        self.dense = dense
        self.meta: dict = {}  # generator extras (layouts, retractions); not serialized
        self._phi: dict[int, dict[int, int]] = {}

    @classmethod
    def from_pairs(cls, tree, constituents, pairs, stub_peripherals=(), tails=None, **kw):
        """Build from connector pairs given per non-stub edge as ``[(i, j), ...]``.

        The reverse edge gets the inverse bijection automatically.
        """
        per, con = {}, {}
        for e, prs in pairs.items():
            prs = sorted((int(i), int(j)) for i, j in prs)
            b = tree.bar[e]
            per[e] = [i for i, _ in prs]
            con[e] = [j for _, j in prs]
            inv = sorted((j, i) for i, j in prs)
            per[b] = [j for j, _ in inv]
            con[b] = [i for _, i in inv]
        per.update({e: list(p) for e, p in dict(stub_peripherals).items()})
        return cls(tree, constituents, per, con, tails, **kw)

    # access

    def K(self, t: int) -> FiniteCompactum:
        return self.constituents[t]

    def phi(self, e: int) -> dict[int, int]:
        if e not in self._phi:
            self._phi[e] = dict(zip(self.peripherals[e].tolist(), self.connectors[e].tolist()))
        return self._phi[e]

    def n_points(self) -> int:
        return sum(k.n for k in self.constituents.values())

    def copy(self, **changes) -> "TreeSystem":
        kw = dict(
            tree=self.tree,
            constituents=self.constituents,
            peripherals=self.peripherals,
            connectors=self.connectors,
            tails=self.tails,
            labels=self.labels,
            dense=self.dense,
        )
        kw.update(changes)
        return TreeSystem(**kw)

    def __repr__(self):
        return f"TreeSystem({self.tree!r}, {self.n_points()} points)"

    # serialization

    def to_json(self, sidecar_dir: Path | None = None) -> dict:
        cons = []
        for t in self.tree.vertices:
            side = None if sidecar_dir is None else Path(sidecar_dir) / f"K{t}.bin"
            cons.append({"vertex": t, "compactum": self.constituents[t].to_json(side)})
        out = {
            "schema": SCHEMA,
            "tree": self.tree.to_json(),
            "constituents": cons,
            "peripherals": [{"edge": e, "points": self.peripherals[e].tolist()} for e in sorted(self.peripherals)],
            "connectors": [
                {"edge": e, "pairs": [[int(i), int(j)] for i, j in zip(self.peripherals[e], self.connectors[e])]}
                for e in sorted(self.connectors)
            ],
            "tails": [{"edge": e, "sigma": s} for e, s in sorted(self.tails.items())],
            "dense": self.dense,
        }
        if self.labels is not None:
            out["labels"] = [{"vertex": t, "label": self.labels[t]} for t in sorted(self.labels)]
        if "generator" in self.meta:
            out["generator"] = self.meta["generator"]
        return out

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "TreeSystem":
        if data.get("schema", SCHEMA) != SCHEMA:
            raise SystemError_(f"unsupported schema {data.get('schema')}")
        tree = Tree.from_json(data["tree"])
        cons = {int(c["vertex"]): FiniteCompactum.from_json(c["compactum"], base) for c in data["constituents"]}
        per = {int(p["edge"]): p["points"] for p in data["peripherals"]}
        con = {}
        for c in data.get("connectors", []):
            e = int(c["edge"])
            pairs = dict((int(i), int(j)) for i, j in c["pairs"])
            con[e] = [pairs[i] for i in per[e]] if set(pairs) == set(per[e]) else [j for _, j in sorted(pairs.items())]
        tails = {int(t["edge"]): float(t["sigma"]) for t in data.get("tails", [])}
        labels = None
        if "labels" in data:
            labels = {int(r["vertex"]): _label(r["label"]) for r in data["labels"]}
        out = cls(tree, cons, per, con, tails, labels=labels, dense=data.get("dense", False))
        if "generator" in data:
            out.meta["generator"] = data["generator"]
        return out


def _label(x):
    # merged cells carry tuples of labels, which JSON turns into lists
    return tuple(_label(y) for y in x) if isinstance(x, list) else x


# validation


def validate_system(theta: TreeSystem, tol: float = 1e-9) -> Report:
    """Check the tree-system axioms and report nullity/distortion numbers."""
    rep = Report("system")
    tree = theta.tree
    # TS1: the tree itself is checked on construction; check coverage here
    missing = [t for t in tree.vertices if t not in theta.constituents]
    if missing:
        rep.add("TS1", f"vertices without constituent: {missing}", missing)
    extra = sorted(set(theta.constituents) - set(tree.vertices))
    if extra:
        rep.add("TS1", f"constituents on unknown vertices: {extra}", extra)
    # TS2
    for t in tree.vertices:
        if t not in theta.constituents:
            continue
        mrep = validate_metric(theta.constituents[t], tol)
        for v in mrep.violations:
            rep.add("TS2", f"K_{t}: {v.kind} {v.detail}", t)
    # TS3
    max_dist = 0.0
    for e in tree.edges:
        t = tree.alpha[e]
        pts = theta.peripherals.get(e)
        if pts is None or len(pts) == 0:
            rep.add("TS3-empty", f"peripheral of edge {e} is empty", e)
            continue
        if t in theta.constituents and (pts.min() < 0 or pts.max() >= theta.constituents[t].n):
            rep.add("TS3-range", f"peripheral of edge {e} out of range", e)
            continue
        if len(np.unique(pts)) != len(pts):
            rep.add("TS3-range", f"peripheral of edge {e} repeats points", e)
        if tree.is_stub(e):
            if e in theta.connectors:
                rep.add("stub-connector", f"stub {e} has a connector", e)
            if e not in theta.tails:
                rep.add("tail-missing", f"stub {e} has no tail bound", e)
            elif not theta.tails[e] >= 0:
                rep.add("tail-negative", f"stub {e} has tail {theta.tails[e]}", e)
            continue
        b = tree.bar[e]
        con = theta.connectors.get(e)
        if con is None or len(con) != len(pts):
            rep.add("TS3-connector", f"edge {e} lacks a connector on its whole peripheral", e)
            continue
        target = theta.peripherals.get(b)
        if target is None or set(con.tolist()) != set(target.tolist()) or len(set(con.tolist())) != len(con):
            rep.add("TS3-connector", f"connector of edge {e} is not a bijection onto the reverse peripheral", e)
            continue
        back = theta.connectors.get(b)
        if back is None:
            rep.add("TS3-involution", f"edge {b} has no connector", b)
            continue
        inv = dict(zip(theta.peripherals[b].tolist(), back.tolist()))
        if any(inv.get(j) != i for i, j in zip(pts.tolist(), con.tolist())):
            rep.add("TS3-involution", f"connectors of {e} and {b} are not inverse", e)
            continue
        ka, kw = theta.constituents.get(t), theta.constituents.get(tree.omega[e])
        if ka is not None and kw is not None:
            da = ka.dist[np.ix_(pts, pts)]
            dw = kw.dist[np.ix_(con, con)]
            max_dist = max(max_dist, float(np.abs(da - dw).max()))
    rep.data["connector_distortion"] = max_dist
    # TS4
    profiles = {}
    for t in tree.vertices:
        if t not in theta.constituents:
            continue
        K = theta.constituents[t]
        edges = [e for e in tree.out_edges(t) if e in theta.peripherals]
        for e1, e2 in combinations(edges, 2):
            common = np.intersect1d(theta.peripherals[e1], theta.peripherals[e2])
            if common.size:
                rep.add("TS4-overlap", f"peripherals {e1} and {e2} at vertex {t} share {common.tolist()}", (e1, e2))
        diams = [K.subset_diameter(theta.peripherals[e]) for e in edges]
        ladder = default_ladder(K.diameter if K.diameter > 0 else 1.0)
        profiles[t] = {
            "counts": profile_from_diameters(diams, ladder).tolist(),
            "stub_tails": {e: theta.tails.get(e) for e in edges if tree.is_stub(e)},
        }
    rep.data["nullity"] = profiles
    if theta.dense:
        worst = density_gap(theta)
        rep.data["density"] = worst
        for t, (gap, res) in worst.items():
            if gap > res + tol:
                rep.add("density", f"K_{t}: a point is {gap:.3g} from every peripheral (resolution {res:.3g})", t)
    return rep


def density_gap(theta: TreeSystem) -> dict:
    """Per vertex: (max distance from a point to the peripherals, resolution)."""
    out = {}
    for t in theta.tree.vertices:
        K = theta.constituents[t]
        pts = [theta.peripherals[e] for e in theta.tree.out_edges(t)]
        if not pts:
            out[t] = (float("inf"), K.resolution)
            continue
        allp = np.unique(np.concatenate(pts))
        out[t] = (float(K.dist[:, allp].min(axis=1).max()), K.resolution)
    return out


def restrict(theta: TreeSystem, F) -> TreeSystem:
    """Restriction to a subtree; edges leaving F become stubs with tail sums."""
    F = frozenset(F)
    tree = theta.tree
    if not tree.is_subtree(F):
        raise TreeError("F is not a subtree")
    sub = tree.induced(F)
    tails = {}
    for e in sub.stubs:
        if tree.is_stub(e):
            tails[e] = theta.tails.get(e, float("nan"))
            continue
        region = tree.half_tree(e)
        s = sum(theta.constituents[v].diameter for v in region)
        s += sum(theta.tails.get(z, 0.0) for v in region for z in tree.out_edges(v) if tree.is_stub(z))
        tails[e] = float(s)
    cons = {t: theta.constituents[t] for t in F}
    per = {e: theta.peripherals[e] for e in sub.edges}
    con = {e: theta.connectors[e] for e in sub.edges if not sub.is_stub(e) and e in theta.connectors}
    labels = None if theta.labels is None else {t: theta.labels[t] for t in F}
    return TreeSystem(sub, cons, per, con, tails, labels=labels, dense=theta.dense)


# isomorphisms


@dataclass
class SystemIsomorphism:
    vertex_map: dict[int, int]
    edge_map: dict[int, int]
    point_maps: dict[int, np.ndarray] = field(default_factory=dict)

    def to_json(self):
        return {
            "vertex_map": {str(k): v for k, v in sorted(self.vertex_map.items())},
            "edge_map": {str(k): v for k, v in sorted(self.edge_map.items())},
            "point_maps": {str(k): v.tolist() for k, v in sorted(self.point_maps.items())},
        }


def identity_isomorphism(theta: TreeSystem) -> SystemIsomorphism:
    return SystemIsomorphism(
        {t: t for t in theta.tree.vertices},
        {e: e for e in theta.tree.edges},
        {t: np.arange(theta.constituents[t].n) for t in theta.tree.vertices},
    )


def check_isomorphism(a: TreeSystem, b: TreeSystem, iso: SystemIsomorphism, match_stubs: bool = True, tol: float = 1e-9) -> Report:
    """Check the tree, point, peripheral and connector parts of ``iso``.

    Point maps must be isometries up to ``tol`` relative to the constituent's diameter.
    """
    rep = Report("isomorphism")
    ta, tb = a.tree, b.tree
    lam, emap = iso.vertex_map, iso.edge_map
    if sorted(lam) != list(ta.vertices) or sorted(lam.values()) != list(tb.vertices):
        rep.add("I1", "vertex map is not a bijection")
        return rep
    edges_a = [e for e in ta.edges if match_stubs or not ta.is_stub(e)]
    edges_b = [e for e in tb.edges if match_stubs or not tb.is_stub(e)]
    if sorted(e for e in emap if e in set(edges_a)) != sorted(edges_a) or sorted(emap[e] for e in edges_a) != sorted(edges_b):
        rep.add("I1", "edge map is not a bijection")
        return rep
    for e in edges_a:
        f = emap[e]
        if lam[ta.alpha[e]] != tb.alpha[f] or ta.is_stub(e) != tb.is_stub(f):
            rep.add("I1", f"edge {e} not carried to a matching edge", e)
        elif not ta.is_stub(e) and (lam[ta.omega[e]] != tb.omega[f] or emap[ta.bar[e]] != tb.bar[f]):
            rep.add("I1", f"edge {e} endpoints or reverse not preserved", e)
    if a.labels is not None and b.labels is not None:
        for t in ta.vertices:
            if a.labels[t] != b.labels[lam[t]]:
                rep.add("labels", f"label mismatch at {t}", t)
    if not rep.ok:
        return rep
    worst = 0.0
    for t in ta.vertices:
        f = np.asarray(iso.point_maps.get(t, []), dtype=np.intp)
        Ka, Kb = a.constituents[t], b.constituents[lam[t]]
        if f.shape != (Ka.n,) or Kb.n != Ka.n or len(np.unique(f)) != Ka.n or (Ka.n and f.max() >= Kb.n):
            rep.add("I2", f"point map at {t} is not a bijection", t)
            continue
        gap = float(np.abs(Ka.dist - Kb.dist[np.ix_(f, f)]).max()) if Ka.n else 0.0
        worst = max(worst, gap)
        if gap > tol * max(Ka.diameter, 1.0):
            rep.add("I2", f"point map at {t} distorts distances by {gap:.3g}", t)
        for e in ta.out_edges(t):
            if e not in emap:
                continue
            img = np.sort(f[a.peripherals[e]])
            if not np.array_equal(img, b.peripherals[emap[e]]):
                rep.add("I3", f"peripheral of {e} not carried onto peripheral of {emap[e]}", e)
    rep.data["point_distortion"] = worst
    if not rep.ok:
        return rep
    for e in ta.internal_edges():
        fe, fw = iso.point_maps[ta.alpha[e]], iso.point_maps[ta.omega[e]]
        phib = b.phi(emap[e])
        for x, y in a.phi(e).items():
            if phib.get(int(fe[x])) != int(fw[y]):
                rep.add("I4", f"connector square fails on edge {e} at point {x}", (e, x))
                break
    return rep


def _point_map_candidates(Ka: FiniteCompactum, Kb: FiniteCompactum, tol=1e-9):
    if Ka.n != Kb.n:
        return
    if set(Ka.ids) == set(Kb.ids):
        yield np.array([Kb.index_of(p) for p in Ka.ids], dtype=np.intp)
    if Ka.n and np.abs(Ka.dist - Kb.dist).max() <= tol * max(Ka.diameter, 1e-300):
        yield np.arange(Ka.n)


def _signature(theta: TreeSystem, t: int, match_stubs: bool):
    tree = theta.tree
    sizes = sorted(
        (len(theta.peripherals[e]), tree.is_stub(e))
        for e in tree.out_edges(t)
        if match_stubs or not tree.is_stub(e)
    )
    lab = None if theta.labels is None else theta.labels.get(t)
    return (lab, theta.constituents[t].n, tuple(sizes))


def find_isomorphism(a: TreeSystem, b: TreeSystem, match_stubs: bool = True) -> SystemIsomorphism | None:
    """Search for an isomorphism a -> b.

    Candidate roots in b are tried in sorted order; below a matched vertex the
    point bijection fixes which child edges correspond, so the search only
    branches over roots and over the admissible point bijections at a vertex.
    """
    ta, tb = a.tree, b.tree
    if len(ta.vertices) != len(tb.vertices):
        return None
    if not ta.vertices:
        return SystemIsomorphism({}, {}, {})
    sig_a = {t: _signature(a, t, match_stubs) for t in ta.vertices}
    sig_b = {t: _signature(b, t, match_stubs) for t in tb.vertices}
    if sorted(map(repr, sig_a.values())) != sorted(map(repr, sig_b.values())):
        return None
    root = ta.vertices[0]

    def edges_of(sysm, t, skip):
        return [e for e in sysm.tree.out_edges(t) if e != skip and (match_stubs or not sysm.tree.is_stub(e))]

    def extend(t, s, back_a, back_b, forced, state):
        if sig_a[t] != sig_b[s]:
            return False
        for f in _point_map_candidates(a.constituents[t], b.constituents[s]):
            if forced is not None and any(f[x] != y for x, y in forced.items()):
                continue
            vm, em, pm = dict(state[0]), dict(state[1]), dict(state[2])
            vm[t], pm[t] = s, f
            ok = True
            by_set = {tuple(b.peripherals[e].tolist()): e for e in edges_of(b, s, back_b)}
            pending = []
            for e in edges_of(a, t, back_a):
                key = tuple(np.sort(f[a.peripherals[e]]).tolist())
                g = by_set.pop(key, None)
                if g is None or ta.is_stub(e) != tb.is_stub(g):
                    ok = False
                    break
                em[e] = g
                if not ta.is_stub(e):
                    pending.append((e, g))
            if not ok or by_set:
                continue
            st = (vm, em, pm)
            for e, g in pending:
                phib = b.phi(g)
                forced_child = {a.phi(e)[x]: phib[int(f[x])] for x in a.peripherals[e].tolist()}
                res = extend(ta.omega[e], tb.omega[g], ta.bar[e], tb.bar[g], forced_child, st)
                if res is False:
                    ok = False
                    break
                st = res
            if ok:
                return st
        return False

    for s in tb.vertices:
        res = extend(root, s, None, None, None, ({}, {}, {}))
        if res is not False:
            vm, em, pm = res
            # child-to-parent edges were recorded as reverses of matched parent edges
            for e in list(em):
                if not ta.is_stub(e):
                    em[ta.bar[e]] = tb.bar[em[e]]
            iso = SystemIsomorphism(vm, em, pm)
            if check_isomorphism(a, b, iso, match_stubs).ok:
                return iso
    return None
