"""End-to-end acceptance checks, one test per criterion with its runtime budget."""

import time
from itertools import combinations

import numpy as np
import pytest

from arbor.decomp import associated_system, c_lim, check_noncrossing, dual_tree, reconstruct_check
from arbor.gallery import (
    circle_generator,
    complete_labeled,
    export_sequence,
    gen_punctured_circle,
    gen_punctured_interval,
    gen_random,
    gen_reflection_disk,
    interval_cuts,
    labeled_path,
    random_partition,
    standard_family,
)
from arbor.gallery.disk import domain_distortion
from arbor.inverse import (
    Disk,
    InverseBundle,
    balls,
    build_extended,
    check_contracting,
    check_fine,
    check_functoriality,
    delta_gamma,
    evaluate_threads,
    is_zero_contracting,
    iter_paths,
    validate_weak_jakobsche,
)
from arbor.labels import ConnectedSumWord, is_2_saturated, is_weakly_saturated, label_content_preserved, saturate, sum_normalize
from arbor.metric import circle_sample, gh_upper, greedy_correspondence
from arbor.realize import WeightSchedule, choose_basepoints, realize_limit, realize_star, refine_and_compare
from arbor.rewrite import consolidation_distortion, roundtrip_check
from arbor.system import check_isomorphism, find_isomorphism, validate_system

from cases import roundtrip_cases
from oracles import glued_distances, star_distance


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f}s, budget {self.seconds}s"


def _gallery():
    out = {}
    for d in (1, 2, 3):
        out[f"circle-{d}"] = gen_punctured_circle(d)
        out[f"interval-{d}"] = gen_punctured_interval(d)
    for d in (1, 2):
        out[f"disk-{d}"] = gen_reflection_disk(d).template
    for seed in range(5):
        out[f"random-{seed}"] = gen_random(seed)
    out["labeled-path"] = labeled_path(5).system
    out["labeled-complete"] = complete_labeled(depth=2).system
    return out


@pytest.mark.criterion(1)
def test_validation_suite():
    with Budget(10):
        for name, theta in _gallery().items():
            rep = validate_system(theta)
            assert rep.ok, (name, rep.violations[:3])

        theta = gen_random(3)
        tree = theta.tree
        z = min(tree.stubs)
        t = tree.alpha[z]
        other = next(e for e in tree.out_edges(t) if e != z)
        per = dict(theta.peripherals)
        per[z] = np.array([theta.peripherals[other][0]])
        assert "TS4-overlap" in validate_system(theta.copy(peripherals=per)).kinds()

        e = next(e for e in tree.geometric_edges() if len(theta.peripherals[e]) >= 2)
        b = tree.bar[e]
        con = dict(theta.connectors)
        con[b] = con[b][::-1].copy()
        assert "TS3-involution" in validate_system(theta.copy(connectors=con)).kinds()

        tails = dict(theta.tails)
        del tails[z]
        assert "tail-missing" in validate_system(theta.copy(tails=tails)).kinds()


@pytest.mark.criterion(2)
def test_metric_matches_case_formulas_and_glued_oracle():
    with Budget(30):
        theta = gen_random(7, depth=3)
        bp = choose_basepoints(theta)
        w = WeightSchedule.geometric(theta)
        star = realize_star(theta, bp, w)
        rng = np.random.default_rng(7)
        verts = sorted(theta.tree.vertices)
        for _ in range(200):
            t, s = rng.choice(verts, size=2)
            i = int(rng.integers(theta.constituents[t].n))
            j = int(rng.integers(theta.constituents[s].n))
            got = star.space.dist[star.index[t][i], star.index[s][j]]
            want = star_distance(theta, bp.base, w.weights, t, i, s, j)
            assert abs(got - want) <= 1e-12 * abs(want), (t, i, s, j, got, want)

        small = [gen_random(seed, depth=2) for seed in range(4)]
        small += [gen_punctured_circle(2), gen_punctured_interval(3)]
        for theta in small:
            assert theta.n_points() <= 400
            w = WeightSchedule.geometric(theta)
            R = realize_limit(theta, w=w)
            D, offsets = glued_distances(theta, R.basepoints.base, w.weights)
            cls = np.concatenate([R.index[v] for v in sorted(theta.tree.vertices)])
            got = R.space.dist[np.ix_(cls, cls)]
            assert np.abs(got - D).max() <= 1e-12


@pytest.mark.criterion(3)
def test_consolidation_is_isometric():
    with Budget(60):
        worst = 0.0
        for seed in range(20):
            theta = gen_random(seed, depth=3)
            cells = random_partition(theta.tree, np.random.default_rng(1000 + seed))
            res = consolidation_distortion(theta, cells)
            assert res["bijective"], seed
            worst = max(worst, res["distortion"])
        assert worst <= 1e-9


def _check_dual_tree(C):
    dt = dual_tree(C)
    tree = dt.tree
    assert len(tree.geometric_edges()) == len(C)
    # connected with |V| - 1 edges: a tree
    order, _, _ = tree.bfs()
    assert len(order) == len(tree.vertices) == len(C) + 1
    for s in C.splittings:
        holders = [v for v, d in dt.domains.items() if d.points[s.A].all()]
        assert len(holders) == 2
    return dt


@pytest.mark.criterion(4)
def test_dual_tree_and_reconstruction():
    with Budget(60):
        rng = np.random.default_rng(4)
        n = 129  # dyadic grid: every sum of gaps is exact
        for k in (0, 1, 2, 5, 9, 16):
            cuts = rng.choice(np.arange(1, n - 1), size=k, replace=False)
            C = interval_cuts(n, cuts)
            if k:
                _check_dual_tree(C)
            rep = reconstruct_check(C)
            assert rep.data["bijective"], k
            assert rep.data["distortion"] == 0.0, (k, rep.data["distortion"])
        for depth in (1, 2, 3):
            C = gen_reflection_disk(depth).decomposition
            _check_dual_tree(C)
            rep = reconstruct_check(C)
            assert rep.ok and rep.data["bijective"], depth


@pytest.mark.criterion(5)
def test_subdivision_round_trip():
    with Budget(60):
        cases = roundtrip_cases(10)
        assert any(len(C) > 1 for _, _, C in cases)
        for seed, theta, C in cases:
            rep = roundtrip_check(theta, C)
            assert rep.ok, (seed, rep.violations)


@pytest.mark.criterion(6)
def test_limit_decomposition_diameter_estimate():
    with Budget(30):
        checked = 0
        for seed, theta, C in roundtrip_cases(10):
            L = c_lim(theta, C)
            assert L.report.ok, (seed, L.report.violations)
            checked += L.report.data["halfspaces_checked"]
        assert checked > 0


def _bundles():
    """(name, system, extended family, chain ending with the whole tree)."""
    out = []
    c = gen_punctured_circle(3)
    out.append(("circle-standard", c, standard_family(c), balls(c.tree, (0, 1, 2))))
    out.append(("circle-conical", c, build_extended(c, "conical", levels=3), balls(c.tree, (0, 1, 2))))
    i = gen_punctured_interval(3)
    out.append(("interval-trivial", i, build_extended(i, "trivial", retractions=i.meta["retractions"]), balls(i.tree, (0, 1, 2))))
    out.append(("interval-conical", i, build_extended(i, "conical", levels=3), balls(i.tree, (0, 1, 2))))
    for seed in (1, 20, 22, 23):
        r = gen_random(seed, depth=2, points=(12, 20))
        out.append((f"random-{seed}-trivial", r, build_extended(r, "trivial"), balls(r.tree, (0, 1, 2))))
    r = gen_random(0, depth=3)
    out.append(("random-0-conical", r, build_extended(r, "conical", levels=2), balls(r.tree, (0, 1, 2, 3))))
    for name, theta, _, chain in out:
        assert chain[-1] == frozenset(theta.tree.vertices), name
    return out


@pytest.mark.criterion(7)
def test_inverse_system_suite():
    with Budget(60):
        decaying = 0
        for name, theta, E, chain in _bundles():
            bundle = InverseBundle(E, chain)
            triples = list(combinations(chain, 3))
            rep = check_functoriality(bundle, triples)
            assert rep.ok and rep.data["triples"] == len(triples), name
            if E.kind == "conical":
                assert is_zero_contracting(E), name
                cert = check_fine(E)
                assert cert.certified and cert.zero_contracting, name
            cc = check_contracting(E)
            if cc is not None:
                c, Cbound = cc
                decaying += c > 0
                tree = theta.tree
                for e in tree.internal_edges():
                    dist = E.hat[tree.alpha[e]].dist
                    for gamma in iter_paths(tree, e, 4):
                        img = np.unique(delta_gamma(E, gamma))
                        diam = dist[np.ix_(img, img)].max()
                        assert diam <= Cbound * c ** (len(gamma) - 1) + 1e-12, (name, gamma, diam)
            R = realize_limit(theta)
            tr = evaluate_threads(bundle, R)
            assert tr.compatible and tr.stable, (name, tr.report.violations[:3])
            assert len(tr.threads) == R.space.n + len(theta.tree.stubs)
            if E.kind == "trivial":
                # ends have no room of their own; only realized points must stay apart
                points = [th.values for th in tr.threads if th.kind == "point"]
                assert len(set(points)) == len(points), name
            else:
                assert tr.bijective, (name, tr.report.violations[:3])
        # the decay bound was exercised with a nonzero constant
        assert decaying > 0


@pytest.mark.criterion(8)
def test_tree_of_circles_converges():
    with Budget(120):
        theta = gen_punctured_circle(4)
        R = realize_limit(theta, w=WeightSchedule.uniform(theta))
        assert 2000 <= R.space.n <= 4000
        Y = circle_sample(256)
        gh = gh_upper(R.space, Y, greedy_correspondence(R.space, Y))
        assert gh <= 0.15 * R.space.diameter, gh
        gen = circle_generator()
        bounds = [refine_and_compare(gen, d).bound for d in (2, 3, 4)]
        for a, b in zip(bounds, bounds[1:]):
            assert b < a and b / a <= 0.6, bounds


@pytest.mark.criterion(9)
def test_reflection_disk_suite():
    with Budget(120):
        for depth in (1, 2, 3):
            model = gen_reflection_disk(depth)
            assert check_noncrossing(model.decomposition).ok
            iso = find_isomorphism(associated_system(model.decomposition), model.template, match_stubs=False)
            assert iso is not None, depth
            assert check_isomorphism(associated_system(model.decomposition), model.template, iso, match_stubs=False).ok
        model = gen_reflection_disk(2)
        dt = dual_tree(model.decomposition)
        domains = {frozenset(np.flatnonzero(d.points).tolist()) for d in dt.domains.values()}
        for w in model.words:
            assert frozenset(model.word_points[w].tolist()) in domains, w
            dd = domain_distortion(model, w)
            assert dd["hyperbolic_distortion"] <= 1e-6 and dd["coordinate_gap"] <= 1e-6, (w, dd)


def _jakobsche_mutants(seq_factory):
    """Single-condition mutations of an exported sequence, keyed by the condition they break."""
    out = {}
    s = seq_factory()
    a, b = s.disks[2][1][0], s.disks[2][1][1]
    s.disks[2][1][1] = Disk(b.interior, np.append(b.boundary, a.boundary[0]))
    out["1"] = s

    s = seq_factory()
    inside = np.zeros(s.spaces[0].n, dtype=bool)
    for ds in s.disks[0].values():
        for d in ds:
            inside[d.points] = True
    free = np.flatnonzero(~inside)
    m = s.maps[0].copy()
    m[m == free[1]] = free[0]
    s.maps[0] = m
    out["2"] = s

    s = seq_factory()
    s.base_label = "not-a-label"
    out["3a"] = s

    s = seq_factory()
    s.disks[0][2].append(s.disks[0][1].pop())
    out["3b"] = s

    s = seq_factory()
    comp = s.composite(0, 2)
    on_boundary = np.flatnonzero(comp == s.disks[0][1][0].boundary[0])[:1]
    s.disks[2][1].append(Disk(np.zeros(0, dtype=np.intp), on_boundary))
    out["4"] = s

    s = seq_factory()
    wide = np.array([np.flatnonzero(comp == f)[0] for f in free[:2]])
    s.disks[2][2].append(Disk(wide, np.zeros(0, dtype=np.intp)))
    out["5"] = s

    s = seq_factory()
    s.disks[2][1] = []
    out["6"] = s
    s = seq_factory()
    s.dense = False
    out["6-undeclared"] = s
    return out


@pytest.mark.criterion(10)
def test_label_algebra():
    with Budget(30):
        assert sum_normalize(ConnectedSumWord.of(["M1", "M2"])) == sum_normalize(ConnectedSumWord.of({"M1": 2, "M2": 3}))
        assert sum_normalize(ConnectedSumWord.of(["M1"])) != sum_normalize(ConnectedSumWord.of(["M1", "M2"]))

        L = labeled_path(5)
        assert is_weakly_saturated(L) and not is_2_saturated(L)
        res = saturate(L)
        assert is_2_saturated(res.labeled)
        assert label_content_preserved(L, res).ok

        L = complete_labeled(depth=3)
        factory = lambda: export_sequence(L, radii=(0, 1, 2))  # noqa: E731
        rep = validate_weak_jakobsche(factory())
        assert rep.ok, rep.violations
        for target, seq in _jakobsche_mutants(factory).items():
            kinds = validate_weak_jakobsche(seq).kinds()
            assert kinds == {target.split("-")[0]}, (target, kinds)
