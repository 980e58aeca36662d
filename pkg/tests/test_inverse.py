import numpy as np
import pytest

from arbor.gallery import gen_punctured_circle, gen_punctured_interval, gen_random, standard_family
from arbor.inverse import (
    FinenessError,
    HatSpace,
    InverseBundle,
    balls,
    build_extended,
    check_boundary,
    check_fine,
    cone_metric,
    evaluate_threads,
    validate_dim_hypotheses,
)
from arbor.metric import FiniteCompactum, validate_metric
from arbor.realize import realize_limit


def test_cone_metric_is_a_metric():
    base = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
    # the builder uses half the base diameter as the height
    assert validate_metric(FiniteCompactum(cone_metric(base, 3, 1.0))).ok
    assert not validate_metric(FiniteCompactum(cone_metric(base, 3, 0.1))).ok


@pytest.mark.parametrize("kind", ["trivial", "conical"])
def test_families_have_valid_boundaries(kind):
    theta = gen_punctured_interval(2)
    E = build_extended(theta, kind, levels=3)
    assert check_boundary(E).ok
    for K in E.hat.values():
        assert validate_metric(K).ok


def test_standard_circle_family_is_certified():
    E = standard_family(gen_punctured_circle(2))
    cert = check_fine(E)
    assert cert.certified and cert.zero_contracting


def test_hat_space_glues_inside_the_subtree():
    theta = gen_punctured_circle(2)
    E = build_extended(theta, "conical", levels=2)
    whole = HatSpace(E, theta.tree.vertices)
    root = HatSpace(E, {0})
    glued = sum(len(theta.peripherals[e]) for e in theta.tree.geometric_edges())
    cones_kept = sum(len(E.delta_points[e]) - len(theta.peripherals[e]) for e in theta.tree.stubs)
    assert whole.n == theta.n_points() - glued + cones_kept
    assert root.n == E.hat[0].n
    assert validate_metric(whole.metric()).ok


def test_bonding_fixes_the_smaller_union():
    theta = gen_random(2, depth=2)
    E = build_extended(theta, "conical", levels=2)
    bundle = InverseBundle(E, balls(theta.tree, (0, 1, 2)))
    for k, b in enumerate(bundle.bonds):
        small, big = bundle.spaces[k], bundle.spaces[k + 1]
        for t in small.F:
            for j in range(theta.constituents[t].n):
                assert b[big.index[(t, j)]] == small.index[(t, j)]


def test_threads_need_the_whole_tree():
    theta = gen_punctured_circle(2)
    E = build_extended(theta, "conical", levels=2)
    bundle = InverseBundle(E, balls(theta.tree, (0,)))
    with pytest.raises(ValueError):
        evaluate_threads(bundle, realize_limit(theta))


def test_uncertified_family_refuses_threads():
    theta = gen_random(0, depth=2, points=(12, 20))
    E = build_extended(theta, "trivial")
    cert = check_fine(E)
    if cert.certified:
        pytest.skip("this seed happens to be contracting")
    bundle = InverseBundle(E, balls(theta.tree, (0, 1, 2)))
    with pytest.raises(FinenessError):
        evaluate_threads(bundle, realize_limit(theta))


def test_interval_retractions_meet_the_hypotheses():
    theta = gen_punctured_interval(3)
    rep = validate_dim_hypotheses(theta, theta.meta["retractions"])
    assert rep.ok and rep.data["c"] < 1
