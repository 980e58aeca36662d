import numpy as np
import pytest

from arbor.gallery import circle_generator, gen_punctured_circle, gen_punctured_interval, gen_random
from arbor.metric import validate_metric
from arbor.realize import (
    WeightSchedule,
    choose_basepoints,
    embedding_distortion,
    realize_limit,
    realize_star,
    refine_and_compare,
    star_inverse_system,
)
from arbor.system import validate_system

from oracles import star_distance


def test_basepoints_follow_connectors():
    theta = gen_random(3)
    bp = choose_basepoints(theta)
    for e in theta.tree.geometric_edges():
        assert theta.phi(e)[bp[e]] == bp[theta.tree.bar[e]]
        assert bp[e] in theta.peripherals[e]


def test_random_basepoints_are_seeded():
    theta = gen_random(3)
    assert choose_basepoints(theta, "random", 1).base == choose_basepoints(theta, "random", 1).base
    with pytest.raises(ValueError):
        choose_basepoints(theta, "largest")


@pytest.mark.parametrize("seed", range(3))
def test_star_matches_case_formula_everywhere(seed):
    theta = gen_random(seed, depth=2)
    bp, w = choose_basepoints(theta), WeightSchedule.geometric(theta, 0.4)
    star = realize_star(theta, bp, w)
    for t in theta.tree.vertices:
        for s in theta.tree.vertices:
            for i in range(0, theta.constituents[t].n, 3):
                for j in range(0, theta.constituents[s].n, 4):
                    got = star.space.dist[star.index[t][i], star.index[s][j]]
                    assert got == pytest.approx(star_distance(theta, bp.base, w.weights, t, i, s, j), rel=1e-12, abs=0)


def test_realization_is_a_metric_with_two_point_classes():
    theta = gen_random(6)
    R = realize_limit(theta)
    assert validate_metric(R.space).ok
    assert all(len(c) <= 2 for c in R.classes)
    glued = sum(len(theta.peripherals[e]) for e in theta.tree.geometric_edges())
    assert R.space.n == theta.n_points() - glued


def test_constituents_embed_isometrically_for_circles():
    theta = gen_punctured_circle(3)
    R = realize_limit(theta, w=WeightSchedule.uniform(theta))
    assert max(embedding_distortion(theta, R).values()) <= 1e-9


def test_geometric_tail_bounds_shrink_with_depth():
    errs = []
    for d in (1, 2, 3):
        theta = gen_punctured_interval(d)
        errs.append(realize_limit(theta).error)
    assert errs[0] > errs[1] > errs[2]


def test_circle_refinement_frozen_values():
    gen = circle_generator()
    bounds = [refine_and_compare(gen, d).bound for d in (2, 3)]
    assert bounds == pytest.approx([0.19634954, 0.04908739], rel=1e-6)


def test_frozen_circle_sizes():
    theta = gen_punctured_circle(4)
    assert len(theta.tree.vertices) == 40
    assert theta.n_points() == 2319
    assert validate_system(theta).ok


def test_star_projections_compose():
    theta = gen_random(8, depth=2)
    S = star_inverse_system(theta)
    F1, F2, F3 = frozenset({0}), frozenset({0} | {theta.tree.omega[e] for e in theta.tree.out_edges(0) if not theta.tree.is_stub(e)}), frozenset(theta.tree.vertices)
    direct = S.project(F3, F1)
    comp = S.project(F2, F1)[S.project(F3, F2)]
    assert np.array_equal(direct, comp)
