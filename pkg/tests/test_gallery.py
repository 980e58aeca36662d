import numpy as np
import pytest

from arbor.gallery import (
    complete_labeled,
    export_sequence,
    gen_punctured_circle,
    gen_punctured_interval,
    gen_random,
    gen_reflection_disk,
    interval_cuts,
)
from arbor.inverse import validate_weak_jakobsche
from arbor.system import validate_system


@pytest.mark.parametrize("depth,vertices", [(1, 1), (2, 4), (3, 13), (4, 40)])
def test_circle_tree_sizes(depth, vertices):
    assert len(gen_punctured_circle(depth).tree.vertices) == vertices


def test_circle_peripherals_are_arc_endpoints():
    theta = gen_punctured_circle(2)
    for e in theta.tree.edges:
        assert len(theta.peripherals[e]) == 2


def test_interval_rejects_non_null_schedules():
    with pytest.raises(ValueError):
        gen_punctured_interval(2, scale=1.0)


def test_random_systems_are_reproducible():
    a, b = gen_random(42), gen_random(42)
    assert a.tree == b.tree
    for t in a.tree.vertices:
        assert np.array_equal(a.constituents[t].dist, b.constituents[t].dist)
    assert gen_random(43).n_points() != a.n_points() or gen_random(43).tree != a.tree


@pytest.mark.parametrize("seed", range(10))
def test_random_systems_validate(seed):
    assert validate_system(gen_random(seed)).ok


def test_disk_orbit_counts():
    model = gen_reflection_disk(3)
    assert model.orbit_counts == [1, 3, 6, 12]
    assert len(model.decomposition) == sum(model.orbit_counts) - 1


def test_cuts_must_be_interior():
    with pytest.raises(ValueError):
        interval_cuts(9, [0])


def test_exported_sequence_shrinks_disks():
    seq = export_sequence(complete_labeled(depth=3))
    rep = validate_weak_jakobsche(seq)
    assert rep.ok
    assert [X.n for X in seq.spaces] == [30, 130, 530]
    assert seq.resolution == pytest.approx(1.75)


def test_export_needs_growing_balls():
    with pytest.raises(ValueError):
        export_sequence(complete_labeled(depth=2), radii=(1, 1))
