import numpy as np
import pytest

from arbor.gallery import gen_punctured_circle, gen_random
from arbor.system import (
    TreeSystem,
    check_isomorphism,
    density_gap,
    find_isomorphism,
    identity_isomorphism,
    restrict,
    validate_system,
)
from arbor.tree import TreeError


def test_json_roundtrip_keeps_everything(tmp_path):
    theta = gen_random(5)
    back = TreeSystem.from_json(theta.to_json(tmp_path), tmp_path)
    assert back.tree == theta.tree
    for t in theta.tree.vertices:
        assert np.array_equal(back.constituents[t].dist, theta.constituents[t].dist)
    for e in theta.tree.edges:
        assert np.array_equal(back.peripherals[e], theta.peripherals[e])
    assert back.tails == theta.tails
    assert back.meta["generator"] == theta.meta["generator"]
    assert validate_system(back).ok


def test_identity_is_an_isomorphism():
    theta = gen_random(2)
    assert check_isomorphism(theta, theta, identity_isomorphism(theta)).ok
    assert find_isomorphism(theta, theta) is not None


def test_copy_is_found():
    theta = gen_random(4, depth=2)
    iso = find_isomorphism(theta, theta.copy())
    assert iso is not None and check_isomorphism(theta, theta.copy(), iso).ok


def test_different_metrics_are_not_isomorphic():
    a = gen_random(1, depth=1)
    b = a.copy(constituents={t: K.scaled(2.0) for t, K in a.constituents.items()})
    assert find_isomorphism(a, b) is None


def test_restriction_turns_cut_edges_into_stubs():
    theta = gen_random(0, depth=2)
    root_only = restrict(theta, {0})
    assert list(root_only.tree.vertices) == [0]
    assert len(root_only.tree.stubs) == len(theta.tree.out_edges(0))
    assert validate_system(root_only).ok
    kids = [theta.tree.omega[e] for e in theta.tree.out_edges(0) if not theta.tree.is_stub(e)]
    if len(kids) >= 2:
        with pytest.raises(TreeError):
            restrict(theta, set(kids))  # siblings without their parent


def test_density_gap_respects_resolution():
    theta = gen_punctured_circle(2)
    for gap, res in density_gap(theta).values():
        assert gap <= res + 1e-12
