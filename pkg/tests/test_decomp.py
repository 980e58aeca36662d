import numpy as np
import pytest

from arbor.decomp import (
    Decomposition,
    DecompositionError,
    Splitting,
    associated_system,
    c_lim,
    check_noncrossing,
    dual_tree,
    nested_family,
    noncross,
    reconstruct_check,
    validate_splitting,
)
from arbor.gallery import gen_punctured_circle, gen_reflection_disk, interval_cuts
from arbor.system import validate_system

from cases import window_nest


def test_cut_splittings_are_valid():
    C = interval_cuts(17, [4, 8, 12])
    for s in C.splittings:
        assert validate_splitting(C.ambient, s).ok
    assert check_noncrossing(C).ok


def test_interleaved_splittings_cross():
    n = 8
    K = interval_cuts(n, []).ambient
    ring = np.arange(n)
    a = Splitting(np.isin(ring, [0, 4]), ring <= 4, (ring >= 4) | (ring == 0))
    b = Splitting(np.isin(ring, [2, 6]), (ring >= 2) & (ring <= 6), (ring >= 6) | (ring <= 2))
    assert not noncross(a, b)
    with pytest.raises(DecompositionError):
        dual_tree(Decomposition(K, [a, b]))


def test_empty_decomposition_has_one_domain():
    C = interval_cuts(9, [])
    dt = dual_tree(C)
    assert list(dt.tree.vertices) == [0] and dt.domains[0].points.all()


def test_cut_domains_are_consecutive_runs():
    C = interval_cuts(33, [8, 16, 24])
    dt = dual_tree(C)
    runs = sorted(tuple(np.flatnonzero(d.points)[[0, -1]]) for d in dt.domains.values())
    assert runs == [(0, 8), (8, 16), (16, 24), (24, 32)]


def test_associated_system_is_valid_and_reconstructs():
    C = interval_cuts(65, [10, 30, 50])
    theta = associated_system(C)
    assert validate_system(theta).ok
    rep = reconstruct_check(C)
    assert rep.ok and rep.data["distortion"] == 0.0


def test_disk_reconstruction_is_bijective():
    rep = reconstruct_check(gen_reflection_disk(2).decomposition)
    assert rep.data["bijective"]


def test_nested_family_flags_a_peripheral_on_a_separator():
    theta = gen_punctured_circle(2)
    K = theta.constituents[0]
    p = int(theta.peripherals[theta.tree.out_edges(0)[0]][0])
    A = np.zeros(K.n, dtype=bool)
    A[p] = True
    H = K.dist[p] <= K.dist[p].max() / 2
    with pytest.raises(DecompositionError):
        nested_family(theta, 0, int(np.argmin(np.where(H & ~A, K.dist[p], np.inf))), [(A, H)])


def test_window_nests_are_compatible():
    theta = gen_punctured_circle(2)
    rng = np.random.default_rng(0)
    C, rep = window_nest(theta, 0, rng, 3, cyclic=True)
    assert set(rep.kinds()) <= {"singleton"}
    L = c_lim(theta, {0: C})
    assert L.report.ok
    # peripheral splittings plus the local ones
    assert L.report.data["splittings"] == len(theta.tree.geometric_edges()) + len(C)
