import numpy as np
import pytest

from arbor.decomp import nested_family
from arbor.gallery import gen_punctured_circle, gen_random, random_partition
from arbor.rewrite import (
    RewriteError,
    canonical_partition,
    consolidate,
    consolidation_distortion,
    puncture_to_end,
    subdivide,
)
from arbor.system import validate_system

from cases import roundtrip_cases


def test_trivial_partition_changes_nothing():
    theta = gen_random(1)
    res = consolidation_distortion(theta, [{t} for t in theta.tree.vertices])
    assert res["bijective"] and res["distortion"] <= 1e-12


def test_single_cell_gives_one_vertex():
    theta = gen_random(1, depth=2)
    cz = consolidate(theta, [set(theta.tree.vertices)])
    assert list(cz.system.tree.vertices) == [0]
    assert sorted(cz.system.tree.stubs) == sorted(theta.tree.stubs)
    assert validate_system(cz.system).ok


def test_consolidated_system_validates():
    theta = gen_random(11)
    cells = random_partition(theta.tree, np.random.default_rng(0))
    cz = consolidate(theta, cells)
    assert validate_system(cz.system).ok
    assert {cz.cell_of[t] for t in theta.tree.vertices} == set(cz.system.tree.vertices)


def test_bad_partition_is_rejected():
    theta = gen_random(1, depth=2)
    leaves = [t for t in theta.tree.vertices if len(theta.tree.neighbors(t)) == 1]
    with pytest.raises(RewriteError):
        consolidate(theta, [set(leaves)])


def test_subdivision_keeps_points_and_validates():
    seed, theta, C = roundtrip_cases(3)[2]
    sub = subdivide(theta, C)
    assert validate_system(sub.system).ok
    assert len(sub.system.tree.vertices) == len(theta.tree.vertices) + sum(len(c) for c in C.values())
    for t in theta.tree.vertices:
        pts = [sub.domain_points[v] for v, s in sub.provenance.items() if s == t]
        assert set(np.concatenate(pts).tolist()) == set(range(theta.constituents[t].n))
    assert sorted(map(sorted, canonical_partition(sub))) == sorted(
        sorted(v for v, s in sub.provenance.items() if s == t) for t in theta.tree.vertices
    )


def test_puncture_makes_an_end():
    theta = gen_punctured_circle(2)
    theta.labels = {t: "S1" for t in theta.tree.vertices}
    n = theta.constituents[0].n
    off = np.abs(np.arange(n) - 35)
    # the annulus between the two windows holds peripherals to merge with
    nested = [(off == r, off <= r) for r in (9, 3)]
    C, rep = nested_family(theta, 0, 35, nested)
    assert set(rep.kinds()) <= {"singleton"}
    res = puncture_to_end(theta, 0, 35, C)
    assert res.end in res.system.tree.stubs
    assert validate_system(res.system).ok
    ops = [s["op"] for s in res.steps]
    assert ops[0] == "subdivide" and "merge" in ops and ops[-1] == "prune"
    assert all(s["axiom"] == "peripheral-relabel" for s in res.steps if s["op"] in ("label", "merge"))
    assert res.system.tails[res.end] > 0


def test_puncture_needs_labels():
    theta = gen_punctured_circle(1)
    with pytest.raises(RewriteError):
        puncture_to_end(theta, 0, 0, None)
