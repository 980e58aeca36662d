import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor.metric import (
    DegenerateQuotientError,
    FiniteCompactum,
    circle_sample,
    distortion,
    gh_upper,
    greedy_correspondence,
    quotient_metric,
    validate_metric,
)


def cloud(seed, n=20, dim=2):
    return FiniteCompactum.from_points(np.random.default_rng(seed).random((n, dim)))


def floyd(d, pairs):
    d = d.copy()
    for a, b in pairs:
        d[a, b] = d[b, a] = 0.0
    for k in range(len(d)):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    return d


def test_euclidean_cloud_is_a_metric():
    assert validate_metric(cloud(0)).ok


def test_violations_are_named():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    assert "triangle" in validate_metric(FiniteCompactum(d)).kinds()
    d = np.array([[0, 1], [2, 0]], dtype=float)
    assert "symmetry" in validate_metric(FiniteCompactum(d)).kinds()
    d = np.array([[0, 0], [0, 0]], dtype=float)
    assert "positivity" in validate_metric(FiniteCompactum(d)).kinds()


@given(st.integers(0, 10_000), st.lists(st.tuples(st.integers(0, 29), st.integers(0, 29)), min_size=1, max_size=6))
@settings(max_examples=40, deadline=None)
def test_quotient_matches_floyd_warshall(seed, pairs):
    K = cloud(seed, 30)
    pairs = [(a, b) for a, b in pairs if a != b]
    try:
        q = quotient_metric(K, pairs)
    except DegenerateQuotientError:
        return
    want = floyd(K.dist, pairs)
    got = q.space.dist[np.ix_(q.class_of, q.class_of)]
    assert np.abs(got - want).max() <= 1e-12
    assert validate_metric(q.space).ok


def test_collapsing_quotient_raises():
    d = np.array([[0, 1, 1], [1, 0, 2], [1, 2, 0]], dtype=float)
    K = FiniteCompactum(d)
    q = quotient_metric(K, [(1, 2)])
    assert len(q.classes) == 2
    with pytest.raises(DegenerateQuotientError):
        # a zero-length chain between two distinct classes
        quotient_metric(FiniteCompactum(np.array([[0, 0.0, 1], [0.0, 0, 1], [1, 1, 0]])), [])


def test_distortion_of_identity_is_zero():
    K = cloud(1)
    corr = np.stack([np.arange(K.n)] * 2, axis=1)
    assert distortion(K, K, corr) == 0.0


def test_rotated_circles_are_close():
    X, Y = circle_sample(64), circle_sample(256, phase=0.01)
    gh = gh_upper(X, Y, greedy_correspondence(X, Y))
    assert gh <= 2 * np.pi / 64


def test_correspondence_must_cover_both_sides():
    K = cloud(2, 5)
    with pytest.raises(ValueError):
        distortion(K, K, np.array([[0, 0], [1, 1]]))


def test_json_roundtrip_with_sidecar(tmp_path):
    K = cloud(3, 12)
    data = K.to_json(tmp_path / "k.bin")
    back = FiniteCompactum.from_json(data, tmp_path)
    assert np.array_equal(back.dist, K.dist)
    assert back.ids == K.ids
