import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor.tree import Tree, TreeError


@st.composite
def random_trees(draw, max_vertices=12):
    n = draw(st.integers(1, max_vertices))
    links = [(draw(st.integers(0, v - 1)), v) for v in range(1, n)]
    stubs = draw(st.lists(st.integers(0, n - 1), max_size=4))
    return Tree.build(range(n), links, stubs)


def test_build_numbers_edges_and_stubs():
    t = Tree.build(range(3), [(0, 1), (1, 2)], [2, 0])
    assert (t.alpha[0], t.omega[0]) == (0, 1)
    assert t.bar[0] == 1 and t.bar[1] == 0
    assert sorted(t.stubs) == [4, 5]
    assert t.alpha[4] == 2 and t.omega[4] is None
    assert t.is_stub(4) and not t.is_stub(2)
    assert sorted(t.internal_edges()) == [0, 1, 2, 3]


def test_cycle_is_rejected():
    with pytest.raises(TreeError):
        Tree.build(range(3), [(0, 1), (1, 2), (2, 0)])


def test_disconnected_is_rejected():
    with pytest.raises(TreeError):
        Tree.build(range(3), [(0, 1)])


@given(random_trees())
@settings(max_examples=50, deadline=None)
def test_half_trees_split_the_vertices(tree):
    for e in tree.geometric_edges():
        a, b = tree.half_tree(e), tree.half_tree(tree.bar[e])
        assert a | b == frozenset(tree.vertices)
        assert not a & b
        assert tree.omega[e] in a and tree.alpha[e] in b


@given(random_trees())
@settings(max_examples=50, deadline=None)
def test_paths_are_geodesics(tree):
    order, _, depth = tree.bfs(0)
    assert sorted(order) == sorted(tree.vertices)
    for v in tree.vertices:
        p = tree.path(0, v)
        assert len(p) == depth[v]
        cur = 0
        for e in p:
            assert tree.alpha[e] == cur
            cur = tree.omega[e]
        assert cur == v


@given(random_trees())
@settings(max_examples=30, deadline=None)
def test_json_roundtrip(tree):
    assert Tree.from_json(tree.to_json()) == tree


def test_partition_validation():
    t = Tree.build(range(4), [(0, 1), (1, 2), (2, 3)])
    assert t.validate_partition([{0, 1}, {2, 3}]).ok
    assert not t.validate_partition([{0, 2}, {1, 3}]).ok
    assert not t.validate_partition([{0, 1}, {2}]).ok
