import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor.gallery import complete_labeled, gen_labeled, labeled_path
from arbor.labels import (
    AXIOM,
    Alphabet,
    ConnectedSumWord,
    LabeledSystem,
    LabelError,
    Promise,
    PromiseError,
    is_2_saturated,
    is_weakly_saturated,
    label_content_preserved,
    saturate,
    spaces_equal,
    sum_normalize,
)
from arbor.system import validate_system
from arbor.tree import Tree


@given(st.dictionaries(st.sampled_from("ABCDE"), st.integers(1, 5), min_size=1))
def test_normalization_forgets_multiplicity(counts):
    w = ConnectedSumWord.of(counts)
    assert sum_normalize(w) == ConnectedSumWord.of(list(counts))
    assert spaces_equal(w, ConnectedSumWord.of(list(counts) * 2))


def test_empty_word_has_no_normal_form():
    with pytest.raises(LabelError):
        sum_normalize(ConnectedSumWord.of([]))


def test_promise_must_contain_its_first_label():
    with pytest.raises(PromiseError):
        Promise(1, frozenset({2}))


def test_empty_alphabet_is_rejected():
    with pytest.raises(LabelError):
        Alphabet(())


def test_missing_promise_is_rejected():
    tree = Tree.build(range(2), [(0, 1)], [1])
    with pytest.raises(LabelError):
        gen_labeled(tree, {0: 1, 1: 2}, (1, 2), {})


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_saturating_paths(n):
    L = labeled_path(n)
    assert is_weakly_saturated(L) and not is_2_saturated(L)
    res = saturate(L)
    assert is_2_saturated(res.labeled)
    assert label_content_preserved(L, res).ok
    assert validate_system(res.labeled.system).ok
    for step in res.log:
        assert "op" in step and "params" in step
        assert step.get("axiom", AXIOM) == AXIOM


def test_complete_tree_is_already_saturated():
    L = complete_labeled(depth=2)
    assert is_2_saturated(L) and is_weakly_saturated(L)


def test_json_roundtrip(tmp_path):
    L = labeled_path(4)
    back = LabeledSystem.from_json(L.to_json(tmp_path), tmp_path)
    assert back.labels == L.labels
    assert back.promises == L.promises
    assert back.alphabet == L.alphabet
