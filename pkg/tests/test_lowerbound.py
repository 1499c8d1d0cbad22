import numpy as np
import pytest
from hypothesis import given, strategies as st

from subsfm.lovasz import full_subgradient
from subsfm.lowerbound import (STRATEGIES, RevealState, fR_pivots, fR_subgradient, first_pivot_sample,
                               geometric_chisquare, reveal, run_recognizer, simulate_recognizer)
from subsfm.oracle import DomainError, LowerBoundFunction


def test_pivot_examples():
    # R = {0, 2}, order (0, 1, 2): leaves R at position 2, covers R at position 3
    assert fR_pivots([True, False, True], [0, 1, 2]) == (2, 3)
    assert fR_pivots([True, False, True], [0, 2, 1]) == (3, 2)
    assert fR_pivots([False, False], [1, 0]) == (1, 0)
    assert fR_pivots([True, True], [1, 0]) == (None, 2)


def test_subgradient_examples():
    assert fR_subgradient({0, 2}, [0, 1, 2]).as_dict() == {1: 1, 2: -1}
    assert fR_subgradient({0, 2}, [0, 2, 1]).as_dict() == {1: 1, 2: -1}
    assert fR_subgradient(set(), [1, 0]).as_dict() == {1: 1}
    assert fR_subgradient({0, 1}, [1, 0]).as_dict() == {0: -1}
    with pytest.raises(DomainError):
        fR_subgradient({0}, [0, 0])


@given(st.integers(1, 8), st.data())
def test_subgradient_matches_explicit_function(n, data):
    hidden = data.draw(st.sets(st.integers(0, n - 1), min_size=1))
    order = data.draw(st.permutations(range(n)))
    f = LowerBoundFunction(hidden, n)
    # a point whose consistent permutation is ``order``
    x = np.empty(n)
    x[list(order)] = np.linspace(1, 0, n)
    assert fR_subgradient(hidden, order).to_dense(n).tolist() == full_subgradient(f, x).tolist()


def test_reveal_example():
    members, outsiders, pivots = reveal([True, False, True, False], [0, 1, 2, 3])
    assert pivots == (2, 3)
    assert members == [0, 2] and outsiders == [1, 3]


def test_single_element_needs_one_query():
    for inside in ([True], [False]):
        assert run_recognizer(STRATEGIES["index"], inside, np.random.default_rng(0)) == 1


def test_canonical_query_checks_ordering():
    state = RevealState.fresh(3)
    state.absorb([0], [2])
    assert state.canonical_query([1]) == [0, 1, 2]
    with pytest.raises(DomainError):
        state.canonical_query([2])


@given(st.sampled_from(sorted(STRATEGIES)), st.lists(st.booleans(), min_size=1, max_size=30), st.integers(0, 99))
def test_recognizer_classifies_every_element(name, inside, seed):
    log = []
    queries = run_recognizer(STRATEGIES[name], inside, np.random.default_rng(seed), log)
    assert queries == len(log)
    assert all(gained >= 1 for _, _, gained in log)


def test_reveals_per_query_is_about_four():
    res = simulate_recognizer("random", 256, 0, 300)
    assert 3.6 <= res.reveals_per_query <= 4.4
    assert res.mean >= 256 / 4
    assert sum(res.distribution().values()) == 300


def test_unknown_strategy_and_bad_sizes():
    with pytest.raises(DomainError):
        simulate_recognizer("greedy", 8, 0, 10)
    with pytest.raises(DomainError):
        simulate_recognizer("random", 0, 0, 10)


def test_empty_and_full_hidden_sets_are_flagged():
    res = simulate_recognizer("index", 1, 0, 50)
    assert res.flagged == 50


def test_first_pivot_follows_geometric_law():
    pivots = first_pivot_sample(64, 20_000, 1)
    assert pivots.min() >= 1
    assert np.mean(pivots == 1) == pytest.approx(0.5, abs=0.02)
    assert geometric_chisquare(pivots).pvalue > 0.01
