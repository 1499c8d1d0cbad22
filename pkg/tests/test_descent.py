import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from subsfm.algorithms import ExactGradients
from subsfm.descent import (BoxDomain, SparseCapDomain, StepSchedule, project_box_edit, project_sparse_cap,
                            run_descent, sparse_cap_threshold)
from subsfm.lovasz import SparseVector, full_subgradient
from subsfm.oracle import DomainError, random_table_instance


def test_box_edit_examples():
    e = project_box_edit([0.5, 0.5, 0.5], SparseVector({0: 1, 2: -1}), 0.3)
    assert e.as_dict() == pytest.approx({0: -0.3, 2: 0.3})
    # clamped at the faces
    e = project_box_edit([0.1, 0.9], SparseVector({0: 1, 1: -1}), 0.5)
    assert e.as_dict() == pytest.approx({0: -0.1, 1: 0.1})
    assert project_box_edit([0.0], SparseVector({0: 1}), 0.5).nnz == 0


def test_cap_projection_examples():
    assert sparse_cap_threshold([0.9, 0.8], 1) == pytest.approx(0.35)
    assert project_sparse_cap([0.9, 0.8], 1) == pytest.approx([0.55, 0.45])
    assert project_sparse_cap([2.0, 2.0], 1) == pytest.approx([0.5, 0.5])
    assert project_sparse_cap([0.2, 0.3], 1) == pytest.approx([0.2, 0.3])
    assert project_sparse_cap([-0.5, 1.5], 5) == pytest.approx([0.0, 1.0])


def test_cap_rejects_negative_budget():
    with pytest.raises(DomainError):
        project_sparse_cap([0.5], -1)


def enumerate_cap_projection(y, s):
    """Closest feasible point over all assignments of each coordinate to 0, 1 or free."""
    y = np.asarray(y, dtype=float)
    best, best_dist = None, np.inf
    for pattern in itertools.product(range(3), repeat=len(y)):
        pattern = np.array(pattern)
        free = pattern == 2
        for lam in (0.0, None):
            x = np.where(pattern == 1, 1.0, 0.0)
            if lam is None:
                if not free.any():
                    continue
                lam = (y[free].sum() + x.sum() - s) / free.sum()
                if lam < 0:
                    continue
            x[free] = y[free] - lam
            if x.min() < -1e-12 or x.max() > 1 + 1e-12 or x.sum() > s + 1e-12:
                continue
            dist = ((x - y) ** 2).sum()
            if dist < best_dist:
                best, best_dist = x, dist
    return best


@given(st.lists(st.floats(-1.5, 2.5), min_size=1, max_size=5), st.floats(0, 5))
def test_cap_projection_against_enumeration(y, s):
    got = project_sparse_cap(y, s)
    want = enumerate_cap_projection(y, s)
    assert np.abs(got - want).max() <= 1e-9


def test_schedule_validation_and_gap_bound():
    with pytest.raises(DomainError):
        StepSchedule(0.0, 10)
    with pytest.raises(DomainError):
        StepSchedule(0.1, 0)
    sched = StepSchedule.theory(2.0, 8.0, 100)
    assert sched.eta == pytest.approx(0.5 * np.sqrt(0.02))
    # R B sqrt(2 / T) with R^2 = 2, B^2 = 8
    assert sched.gap_bound(2.0, 8.0) == pytest.approx(4 * np.sqrt(0.02))
    assert StepSchedule(0.2, 100).gap_bound(2.0, 8.0) > sched.gap_bound(2.0, 8.0)


def dense_reference(f, eta, T, s=None):
    """Plain projected subgradient descent with full subgradients."""
    x = np.zeros(f.n)
    total = np.zeros(f.n)
    for _ in range(T):
        total += x
        y = x - eta * full_subgradient(f, x)
        x = np.clip(y, 0, 1) if s is None else project_sparse_cap(y, s)
    return total / T, x


@given(st.integers(1, 8), st.integers(0, 10_000), st.sampled_from([None, 1, 2, 3]))
def test_descent_matches_dense_reference(n, seed, s):
    # real-valued instance and step, so exact ties between coordinates only come from the box faces
    f = random_table_instance(n, seed, unit=True, integer=False)
    sched = StepSchedule(0.0713, 60)
    want_avg, want_final = dense_reference(f, sched.eta, sched.T, s)
    domains = [BoxDomain()] if s is None else [SparseCapDomain(s), SparseCapDomain(s, fast=False)]
    for domain in domains:
        out = run_descent(f, ExactGradients(), domain, sched, check=True)
        assert np.abs(out.average - want_avg).max() <= 1e-9
        assert np.abs(out.final - want_final).max() <= 1e-9


@given(st.integers(2, 10), st.integers(0, 10_000), st.integers(1, 4))
def test_fast_and_dense_cap_agree(n, seed, s):
    f = random_table_instance(n, seed, unit=True, integer=False)
    sched = StepSchedule(0.11, 80)
    fast = run_descent(f, ExactGradients(), SparseCapDomain(s), sched, check=True)
    dense = run_descent(f, ExactGradients(), SparseCapDomain(s, fast=False), sched, check=True)
    assert np.abs(fast.final - dense.final).max() <= 1e-9
    assert np.abs(fast.average - dense.average).max() <= 1e-9
    assert fast.value == pytest.approx(dense.value)


def test_descent_returns_a_set_no_worse_than_the_empty_set():
    f = random_table_instance(6, 8)
    out = run_descent(f, ExactGradients(), BoxDomain(), StepSchedule(0.05, 30))
    assert out.value <= 0
    assert f(out.minimizer) == out.value
    assert out.source in ("average", "final")
