"""Brute-force ground truth and property checks for small instances."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .lovasz import full_subgradient
from .oracle import DomainError

MAX_BRUTE_N = 20


def _members(mask: int) -> frozenset:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def value_table(f) -> np.ndarray:
    """Values of all ``2^n`` subsets indexed by bitmask, enumerated in Gray-code order."""
    n = f.n
    if n > MAX_BRUTE_N:
        raise DomainError(f"brute force is limited to n <= {MAX_BRUTE_N}")
    table = getattr(f, "table", None)
    if table is not None and getattr(f, "normalized", True):
        return np.asarray(table(), dtype=float)
    out = np.empty(1 << n)
    current: set[int] = set()
    mask = 0
    out[0] = f.value(frozenset())
    for step in range(1, 1 << n):
        flip = (step & -step).bit_length() - 1
        mask ^= 1 << flip
        current.symmetric_difference_update((flip,))
        out[mask] = f.value(frozenset(current))
    return out


@dataclass
class BruteForceResult:
    minimizer: frozenset
    value: float
    table: np.ndarray


def brute_force_min(f) -> BruteForceResult:
    """Exhaustive minimum; ties go to the smallest bitmask."""
    table = value_table(f)
    mask = int(np.argmin(table))
    value = table[mask]
    if float(value).is_integer():
        value = int(value)
    return BruteForceResult(_members(mask), value, table)


@dataclass
class SubmodularityCheck:
    passed: bool
    witness: tuple | None = None  # (S, T, i) with f(S+i) - f(S) < f(T+i) - f(T)

    def __bool__(self):
        return self.passed


def check_submodular(f, *, exhaustive: bool = False, tol: float | None = None) -> SubmodularityCheck:
    """Diminishing returns over all ``S ⊆ T``, ``i ∉ T``.

    The default checks the equivalent pairwise form
    ``f(S+i) - f(S) >= f(S+j+i) - f(S+j)`` for every ``S`` and ``i != j`` outside
    ``S`` (vectorized over ``S``); ``exhaustive=True`` walks every triple.
    Either way a failure comes with a violating ``(S, T, i)``.
    """
    n = f.n
    if n > 12:
        raise DomainError("submodularity checks are limited to n <= 12")
    table = value_table(f)
    if tol is None:
        tol = 1e-9 * max(1.0, float(np.abs(table).max()))
    masks = np.arange(1 << n)
    if exhaustive:
        for t_mask in range(1 << n):
            s_mask = t_mask
            while True:
                for i in range(n):
                    if t_mask >> i & 1:
                        continue
                    bit = 1 << i
                    if table[s_mask | bit] - table[s_mask] < table[t_mask | bit] - table[t_mask] - tol:
                        return SubmodularityCheck(False, (_members(s_mask), _members(t_mask), i))
                if s_mask == 0:
                    break
                s_mask = (s_mask - 1) & t_mask
        return SubmodularityCheck(True)
    for i, j in combinations(range(n), 2):
        bi, bj = 1 << i, 1 << j
        base = masks[(masks & (bi | bj)) == 0]
        gap = table[base | bi] + table[base | bj] - table[base | bi | bj] - table[base]
        bad = np.flatnonzero(gap < -tol)
        if bad.size:
            s_mask = int(base[bad[0]])
            return SubmodularityCheck(False, (_members(s_mask), _members(s_mask | bj), i))
    return SubmodularityCheck(True)


@dataclass
class EstimatorReport:
    ell: int
    draws: int
    exact: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    stderr: np.ndarray
    l1_mass: float

    @property
    def total_variance(self) -> float:
        """Estimate of ``E ||z - E z||^2``."""
        return float(self.variance.sum())

    @property
    def max_zscore(self) -> float:
        diff = np.abs(self.mean - self.exact)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.stderr > 0, diff / self.stderr, np.where(diff > 1e-12, np.inf, 0.0))
        return float(z.max()) if z.size else 0.0


def estimator_moments(tree, e, ell: int, draws: int, rng) -> EstimatorReport:
    """Monte-Carlo moments of the difference estimator for edit ``e`` on a copy of ``tree``.

    The exact difference comes from two full subgradient evaluations.
    """
    if draws < 2:
        raise DomainError("need at least two draws")
    work = tree.copy()
    f = work.f
    before = full_subgradient(f, work.x())
    sampler = work.prepare_difference(e)
    after = full_subgradient(f, work.x())
    n = work.n
    total = np.zeros(n)
    total_sq = np.zeros(n)
    for _ in range(draws):
        z = sampler.draw(ell, rng).z
        for j, v in z.items():
            total[j] += v
            total_sq[j] += v * v
    mean = total / draws
    variance = np.maximum(total_sq / draws - mean * mean, 0.0) * draws / (draws - 1)
    return EstimatorReport(ell, draws, after - before, mean, variance, np.sqrt(variance / draws),
                           sampler.l1_mass)
