"""Query-count experiment for the hidden-set family ``f_R``.

One subgradient of ``f_R`` at a point ordered by ``P`` is ``+1`` at ``P_i`` and
``-1`` at ``P_j`` where ``i`` is the first prefix that leaves ``R`` and ``j``
the first prefix that covers ``R``.  From ``(i, j)`` a recognizer learns that
``P_1..P_{i-1}`` and ``P_j`` lie in ``R`` while ``P_i`` and ``P_{j+1}..P_n`` do
not.  Queries are canonicalized: known members first, known non-members
last, so a strategy only chooses the order of the undetermined elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .lovasz import SparseVector
from .oracle import DomainError


def fR_pivots(inside: Sequence[bool], order: Sequence[int]) -> tuple[int | None, int]:
    """1-based ``(i, j)`` for membership vector ``inside`` and permutation ``order``.

    ``i`` is ``None`` when every prefix stays inside ``R`` (``R`` is everything);
    ``j`` is 0 when the empty prefix already covers ``R`` (``R`` is empty).
    """
    remaining = sum(1 for v in inside if v)
    i = None
    j = 0
    for pos, e in enumerate(order, start=1):
        if inside[e]:
            remaining -= 1
            if remaining == 0 and j == 0:
                j = pos
        elif i is None:
            i = pos
        if i is not None and (j or remaining == 0):
            break
    return i, j


def fR_subgradient(hidden, order: Sequence[int]) -> SparseVector:
    """Lovász subgradient of ``f_R`` (raw values) at a point ordered by ``order``."""
    n = len(order)
    if sorted(order) != list(range(n)):
        raise DomainError("order must be a permutation of range(n)")
    inside = [False] * n
    for r in hidden:
        if not 0 <= r < n:
            raise DomainError("hidden set must be a subset of range(n)")
        inside[r] = True
    i, j = fR_pivots(inside, order)
    out = []
    if i is not None:
        out.append((order[i - 1], 1))
    if j > 0:
        out.append((order[j - 1], -1))
    return SparseVector(out)


def reveal(inside: Sequence[bool], order: Sequence[int]) -> tuple[list[int], list[int], tuple]:
    """Elements certified inside and outside ``R`` by one query, and the pivots."""
    i, j = fR_pivots(inside, order)
    if i is None:
        return list(order), [], (i, j)
    members = list(order[: i - 1])
    outsiders = [order[i - 1]]
    if j > 0:
        members.append(order[j - 1])
    outsiders.extend(order[j:])
    return members, outsiders, (i, j)


@dataclass
class RevealState:
    """What the recognizer knows: ``A`` inside ``R``, ``B`` outside, ``U`` undetermined."""

    n: int
    A: list = field(default_factory=list)
    B: list = field(default_factory=list)
    U: list = field(default_factory=list)

    @classmethod
    def fresh(cls, n):
        return cls(n, [], [], list(range(n)))

    def canonical_query(self, u_order: Sequence[int]) -> list[int]:
        if sorted(u_order) != sorted(self.U):
            raise DomainError("strategy must return an ordering of the undetermined elements")
        return list(self.A) + list(u_order) + list(self.B)

    def absorb(self, members, outsiders) -> int:
        known_in, known_out = set(self.A), set(self.B)
        new_in = [e for e in members if e not in known_in]
        new_out = [e for e in outsiders if e not in known_out]
        if set(new_in) & known_out or set(new_out) & known_in:
            raise AssertionError("reveal contradicts earlier answers")
        self.A.extend(new_in)
        self.B.extend(new_out)
        settled = set(new_in) | set(new_out)
        self.U = [e for e in self.U if e not in settled]
        return len(settled)

    @property
    def done(self):
        return not self.U


def _index(state, rng):
    return sorted(state.U)


def _reverse(state, rng):
    return sorted(state.U, reverse=True)


def _random(state, rng):
    u = list(state.U)
    rng.shuffle(u)
    return u


def _interleave(state, rng):
    u = sorted(state.U)
    out = []
    lo, hi = 0, len(u) - 1
    while lo <= hi:
        out.append(u[lo])
        if lo != hi:
            out.append(u[hi])
        lo += 1
        hi -= 1
    return out


STRATEGIES: dict[str, Callable] = {
    "index": _index,
    "reverse": _reverse,
    "random": _random,
    "interleave": _interleave,
}


@dataclass
class SimulationResult:
    strategy: str
    n: int
    trials: int
    queries: np.ndarray
    reveals_per_query: float
    flagged: int

    @property
    def mean(self) -> float:
        return float(self.queries.mean())

    @property
    def std(self) -> float:
        return float(self.queries.std(ddof=1)) if self.trials > 1 else 0.0

    def distribution(self) -> dict[int, int]:
        values, counts = np.unique(self.queries, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def run_recognizer(strategy: Callable, inside: Sequence[bool], rng, log=None) -> int:
    """Query until every element is classified; returns the number of queries."""
    n = len(inside)
    state = RevealState.fresh(n)
    queries = 0
    while not state.done:
        order = state.canonical_query(strategy(state, rng))
        members, outsiders, pivots = reveal(inside, order)
        gained = state.absorb(members, outsiders)
        queries += 1
        if log is not None:
            log.append((order, pivots, gained))
        if gained == 0:
            raise AssertionError("query revealed nothing")
    if any(inside[e] for e in state.B) or not all(inside[e] for e in state.A):
        raise AssertionError("misclassified element")
    return queries


def simulate_recognizer(strategy: str | Callable, n: int, seed, trials: int) -> SimulationResult:
    """Monte-Carlo query counts with ``R`` drawn by independent fair coins."""
    if n < 1 or trials < 1:
        raise DomainError("need n >= 1 and trials >= 1")
    name = strategy if isinstance(strategy, str) else getattr(strategy, "__name__", "custom")
    if isinstance(strategy, str):
        if strategy not in STRATEGIES:
            raise DomainError(f"unknown strategy {strategy!r}; choose from {sorted(STRATEGIES)}")
        strategy = STRATEGIES[strategy]
    rng = np.random.default_rng(seed)
    counts = np.empty(trials, dtype=np.int64)
    flagged = 0
    for t in range(trials):
        inside = (rng.random(n) < 0.5).tolist()
        k = sum(inside)
        if k == 0 or k == n:
            flagged += 1
        counts[t] = run_recognizer(strategy, inside, rng)
    return SimulationResult(name, n, trials, counts, n / counts.mean(), flagged)


def first_pivot_sample(n: int, samples: int, seed) -> np.ndarray:
    """Pivot ``i`` of a first query under a uniformly random order; ``n + 1`` when absent."""
    rng = np.random.default_rng(seed)
    inside = rng.random((samples, n)) < 0.5
    perm = np.argsort(rng.random((samples, n)), axis=1)
    ordered = np.take_along_axis(inside, perm, axis=1)
    outside = ~ordered
    first = outside.argmax(axis=1) + 1
    first[~outside.any(axis=1)] = n + 1
    return first


def geometric_chisquare(pivots: np.ndarray, bins: int = 10):
    """Chi-square of pivot positions against ``P[i = k] = 2^-k``, tail pooled past ``bins``."""
    observed = np.array([np.sum(pivots == k) for k in range(1, bins + 1)] + [np.sum(pivots > bins)])
    probs = np.array([2.0 ** -k for k in range(1, bins + 1)] + [2.0 ** -bins])
    return stats.chisquare(observed, probs * len(pivots))
