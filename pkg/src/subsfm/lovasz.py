"""Lovász extension: values, subgradients and rounding back to sets."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np


class SparseVector:
    """Immutable sparse vector with sorted coordinates and no stored zeros."""

    __slots__ = ("coords", "values")

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        merged: dict[int, float] = {}
        for i, v in items:
            merged[i] = merged.get(i, 0) + v
        keys = sorted(i for i, v in merged.items() if v != 0)
        self.coords = tuple(keys)
        self.values = tuple(merged[i] for i in keys)

    @classmethod
    def from_dense(cls, dense) -> "SparseVector":
        return cls((int(i), dense[i]) for i in np.flatnonzero(np.asarray(dense)))

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        if self.coords:
            out[list(self.coords)] = self.values
        return out

    def items(self):
        return zip(self.coords, self.values)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.coords, self.values))

    @property
    def nnz(self) -> int:
        return len(self.coords)

    def __len__(self):
        return len(self.coords)

    def __bool__(self):
        return bool(self.coords)

    def __getitem__(self, i: int) -> float:
        try:
            return self.values[self.coords.index(i)]
        except ValueError:
            return 0

    def __add__(self, other: "SparseVector") -> "SparseVector":
        return SparseVector(list(self.items()) + list(other.items()))

    def __neg__(self):
        return SparseVector((i, -v) for i, v in self.items())

    def scale(self, c: float) -> "SparseVector":
        return SparseVector((i, c * v) for i, v in self.items())

    def positive_part(self) -> "SparseVector":
        return SparseVector((i, v) for i, v in self.items() if v > 0)

    def negative_part(self) -> "SparseVector":
        return SparseVector((i, v) for i, v in self.items() if v < 0)

    def l1(self) -> float:
        return sum(abs(v) for v in self.values)

    def sq_norm(self) -> float:
        return sum(v * v for v in self.values)

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self.coords == other.coords and self.values == other.values

    def __repr__(self):
        return f"SparseVector({dict(self.items())!r})"


def consistent_permutation(x) -> list[int]:
    """Coordinates by decreasing value, ties broken by smaller index first."""
    x = np.asarray(x, dtype=float)
    return np.argsort(-x, kind="stable").tolist()


def _check_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("point must be a vector")
    if x.size and (x.min() < 0 or x.max() > 1):
        raise ValueError("point must lie in [0, 1]^n")
    return x


def lovasz_value(f, x) -> float:
    """``f^(x) = sum_j f(P[j]) (x_{P_j} - x_{P_{j+1}})`` with ``x_{P_{n+1}} = 0``."""
    x = _check_point(x)
    order = consistent_permutation(x)
    n = len(order)
    total = 0.0
    for j in range(1, n + 1):
        nxt = x[order[j]] if j < n else 0.0
        total += f.evaluate_prefix(order, j) * (x[order[j - 1]] - nxt)
    return total


def subgradient_along(f, order) -> np.ndarray:
    """Prefix differences ``g_{P_k} = f(P[k]) - f(P[k-1])`` along ``order``."""
    n = len(order)
    g = np.zeros(n)
    prev = f.evaluate_prefix(order, 0)
    for k in range(1, n + 1):
        cur = f.evaluate_prefix(order, k)
        g[order[k - 1]] = cur - prev
        prev = cur
    return g


def full_subgradient(f, x) -> np.ndarray:
    """The Lovász subgradient at ``x`` (``n + 1`` prefix queries)."""
    x = _check_point(x)
    if hasattr(f, "subgradient_calls"):
        f.subgradient_calls += 1
    return subgradient_along(f, consistent_permutation(x))


def best_prefix_set(f, x) -> tuple[frozenset, float]:
    """Cheapest of the ``n + 1`` prefix sets of the permutation consistent with ``x``.

    The Lovász value is a nonnegative combination of prefix values, so the
    result never exceeds ``f^(x)`` when ``f(empty) = 0``.
    """
    x = _check_point(x)
    order = consistent_permutation(x)
    best_k, best_v = 0, f.evaluate_prefix(order, 0)
    for k in range(1, len(order) + 1):
        v = f.evaluate_prefix(order, k)
        if v < best_v:
            best_k, best_v = k, v
    return frozenset(order[:best_k]), best_v
