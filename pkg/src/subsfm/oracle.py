"""Evaluation oracles for submodular set functions.

Ground sets are ``{0, ..., n-1}``.  Every concrete function implements
``raw(members)`` on an explicit set; :meth:`SubmodularFunction.value` returns
the normalized value ``raw(S) - raw(empty)``.  Algorithms never touch a raw
function directly: they go through a :class:`CountingOracle`, which charges
one query per evaluation and is the single source of truth for cost
accounting.
"""

from __future__ import annotations

from pathlib import Path
from typing import AbstractSet, Iterable, Sequence

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ContractViolation(RuntimeError):
    """A function value broke a promised property (integrality, sign, ...)."""


class InstanceFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class SubmodularFunction:
    """Base class for set functions on ``range(n)``.

    Subclasses set ``integer_valued`` and ``bound`` (a certified ``M`` with
    ``|f(S)| <= M`` for the normalized function) and implement :meth:`raw`.
    """

    integer_valued = False
    normalized = True

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"ground set size must be positive, got {n}")
        self.n = n
        self._empty = None

    def raw(self, members: AbstractSet[int]) -> float:
        raise NotImplementedError

    @property
    def empty_value(self) -> float:
        if self._empty is None:
            self._empty = self.raw(frozenset())
        return self._empty

    def value(self, members: AbstractSet[int]) -> float:
        v = self.raw(members)
        return v - self.empty_value if self.normalized else v

    def __call__(self, members: Iterable[int]) -> float:
        if not isinstance(members, (set, frozenset)):
            members = frozenset(members)
        return self.value(members)

    def evaluate_prefix(self, order: Sequence[int], k: int) -> float:
        """Normalized ``f({order[0], ..., order[k-1]})``."""
        if not 0 <= k <= self.n:
            raise DomainError(f"prefix length {k} outside [0, {self.n}]")
        return self.value(set(order[:k]))


class TableFunction(SubmodularFunction):
    """Explicit value table indexed by bitmask (element ``i`` is bit ``i``)."""

    MAX_N = 20

    def __init__(self, values: Sequence[float]):
        size = len(values)
        n = size.bit_length() - 1
        if n < 1 or 1 << n != size:
            raise DomainError(f"table length {size} is not 2^n with n >= 1")
        if n > self.MAX_N:
            raise DomainError(f"explicit tables are limited to n <= {self.MAX_N}")
        super().__init__(n)
        vals = list(values)
        self.integer_valued = all(float(v).is_integer() for v in vals)
        if self.integer_valued:
            vals = [int(v) for v in vals]
        self.values = vals
        base = vals[0]
        self.bound = max(abs(v - base) for v in vals)

    def raw(self, members):
        mask = 0
        for i in members:
            mask |= 1 << i
        return self.values[mask]

    def table(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=float)
        return arr - arr[0] if self.normalized else arr


class ModularFunction(SubmodularFunction):
    """``f(S) = sum_{i in S} c_i``."""

    def __init__(self, weights: Sequence[float]):
        super().__init__(len(weights))
        self.weights = list(weights)
        self.integer_valued = all(float(c).is_integer() for c in self.weights)
        pos = sum(c for c in self.weights if c > 0)
        neg = -sum(c for c in self.weights if c < 0)
        self.bound = max(pos, neg)

    def raw(self, members):
        w = self.weights
        return sum(w[i] for i in members)


class CutFunction(SubmodularFunction):
    """Directed s-t cut function.

    Vertices are ``0..n_vertices-1``; the ground set is every vertex other than
    ``s`` and ``t``, numbered in increasing vertex order.  ``raw(S)`` is the
    total weight of edges leaving ``S + {s}``.
    """

    def __init__(self, n_vertices: int, s: int, t: int, edges: Iterable[tuple[int, int, float]]):
        if s == t:
            raise DomainError("source and sink must differ")
        if not (0 <= s < n_vertices and 0 <= t < n_vertices):
            raise DomainError("source/sink outside vertex range")
        self.n_vertices = n_vertices
        self.s, self.t = s, t
        self.ground = [v for v in range(n_vertices) if v not in (s, t)]
        super().__init__(len(self.ground))
        index = {v: i for i, v in enumerate(self.ground)}
        index[s], index[t] = -1, -2
        self.edges = []
        for u, v, w in edges:
            if w < 0:
                raise DomainError(f"negative weight on edge ({u}, {v})")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise DomainError(f"edge ({u}, {v}) outside vertex range")
            if u != v and w > 0:
                self.edges.append((u, v, w))
        self._arcs = [(index[u], index[v], w) for u, v, w in self.edges]
        self.integer_valued = all(float(w).is_integer() for _, _, w in self.edges)
        self.total_weight = sum(w for _, _, w in self.edges)
        self.bound = self.total_weight

    def raw(self, members):
        total = 0
        for a, b, w in self._arcs:
            if (a == -1 or (a >= 0 and a in members)) and (b == -2 or (b >= 0 and b not in members)):
                total += w
        return total

    def cut_value(self, members: Iterable[int]) -> float:
        """Weight of the cut ``S + {s}`` (unnormalized)."""
        return self.raw(frozenset(members))

    def table(self) -> np.ndarray:
        """Normalized values of all ``2^n`` subsets, indexed by bitmask."""
        if self.n > TableFunction.MAX_N:
            raise DomainError("table materialization is limited to n <= 20")
        masks = np.arange(1 << self.n, dtype=np.int64)
        out = np.zeros(1 << self.n)
        for a, b, w in self._arcs:
            tail = np.ones_like(masks, dtype=bool) if a == -1 else (
                ((masks >> a) & 1).astype(bool) if a >= 0 else np.zeros_like(masks, dtype=bool))
            head_out = np.ones_like(masks, dtype=bool) if b == -2 else (
                ~((masks >> b) & 1).astype(bool) if b >= 0 else np.zeros_like(masks, dtype=bool))
            out += w * (tail & head_out)
        return out - out[0]


class LowerBoundFunction(SubmodularFunction):
    """The hard family ``f_R``: -1 at ``R``, 0 on strict sub/supersets, 1 elsewhere.

    With ``R`` empty the raw value at the empty set is -1; that instance is
    exposed unnormalized and flagged through :attr:`unnormalized`.
    """

    integer_valued = True

    def __init__(self, hidden: Iterable[int], n: int):
        super().__init__(n)
        self.hidden = frozenset(hidden)
        if any(not 0 <= r < n for r in self.hidden):
            raise DomainError("hidden set must be a subset of range(n)")
        self.unnormalized = not self.hidden
        self.normalized = not self.unnormalized
        self.bound = 1

    def raw(self, members):
        r = len(self.hidden)
        inside = sum(1 for e in self.hidden if e in members)
        size = len(members)
        if inside == r and size == r:
            return -1
        if inside == size or inside == r:
            return 0
        return 1


class ScaledFunction(SubmodularFunction):
    """``f / scale`` for a positive scale."""

    def __init__(self, inner: SubmodularFunction, scale: float):
        if scale <= 0:
            raise DomainError("scale must be positive")
        super().__init__(inner.n)
        self.inner = inner
        self.scale = scale
        self.normalized = inner.normalized
        self.bound = inner.bound / scale

    def raw(self, members):
        return self.inner.raw(members) / self.scale


class CountingOracle:
    """Query-counting wrapper; one instance per run.

    ``eval_calls`` counts evaluations requested by the caller and
    ``setup_calls`` the single charge for caching ``f(empty)``.  Optional
    contract checks raise :class:`ContractViolation` on the first bad value.
    """

    def __init__(self, inner: SubmodularFunction, *, require_integer=False, require_nonpositive=False):
        self.inner = inner
        self.n = inner.n
        self.eval_calls = 0
        self.setup_calls = 0
        self.subgradient_calls = 0
        self.require_integer = require_integer
        self.require_nonpositive = require_nonpositive
        self._checked = require_integer or require_nonpositive

    @property
    def bound(self):
        return self.inner.bound

    @property
    def integer_valued(self):
        return self.inner.integer_valued

    @property
    def total_calls(self) -> int:
        return self.eval_calls + self.setup_calls

    def value(self, members: AbstractSet[int]) -> float:
        if not self.setup_calls:
            self.setup_calls = 1
        self.eval_calls += 1
        v = self.inner.value(members)
        if self._checked:
            if self.require_integer and not float(v).is_integer():
                raise ContractViolation(f"non-integer value {v!r} in integer mode")
            if self.require_nonpositive and v > 0:
                raise ContractViolation(f"positive value {v!r} for a nonpositive instance")
        return v

    def __call__(self, members: Iterable[int]) -> float:
        if not isinstance(members, (set, frozenset)):
            members = frozenset(members)
        return self.value(members)

    def evaluate_prefix(self, order: Sequence[int], k: int) -> float:
        if not 0 <= k <= self.n:
            raise DomainError(f"prefix length {k} outside [0, {self.n}]")
        return self.value(set(order[:k]))


def random_cut_instance(n: int, density: float, weight_max: int, seed) -> CutFunction:
    """Random integer-weighted digraph on ``n`` ground vertices plus ``s``, ``t``.

    Ground vertex ``i`` has id ``i``; ``s = n`` and ``t = n + 1``.  Every ordered
    pair that can cross a cut (no edge into ``s`` or out of ``t``) is kept with
    probability ``density``, weight uniform in ``1..weight_max``.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if not 0 < density <= 1:
        raise DomainError("density must lie in (0, 1]")
    if weight_max < 1:
        raise DomainError("weight_max must be a positive integer")
    rng = np.random.default_rng(seed)
    s, t = n, n + 1
    edges = []
    for u in range(n + 2):
        if u == t:
            continue
        for v in range(n + 2):
            if v == u or v == s:
                continue
            if rng.random() < density:
                edges.append((u, v, int(rng.integers(1, weight_max + 1))))
    return CutFunction(n + 2, s, t, edges)


def random_table_instance(n: int, seed, *, weight_max: int = 3, integer: bool = True,
                          nonpositive: bool = False, unit: bool = False,
                          items: int | None = None) -> TableFunction:
    """Tabulated weighted coverage minus a modular term.

    ``nonpositive`` makes every modular weight dominate the singleton coverage,
    so ``f <= 0`` everywhere.  ``unit`` rescales by ``max |f|`` so values lie in
    ``[-1, 1]``.  ``items`` is the number of coverable items (default
    ``max(2, n)``); fewer items keep the value range small.
    """
    if not 1 <= n <= TableFunction.MAX_N:
        raise DomainError("table instances need 1 <= n <= 20")
    rng = np.random.default_rng(seed)
    items = max(2, n) if items is None else items
    if items < 1:
        raise DomainError("items must be positive")
    covers = rng.random((n, items)) < 0.35
    if integer:
        item_w = rng.integers(1, weight_max + 1, size=items).astype(float)
    else:
        item_w = rng.uniform(0.1, weight_max, size=items)
    singleton = covers @ item_w
    if nonpositive:
        extra = rng.integers(0, 2, size=n) if integer else rng.uniform(0, 1, size=n)
        mod = singleton + extra
    elif integer:
        mod = rng.integers(0, weight_max + 1, size=n) + np.floor(singleton / 2)
    else:
        mod = rng.uniform(0, 1, size=n) * singleton + rng.uniform(0, 1, size=n)
    masks = np.arange(1 << n)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    covered = (bits.astype(float) @ covers.astype(float)) > 0
    vals = covered @ item_w - bits @ mod
    if unit:
        scale = np.abs(vals).max()
        if scale > 0:
            vals = vals / scale
        return TableFunction([float(v) for v in vals])
    if integer:
        return TableFunction([int(round(v)) for v in vals])
    return TableFunction([float(v) for v in vals])


def lower_bound_instance(hidden: Iterable[int], n: int) -> LowerBoundFunction:
    return LowerBoundFunction(hidden, n)


def _parse_number(path, lineno, tok: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        raise InstanceFormatError(path, lineno, f"not a number: {tok!r}") from None


def _parse_int(path, lineno, tok: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceFormatError(path, lineno, f"not an integer: {tok!r}") from None


def load_instance(path) -> SubmodularFunction:
    """Read a ``cut``, ``table`` or ``lb`` instance file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceFormatError(path, 0, f"cannot read file ({exc.strerror})") from exc
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln]
    if not lines:
        raise InstanceFormatError(path, 1, "empty instance file")
    lineno, header = lines[0]
    head = header.split()
    kind = head[0]
    try:
        if kind == "cut":
            if len(head) != 4:
                raise InstanceFormatError(path, lineno, "expected 'cut n_vertices s_id t_id'")
            nv, s, t = (int(x) for x in head[1:])
            edges = []
            for ln, body in lines[1:]:
                parts = body.split()
                if len(parts) != 3:
                    raise InstanceFormatError(path, ln, "expected 'u v w'")
                u, v, w = (_parse_int(path, ln, p) for p in parts)
                if w < 0:
                    raise InstanceFormatError(path, ln, "edge weight must be nonnegative")
                if not (0 <= u < nv and 0 <= v < nv):
                    raise InstanceFormatError(path, ln, f"vertex outside 0..{nv - 1}")
                edges.append((u, v, w))
            return CutFunction(nv, s, t, edges)
        if kind == "table":
            if len(head) != 2:
                raise InstanceFormatError(path, lineno, "expected 'table n'")
            n = int(head[1])
            if not 1 <= n <= TableFunction.MAX_N:
                raise InstanceFormatError(path, lineno, "table instances need 1 <= n <= 20")
            values = [None] * (1 << n)
            for ln, body in lines[1:]:
                parts = body.split()
                if len(parts) != 2:
                    raise InstanceFormatError(path, ln, "expected 'bitmask value'")
                mask = _parse_int(path, ln, parts[0])
                if not 0 <= mask < 1 << n:
                    raise InstanceFormatError(path, ln, f"bitmask {mask} out of range")
                if values[mask] is not None:
                    raise InstanceFormatError(path, ln, f"duplicate bitmask {mask}")
                values[mask] = _parse_number(path, ln, parts[1])
            missing = [m for m, v in enumerate(values) if v is None]
            if missing:
                raise InstanceFormatError(path, lines[-1][0], f"missing bitmask {missing[0]}")
            return TableFunction(values)
        if kind == "lb":
            if len(head) != 2:
                raise InstanceFormatError(path, lineno, "expected 'lb n'")
            n = int(head[1])
            hidden = []
            for ln, body in lines[1:]:
                for tok in body.split():
                    r = _parse_int(path, ln, tok)
                    if not 0 <= r < n:
                        raise InstanceFormatError(path, ln, f"element {r} outside 0..{n - 1}")
                    hidden.append(r)
            return LowerBoundFunction(hidden, n)
    except InstanceFormatError:
        raise
    except (ValueError, DomainError) as exc:
        raise InstanceFormatError(path, lineno, str(exc)) from exc
    raise InstanceFormatError(path, lineno, f"unknown instance kind {kind!r}")
