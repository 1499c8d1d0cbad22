"""Projected (stochastic) subgradient descent over the box or the capped box.

The engine works in *key space*: the order tree stores one key per
coordinate and the domain object translates a sparse gradient estimate into
a sparse list of key assignments.  For the box the key is ``x`` itself.  The
capped box ``{x in [0,1]^n : sum x <= s}`` shifts every positive coordinate
by the same threshold on each step; instead of touching all of them the fast
path stores ``key = x + offset`` for positive coordinates and ``key = 0`` for
zeros, so only coordinates that hit zero need an explicit edit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gradmaint import OrderTree
from .lovasz import SparseVector, best_prefix_set
from .oracle import DomainError


@dataclass
class StepSchedule:
    eta: float
    T: int

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"step size must be positive, got {self.eta}")
        if self.T < 1:
            raise DomainError(f"iteration budget must be at least 1, got {self.T}")

    @classmethod
    def theory(cls, radius_sq: float, grad_sq: float, T: int) -> "StepSchedule":
        """``eta = (R / B) sqrt(2 / T)``, the minimizer of :meth:`gap_bound`, which is then ``R B sqrt(2 / T)``."""
        return cls(math.sqrt(radius_sq / grad_sq) * math.sqrt(2.0 / T), T)

    def gap_bound(self, radius_sq: float, grad_sq: float) -> float:
        """Guaranteed expected Lovász gap of the averaged iterate, ``R^2 / (eta T) + eta B^2 / 2``.

        ``radius_sq`` bounds ``||x* - x_1||^2 / 2`` and ``grad_sq`` the second moment of the estimates.
        """
        return radius_sq / (self.eta * self.T) + self.eta * grad_sq / 2


def project_box_edit(x, g: SparseVector, eta: float) -> SparseVector:
    """Edit ``e`` with ``x + e = clamp(x - eta g, 0, 1)``, supported on ``supp(g)``."""
    out = []
    for j, v in g.items():
        xj = float(x[j])
        new = min(max(xj - eta * v, 0.0), 1.0)
        if new != xj:
            out.append((j, new - xj))
    return SparseVector(out)


def sparse_cap_sum(y, lam: float) -> float:
    return float(np.clip(np.asarray(y, dtype=float) - lam, 0.0, 1.0).sum())


def sparse_cap_threshold(y, s: float) -> float:
    """Smallest ``lam >= 0`` with ``sum_i median(0, y_i - lam, 1) <= s``.

    The map is piecewise linear and nonincreasing with breakpoints at ``y_i``
    and ``y_i - 1``; it is evaluated at every positive breakpoint through
    prefix sums of the sorted ``y`` and interpolated on the crossing segment.
    """
    if s < 0:
        raise DomainError("sparsity budget must be nonnegative")
    y = np.asarray(y, dtype=float)
    if sparse_cap_sum(y, 0.0) <= s:
        return 0.0
    ys = np.sort(y)
    csum = np.concatenate([[0.0], np.cumsum(ys)])
    size = len(ys)

    def cap_sum(lams):
        # sum over y in (lam, lam + 1) of (y - lam), plus the count of y >= lam + 1
        lo = np.searchsorted(ys, lams, side="right")
        hi = np.searchsorted(ys, lams + 1.0, side="left")
        return (csum[hi] - csum[lo]) - (hi - lo) * lams + (size - hi)

    bps = np.unique(np.concatenate([ys, ys - 1.0]))
    bps = bps[bps > 0]
    vals = cap_sum(bps)
    idx = int(np.argmax(vals <= s))
    hi_lam, hi_val = bps[idx], vals[idx]
    lo_lam = bps[idx - 1] if idx else 0.0
    lo_val = vals[idx - 1] if idx else sparse_cap_sum(y, 0.0)
    if hi_val == s or lo_val == hi_val:
        return float(hi_lam)
    return float(lo_lam + (lo_val - s) * (hi_lam - lo_lam) / (lo_val - hi_val))


def project_sparse_cap(y, s: float) -> np.ndarray:
    """Euclidean projection of ``y`` onto ``{x in [0,1]^n : sum x <= s}``."""
    lam = sparse_cap_threshold(y, s)
    return np.clip(np.asarray(y, dtype=float) - lam, 0.0, 1.0)


class BoxDomain:
    """``[0, 1]^n``; keys equal coordinates."""

    offset = 0.0
    tree_bounds = (0.0, 1.0)

    def radius_sq(self, n: int) -> float:
        return n / 2

    def start(self, tree: OrderTree):
        self.tree = tree

    def targets(self, g: SparseVector, eta: float):
        key = self.tree.key
        out = []
        for j, v in g.items():
            new = min(max(key[j] - eta * v, 0.0), 1.0)
            if new != key[j]:
                out.append((j, new))
        return out

    def point(self) -> np.ndarray:
        return self.tree.x()


class SparseCapDomain:
    """``{x in [0,1]^n : sum x <= s}``.

    ``fast=True`` keeps positive coordinates as ``x + offset`` in the tree and
    finds the threshold from the touched coordinates plus the smallest
    untouched positives.  ``fast=False`` keeps the dense point and projects it
    with :func:`project_sparse_cap` every step; both produce the same iterates.
    """

    def __init__(self, s: float, fast: bool = True):
        if s < 0:
            raise DomainError("sparsity budget must be nonnegative")
        self.s = s
        self.fast = fast
        self.offset = 0.0
        self.tree_bounds = None if fast else (0.0, 1.0)

    def radius_sq(self, n: int) -> float:
        return min(self.s, n) / 2

    def start(self, tree: OrderTree):
        self.tree = tree
        self.offset = 0.0
        if self.fast:
            keys = tree.key
            self.pos_count = sum(1 for v in keys if v > 0)
            self.pos_keysum = math.fsum(v for v in keys if v > 0)
        else:
            self.dense = tree.x()

    def point(self) -> np.ndarray:
        if not self.fast:
            return self.dense.copy()
        keys = np.asarray(self.tree.key, dtype=float)
        return np.where(keys > 0, np.clip(keys - self.offset, 0.0, 1.0), 0.0)

    def targets(self, g: SparseVector, eta: float):
        if not self.fast:
            return self._dense_targets(g, eta)
        return self._offset_targets(g, eta)

    def _dense_targets(self, g, eta):
        y = self.dense.copy()
        for j, v in g.items():
            y[j] -= eta * v
        z = project_sparse_cap(y, self.s)
        changed = np.flatnonzero(z != self.dense)
        self.dense = z
        return [(int(j), float(z[j])) for j in changed]

    def _offset_targets(self, g, eta):
        tree, offset, s = self.tree, self.offset, self.s
        key, order = tree.key, tree.order
        touched = dict(g.items())
        y = {}
        touched_pos_keys = 0.0
        touched_pos = 0
        for j, v in touched.items():
            kj = key[j]
            xj = kj - offset if kj > 0 else 0.0
            if kj > 0:
                touched_pos += 1
                touched_pos_keys += kj
            y[j] = xj - eta * v
        active = self.pos_count - touched_pos
        # sum of x over untouched positives
        active_sum = (self.pos_keysum - touched_pos_keys) - active * offset if active else 0.0
        ylist = list(y.values())

        def touched_sum(lam):
            return sum(min(max(v - lam, 0.0), 1.0) for v in ylist)

        def tail():
            # untouched positive coordinates, smallest x first
            for r in range(self.pos_count - 1, -1, -1):
                j = order[r]
                if j not in touched:
                    yield j, key[j] - offset

        lam = 0.0
        prev_lam, prev_val = 0.0, active_sum + touched_sum(0.0)
        # running key sums carry rounding error; do not let it trigger a spurious shift
        if prev_val > s + 1e-12 * max(1.0, s):
            bps = sorted({b for v in ylist for b in (v, v - 1.0) if b > 0})
            bi = 0
            it = tail()
            nxt = next(it, None)
            while True:
                cand_t = nxt[1] if nxt is not None else math.inf
                cand_b = bps[bi] if bi < len(bps) else math.inf
                c = min(cand_t, cand_b)
                if c == math.inf:
                    # only reachable through rounding: everything is already at zero
                    lam = prev_lam
                    break
                val = max(active_sum - active * c, 0.0) + touched_sum(c)
                if val <= s:
                    if val == s or prev_val == val:
                        lam = c
                    else:
                        lam = prev_lam + (prev_val - s) * (c - prev_lam) / (prev_val - val)
                    break
                if cand_t <= cand_b:
                    active_sum -= nxt[1]
                    active -= 1
                    nxt = next(it, None)
                else:
                    bi += 1
                prev_lam, prev_val = c, val
        new_offset = offset + lam
        out = []
        for j, v in y.items():
            zj = min(max(v - lam, 0.0), 1.0)
            out.append((j, zj + new_offset if zj > 0 else 0.0))
        if lam > 0:
            for r in range(self.pos_count - 1, -1, -1):
                j = order[r]
                if j in touched:
                    continue
                if key[j] > new_offset:
                    break
                out.append((j, 0.0))
        out = [(j, v) for j, v in out if v != key[j]]
        for j, v in out:
            if key[j] > 0:
                self.pos_count -= 1
                self.pos_keysum -= key[j]
            if v > 0:
                self.pos_count += 1
                self.pos_keysum += v
        self.offset = new_offset
        return out


class IterateAverager:
    """Running sum of iterates with per-coordinate lazy flushing.

    Between two edits of coordinate ``j`` its key is constant, so its
    contribution over iterates ``a..b`` is ``key * (b - a + 1)`` minus the
    offsets in force during those iterates (zero coordinates contribute 0).
    """

    def __init__(self, keys):
        n = len(keys)
        self.acc = [0.0] * n
        self.since = [1] * n
        self.offset_before = [0.0] * n
        self.offset_total = 0.0  # sum of offsets of all closed iterates
        self.closed = 0

    def close_iterate(self, offset: float):
        self.closed += 1
        self.offset_total += offset

    def flush(self, j: int, key: float):
        count = self.closed - self.since[j] + 1
        if count > 0 and key > 0:
            self.acc[j] += key * count - (self.offset_total - self.offset_before[j])
        self.since[j] = self.closed + 1
        self.offset_before[j] = self.offset_total

    def average(self, keys) -> np.ndarray:
        for j, k in enumerate(keys):
            self.flush(j, k)
        if not self.closed:
            return np.zeros(len(keys))
        return np.clip(np.asarray(self.acc) / self.closed, 0.0, 1.0)


@dataclass
class DescentOutcome:
    minimizer: frozenset
    value: float
    iterations: int
    steps_executed: int
    average: np.ndarray
    final: np.ndarray
    source: str
    extra: dict = field(default_factory=dict)


def run_descent(f, provider, domain, schedule: StepSchedule, *, seed=0, check=False,
                stop_when_stationary=True) -> DescentOutcome:
    """Projected descent from ``x = 0`` for ``schedule.T`` steps.

    ``provider`` owns the gradient side: ``start(tree)``, ``estimate()`` and
    ``advance(targets)``.  The best prefix set of the averaged iterate and of
    the final iterate are both evaluated and the cheaper one is returned (the
    averaged one on ties).  A deterministic provider that proposes no move
    with no offset change has reached a fixed point, so the remaining steps
    are skipped; the average still weights the fixed point by the skipped
    steps.  ``stop_when_stationary=False`` runs every step regardless.
    """
    n = f.n
    tree = OrderTree(f, np.zeros(n), seed=seed, bounds=domain.tree_bounds)
    domain.start(tree)
    provider.start(tree)
    avg = IterateAverager(tree.key)
    eta = schedule.eta
    steps = 0
    for _ in range(schedule.T):
        g = provider.estimate()
        before = domain.offset
        targets = domain.targets(g, eta)
        avg.close_iterate(before)
        steps += 1
        if (stop_when_stationary and not targets and getattr(provider, "deterministic", False)
                and domain.offset == before):
            for _ in range(schedule.T - steps):
                avg.close_iterate(before)
            break
        for j, _ in targets:
            avg.flush(j, tree.key[j])
        provider.advance(targets)
        if check:
            point = domain.point()
            if point.min() < -1e-12 or point.max() > 1 + 1e-12:
                raise AssertionError("iterate left the unit box")
            if isinstance(domain, SparseCapDomain) and point.sum() > domain.s + 1e-9:
                raise AssertionError("iterate exceeds the sparsity cap")
    final_keys = list(tree.key)
    # the average covers iterates 1..T; the last edit produced iterate T + 1
    x_avg = avg.average(final_keys)
    x_final = domain.point()
    s_avg, v_avg = best_prefix_set(f, x_avg)
    s_fin, v_fin = best_prefix_set(f, x_final)
    if v_fin < v_avg:
        best, value, source = s_fin, v_fin, "final"
    else:
        best, value, source = s_avg, v_avg, "average"
    return DescentOutcome(best, value, schedule.T, steps, x_avg, x_final, source)
