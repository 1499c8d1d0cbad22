"""End-to-end minimization routines and their run reports."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .descent import BoxDomain, SparseCapDomain, StepSchedule, run_descent
from .lovasz import SparseVector, best_prefix_set
from .oracle import CountingOracle, CutFunction, DomainError

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    minimizer: frozenset
    value: float
    eval_calls: int
    iterations: int
    batches: int
    seed: int | None
    elapsed: float
    algorithm: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        value = self.value
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        return {
            "algorithm": self.algorithm,
            "minimizer": sorted(int(i) for i in self.minimizer),
            "value": value,
            "eval_calls": self.eval_calls,
            "iterations": self.iterations,
            "batches": self.batches,
            "seed": self.seed,
            "elapsed_ms": round(self.elapsed * 1000.0, 3),
        }


def _counting(f, **checks) -> CountingOracle:
    return f if isinstance(f, CountingOracle) else CountingOracle(f, **checks)


class ExactGradients:
    """Exact subgradients kept current by the order tree's pruned repair."""

    deterministic = True

    def start(self, tree):
        self.tree = tree

    def estimate(self) -> SparseVector:
        return self.tree.nonzero_gradient()

    def advance(self, targets):
        self.tree.apply_targets_exact(targets)


class BatchedSampler:
    """Batched stochastic subgradients.

    Each batch starts from a full gradient and a one-point sample of it;
    every following step adds a difference estimate drawn with as many
    samples as the step index within the batch.  The estimate after the last
    step of a batch would be discarded by the next full gradient, so that
    step only moves the tree.
    """

    deterministic = False

    def __init__(self, batch_len: int, rng):
        if batch_len < 1:
            raise DomainError("batch length must be positive")
        self.batch_len = batch_len
        self.rng = rng
        self.batches = 0
        self.step = 0
        self.estimate_nnz = []

    def start(self, tree):
        self.tree = tree
        self.step = 0

    def _new_batch(self):
        tree = self.tree
        tree.refresh_gradient()
        g = np.asarray(tree.g[: tree.n], dtype=float)
        l1 = float(np.abs(g).sum())
        self.acc = {}
        if l1 > 0:
            j = int(self.rng.choice(tree.n, p=np.abs(g) / l1))
            self.acc[j] = math.copysign(l1, g[j])
        self.batches += 1
        self.step = 1

    def estimate(self) -> SparseVector:
        if self.step == 0:
            self._new_batch()
        self.estimate_nnz.append(len(self.acc))
        return SparseVector(self.acc)

    def advance(self, targets):
        tree = self.tree
        if self.step >= self.batch_len:
            tree.set_keys(targets)
            self.step = 0
            return
        key = tree.key
        up = [(j, v) for j, v in targets if v > key[j]]
        down = [(j, v) for j, v in targets if v < key[j]]
        for part in (up, down):
            if not part:
                continue
            z = tree.prepare_targets(part).draw(self.step, self.rng).z
            for j, v in z.items():
                total = self.acc.get(j, 0.0) + v
                if total == 0:
                    self.acc.pop(j, None)
                else:
                    self.acc[j] = total
        self.step += 1


def _domain(n, sparsity, fast=True):
    if sparsity is None:
        return BoxDomain()
    if not 0 <= sparsity:
        raise DomainError("sparsity must be nonnegative")
    return SparseCapDomain(min(sparsity, n), fast=fast)


def _finish(oracle, outcome, *, algorithm, seed, start, batches=0, extra=None):
    value = oracle.value(frozenset(outcome.minimizer))
    report = RunReport(
        minimizer=frozenset(outcome.minimizer),
        value=value,
        eval_calls=oracle.total_calls,
        iterations=outcome.iterations,
        batches=batches,
        seed=seed,
        elapsed=time.perf_counter() - start,
        algorithm=algorithm,
    )
    report.extra.update(steps_executed=outcome.steps_executed, rounded_from=outcome.source)
    if extra:
        report.extra.update(extra)
    return report


def exact_schedule(n: int, M: float, step: str = "fixed", sparsity=None) -> StepSchedule:
    """Iteration budget ``20 d M^2`` with ``d = n`` (or the sparsity budget).

    ``step="fixed"`` uses ``eta = sqrt(d) / (18 M)``; ``step="theory"`` uses the
    subgradient-descent optimum for ``R^2 = d / 2`` and ``B = 3M``, whose
    averaged-iterate gap bound is ``3 / sqrt(20) < 1``.
    """
    d = n if sparsity is None else min(sparsity, n)
    d = max(d, 1)
    T = int(math.ceil(20 * d * M * M))
    if step == "fixed":
        return StepSchedule(math.sqrt(d) / (18 * M), T)
    if step == "theory":
        return StepSchedule.theory(d / 2, 9 * M * M, T)
    raise DomainError(f"unknown step rule {step!r}")


def exact_sfm(f, M=None, *, step="fixed", sparsity=None, seed=0, fast_projection=True,
              stop_when_stationary=True) -> RunReport:
    """Exact minimizer of an integer-valued submodular function with ``|f| <= M``.

    ``stop_when_stationary=False`` spends the full iteration budget even after
    the iterate stops moving (for measuring the worst-case query count).
    """
    start = time.perf_counter()
    oracle = _counting(f, require_integer=True)
    if M is None:
        M = oracle.bound
    if M < 0:
        raise DomainError("M must be nonnegative")
    certified = getattr(oracle, "bound", None)
    if certified is not None and M < certified:
        log.warning("M=%s is below the instance's own bound %s; exactness is not guaranteed", M, certified)
    name = "exact" if sparsity is None else "sparse-exact"
    if M == 0:
        value = oracle.value(frozenset())
        return RunReport(frozenset(), value, oracle.total_calls, 0, 0, seed,
                         time.perf_counter() - start, name, {"steps_executed": 0})
    schedule = exact_schedule(oracle.n, M, step, sparsity)
    domain = _domain(oracle.n, sparsity, fast_projection)
    outcome = run_descent(oracle, ExactGradients(), domain, schedule, seed=seed,
                          stop_when_stationary=stop_when_stationary)
    return _finish(oracle, outcome, algorithm=name, seed=seed, start=start,
                   extra={"eta": schedule.eta, "step": step})


def sparse_exact_sfm(f, M=None, s=None, **kwargs) -> RunReport:
    if s is None:
        raise DomainError("sparsity budget s is required")
    return exact_sfm(f, M, sparsity=s, **kwargs)


def approx_budget(n: int, eps: float, sparsity=None) -> tuple[int, int, int]:
    """``(N, batch length, batches)`` with ``N = 10 d ln^2 n / eps^2``, batch ``ceil(n^(1/3))``."""
    d = n if sparsity is None else max(1, min(sparsity, n))
    log_n = math.log(max(n, 2))
    N = int(math.ceil(10 * d * log_n * log_n / (eps * eps)))
    batch = int(math.ceil(round(n ** (1.0 / 3.0), 12)))
    batches = int(math.ceil(N / batch))
    return N, batch, batches


def approx_grad_sq(batch: int) -> float:
    """Second-moment bound ``18 (1 + H_batch)`` of a batched estimate for ``|f| <= 1``."""
    harmonic = sum(1.0 / t for t in range(1, batch + 1))
    return 18.0 * (1.0 + harmonic)


def approx_sfm(f, eps, seed=0, *, sparsity=None, fast_projection=True) -> RunReport:
    """Random set ``S`` with ``E f(S) <= min f + eps`` for ``|f| <= 1``."""
    start = time.perf_counter()
    if not 0 < eps <= 1:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    oracle = _counting(f)
    if oracle.bound > 1 + 1e-12:
        raise DomainError(f"approximate minimization needs |f| <= 1, got bound {oracle.bound}")
    n = oracle.n
    N, batch, batches = approx_budget(n, eps, sparsity)
    steps = batches * batch
    domain = _domain(n, sparsity, fast_projection)
    schedule = StepSchedule.theory(domain.radius_sq(n), approx_grad_sq(batch), steps)
    rng = np.random.default_rng(seed)
    provider = BatchedSampler(batch, rng)
    outcome = run_descent(oracle, provider, domain, schedule, seed=seed)
    name = "approx" if sparsity is None else "sparse-approx"
    nnz = provider.estimate_nnz
    return _finish(oracle, outcome, algorithm=name, seed=seed, start=start, batches=provider.batches,
                   extra={"N": N, "batch_len": batch, "eta": schedule.eta,
                          "max_estimate_nnz": max(nnz) if nnz else 0})


def sparse_approx_sfm(f, eps, s=None, seed=0, **kwargs) -> RunReport:
    if s is None:
        raise DomainError("sparsity budget s is required")
    return approx_sfm(f, eps, seed, sparsity=s, **kwargs)


class _Scaled:
    """``f / scale`` over a shared counting oracle, promising ``|f / scale| <= 1``."""

    integer_valued = False

    def __init__(self, oracle, scale):
        self.oracle = oracle
        self.scale = scale
        self.n = oracle.n
        self.bound = 1.0

    def value(self, members):
        return self.oracle.value(members) / self.scale


def multiplicative_approx(f, delta, seed=0) -> RunReport:
    """Set with ``E f(S) <= (1 - delta) min f`` for nonpositive ``f``.

    For nonpositive ``f`` the largest magnitude is ``|min f|``, so ``f / c`` is
    ``[-1, 0]``-valued exactly when ``c >= |min f|``.  Scales ``c`` run down
    through powers of two from the first one at or above the certified bound;
    at each scale the additive routine runs with ``eps = delta / 2`` on
    ``f / c``.  The search stops once the best set found has value at most
    ``-c / 2``: then ``c <= 2 |min f|`` and the additive error ``c delta / 2``
    is at most ``delta |min f|``.
    """
    start = time.perf_counter()
    if not 0 < delta <= 1:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    oracle = _counting(f, require_nonpositive=True)
    M = oracle.bound
    if not M > 0:
        raise DomainError("multiplicative approximation needs min f < 0; the bound is 0")
    scale = 2.0 ** math.ceil(math.log2(M))
    floor = M * 2.0 ** -30
    best_set, best_value = frozenset(), 0.0
    iterations = batches = 0
    scales = []
    level = 0
    while scale >= floor:
        scales.append(scale)
        rep = approx_sfm(_Scaled(oracle, scale), delta / 2, seed=seed + level)
        iterations += rep.iterations
        batches += rep.batches
        value = rep.value * scale
        if value < best_value:
            best_set, best_value = rep.minimizer, value
        if best_value <= -scale / 2:
            break
        scale /= 2
        level += 1
    value = oracle.value(best_set)
    return RunReport(best_set, value, oracle.total_calls, iterations, batches, seed,
                     time.perf_counter() - start, "mult", {"scales": scales})


def mincut_relaxation(cut: CutFunction, x) -> float:
    """``sum_{(a,b)} w_ab (y_b - y_a)^+`` with ``y = x`` on the ground set, ``y_s = 0``, ``y_t = 1``."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for a, b, w in cut._arcs:
        ya = 0.0 if a == -1 else 1.0 if a == -2 else x[a]
        yb = 0.0 if b == -1 else 1.0 if b == -2 else x[b]
        total += w * max(yb - ya, 0.0)
    return total


def mincut_gradient(cut: CutFunction, x) -> np.ndarray:
    """A subgradient of the relaxation (edges at equality contribute 0)."""
    x = np.asarray(x, dtype=float)
    g = np.zeros(cut.n)
    for a, b, w in cut._arcs:
        ya = 0.0 if a == -1 else 1.0 if a == -2 else x[a]
        yb = 0.0 if b == -1 else 1.0 if b == -2 else x[b]
        if yb > ya:
            if b >= 0:
                g[b] += w
            if a >= 0:
                g[a] -= w
    return g


class EdgeSampler:
    """One edge drawn proportionally to weight; its subgradient scaled by ``W / w``."""

    def __init__(self, cut: CutFunction, rng):
        arcs = cut._arcs
        self.tails = np.array([a for a, _, _ in arcs], dtype=np.int64)
        self.heads = np.array([b for _, b, _ in arcs], dtype=np.int64)
        weights = np.array([w for _, _, w in arcs], dtype=float)
        self.total = float(weights.sum())
        self.cdf = np.cumsum(weights) / self.total
        self.rng = rng

    def draws(self, count):
        idx = np.searchsorted(self.cdf, self.rng.random(count), side="right")
        return np.minimum(idx, len(self.cdf) - 1)

    def gradient(self, x, edge) -> tuple[tuple[int, float], ...]:
        a, b = int(self.tails[edge]), int(self.heads[edge])
        ya = 0.0 if a == -1 else 1.0 if a == -2 else x[a]
        yb = 0.0 if b == -1 else 1.0 if b == -2 else x[b]
        if yb <= ya:
            return ()
        out = []
        if b >= 0:
            out.append((b, self.total))
        if a >= 0:
            out.append((a, -self.total))
        return tuple(out)


def mincut_sgd(cut: CutFunction, eps, seed=0) -> RunReport:
    """Approximate s-t min cut by stochastic descent on the continuous relaxation.

    The error target ``eps`` is relative to the total weight ``W``: with
    ``T = ceil(2 |A| / eps^2)`` steps the expected relaxation gap of the
    averaged point is at most ``eps W``.  Threshold rounding of a point is a
    prefix scan of ``1 - x`` through the cut oracle.
    """
    start = time.perf_counter()
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    oracle = _counting(cut)
    n = cut.n
    W = cut.total_weight
    if W == 0:
        value = oracle.value(frozenset())
        return RunReport(frozenset(), value, oracle.total_calls, 0, 0, seed,
                         time.perf_counter() - start, "mincut")
    T = int(math.ceil(2 * n / (eps * eps)))
    schedule = StepSchedule.theory(n / 2, 2 * W * W, T)
    rng = np.random.default_rng(seed)
    sampler = EdgeSampler(cut, rng)
    x = np.zeros(n)
    running = np.zeros(n)
    eta = schedule.eta
    for edge in sampler.draws(T).tolist():
        running += x
        for j, v in sampler.gradient(x, edge):
            x[j] = min(max(x[j] - eta * v, 0.0), 1.0)
    x_avg = running / T
    s_avg, v_avg = best_prefix_set(oracle, 1.0 - x_avg)
    s_fin, v_fin = best_prefix_set(oracle, 1.0 - x)
    best = s_fin if v_fin < v_avg else s_avg
    value = oracle.value(best)
    return RunReport(best, value, oracle.total_calls, T, 0, seed, time.perf_counter() - start, "mincut",
                     {"relaxation_average": mincut_relaxation(cut, x_avg)})
