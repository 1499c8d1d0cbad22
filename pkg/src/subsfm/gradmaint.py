"""Order tree: an augmented treap that keeps ``x``, its consistent permutation
and the Lovász subgradient ``g(x)`` in sync under sparse edits.

Nodes are the coordinates ``0..n-1`` themselves, stored in parallel lists with
index ``n`` as the empty sentinel.  The in-order sequence is the consistent
permutation of the stored keys (larger key first, smaller index on ties) and
each node carries the sum of ``g`` over its subtree.  A plain Python list
``order`` mirrors the in-order sequence so that the prefix of a given rank can
be handed to the oracle without walking the tree.

Two update paths share the skeleton:

* :meth:`OrderTree.apply_update_exact` rekeys the touched nodes and then
  repairs ``g`` top-down, pruning every subtree whose stored sum already
  matches the two-query interval formula.  Pruning is sound for sign-uniform
  edits because every untouched coordinate moves in the same direction.
* :meth:`OrderTree.sample_difference` leaves the stored ``g`` alone and
  returns an unbiased sparse estimate of ``g(x + e) - g(x)``.
"""

from __future__ import annotations

import bisect
from collections.abc import Set
from dataclasses import dataclass

import numpy as np

from .lovasz import SparseVector, consistent_permutation
from .oracle import DomainError

_BOUND_SLACK = 1e-9


class PrefixSet(Set):
    """The first ``k`` coordinates of the tree order, as a lazy set.

    Membership is a key comparison against the last element of the prefix,
    so building one is O(1) and oracles that only test membership never pay
    for materializing the set.
    """

    __slots__ = ("_keys", "_order", "_k", "_lastkey", "_last")

    def __init__(self, keys, order, k):
        self._keys = keys
        self._order = order
        self._k = k
        if k:
            self._last = order[k - 1]
            self._lastkey = keys[self._last]

    def __contains__(self, i):
        if not self._k:
            return False
        ki = self._keys[i]
        return ki > self._lastkey or (ki == self._lastkey and i <= self._last)

    def __len__(self):
        return self._k

    def __iter__(self):
        return iter(self._order[: self._k])


class AdjustedSet(Set):
    """``base - drop | add`` where ``drop`` is inside ``base`` and ``add`` is not."""

    __slots__ = ("_base", "_drop", "_add", "_len")

    def __init__(self, base, drop, add):
        self._base, self._drop, self._add = base, drop, add
        self._len = len(base) - len(drop) + len(add)

    def __contains__(self, i):
        if i in self._add:
            return True
        return i not in self._drop and i in self._base

    def __len__(self):
        return self._len

    def __iter__(self):
        for i in self._base:
            if i not in self._drop:
                yield i
        yield from self._add


@dataclass
class DifferenceEstimate:
    z: SparseVector
    ell: int
    l1_mass: float


class OrderTree:
    """Treap over coordinates keyed by ``(key descending, index ascending)``.

    ``atol`` is the pruning tolerance of the exact repair (0 for integer
    instances).  ``bounds`` is the admissible key range; ``None`` disables the
    check, which the lazy-offset sparse-cap domain needs because it stores
    shifted keys.
    """

    def __init__(self, f, x, *, seed=0, atol=None, bounds=(0.0, 1.0), debug=False):
        x = np.asarray(x, dtype=float)
        n = f.n
        if x.shape != (n,):
            raise DomainError(f"point has shape {x.shape}, expected ({n},)")
        if bounds is not None and x.size and (x.min() < bounds[0] or x.max() > bounds[1]):
            raise DomainError("point outside the box")
        self.f = f
        self.n = n
        self.bounds = bounds
        if atol is None:
            atol = 0 if getattr(f, "integer_valued", False) else 1e-12 * max(1.0, float(getattr(f, "bound", 1.0)))
        self.atol = atol
        self.debug = debug
        self.pruned: list[tuple[int, int]] = []
        self.key = [float(v) for v in x]
        nil = n
        self.nil = nil
        rng = np.random.default_rng(seed)
        self.prio = rng.random(n + 1).tolist()
        self.prio[nil] = -1.0
        self.left = [nil] * (n + 1)
        self.right = [nil] * (n + 1)
        self.size = [1] * n + [0]
        self.g = [0] * (n + 1)
        self.gsum = [0] * (n + 1)
        self.order = consistent_permutation(x)
        self.root = self._build(self.order)
        self.f_empty = f.value(frozenset())
        self.f_full = f.value(frozenset(range(n))) if n else self.f_empty
        self.nonzero: set[int] = set()
        self.stale = True
        self.refresh_gradient()

    # ----------------------------------------------------------- structure

    def _build(self, order):
        """Cartesian tree on ``order`` by priority, O(n) with a stack."""
        nil = self.nil
        left, right, prio = self.left, self.right, self.prio
        stack: list[int] = []
        for v in order:
            last = nil
            while stack and prio[stack[-1]] < prio[v]:
                last = stack.pop()
            left[v] = last
            if stack:
                right[stack[-1]] = v
            stack.append(v)
        root = stack[0] if stack else nil
        self._pull_all(root)
        return root

    def _postorder(self, root):
        nil = self.nil
        out, stack = [], [root] if root != nil else []
        while stack:
            t = stack.pop()
            out.append(t)
            if self.left[t] != nil:
                stack.append(self.left[t])
            if self.right[t] != nil:
                stack.append(self.right[t])
        out.reverse()
        return out

    def _pull_all(self, root):
        size, gsum, g, left, right = self.size, self.gsum, self.g, self.left, self.right
        for t in self._postorder(root):
            l, r = left[t], right[t]
            size[t] = size[l] + size[r] + 1
            gsum[t] = gsum[l] + gsum[r] + g[t]

    def _pull(self, t):
        l, r = self.left[t], self.right[t]
        self.size[t] = self.size[l] + self.size[r] + 1
        self.gsum[t] = self.gsum[l] + self.gsum[r] + self.g[t]

    def _before(self, a, b):
        ka, kb = self.key[a], self.key[b]
        return ka > kb or (ka == kb and a < b)

    def _split(self, t, j):
        """Split into (nodes ordered before ``j``, the rest)."""
        nil = self.nil
        if t == nil:
            return nil, nil
        if self._before(t, j):
            a, b = self._split(self.right[t], j)
            self.right[t] = a
            self._pull(t)
            return t, b
        a, b = self._split(self.left[t], j)
        self.left[t] = b
        self._pull(t)
        return a, t

    def _merge(self, a, b):
        nil = self.nil
        if a == nil:
            return b
        if b == nil:
            return a
        if self.prio[a] > self.prio[b]:
            self.right[a] = self._merge(self.right[a], b)
            self._pull(a)
            return a
        self.left[b] = self._merge(a, self.left[b])
        self._pull(b)
        return b

    def _erase(self, t, j):
        if t == j:
            return self._merge(self.left[t], self.right[t])
        if self._before(j, t):
            self.left[t] = self._erase(self.left[t], j)
        else:
            self.right[t] = self._erase(self.right[t], j)
        self._pull(t)
        return t

    def _insert(self, t, j):
        nil = self.nil
        if t == nil:
            self.left[j] = self.right[j] = nil
            self._pull(j)
            return j
        if self.prio[j] > self.prio[t]:
            self.left[j], self.right[j] = self._split(t, j)
            self._pull(j)
            return j
        if self._before(j, t):
            self.left[t] = self._insert(self.left[t], j)
        else:
            self.right[t] = self._insert(self.right[t], j)
        self._pull(t)
        return t

    def rank(self, j: int) -> int:
        """1-based position of coordinate ``j`` in the order."""
        nil, left, right, size = self.nil, self.left, self.right, self.size
        t, r = self.root, 0
        while t != j:
            if t == nil:
                raise KeyError(j)
            if self._before(j, t):
                t = left[t]
            else:
                r += size[left[t]] + 1
                t = right[t]
        return r + size[left[j]] + 1

    def _path(self, j):
        path, t = [], self.root
        while t != j:
            path.append(t)
            t = self.left[t] if self._before(j, t) else self.right[t]
        path.append(j)
        return path

    def _set_g(self, j, value):
        self.g[j] = value
        if value != 0:
            self.nonzero.add(j)
        else:
            self.nonzero.discard(j)
        for t in reversed(self._path(j)):
            self._pull(t)

    def _rekey(self, j, new_key):
        key = self.key
        old = key[j]
        if new_key == old:
            return
        r = self.rank(j)
        order = self.order
        # A move that keeps both order neighbours on the same side needs no restructuring.
        prev = order[r - 2] if r > 1 else None
        nxt = order[r] if r < self.n else None
        key[j] = new_key
        if (prev is None or self._before(prev, j)) and (nxt is None or self._before(j, nxt)):
            return
        key[j] = old
        self.root = self._erase(self.root, j)
        del self.order[r - 1]
        self.key[j] = new_key
        self.root = self._insert(self.root, j)
        self.order.insert(self.rank(j) - 1, j)

    # ------------------------------------------------------------- queries

    def prefix(self, k: int) -> PrefixSet:
        return PrefixSet(self.key, self.order, k)

    def prefix_value(self, k: int):
        """``f`` of the first ``k`` coordinates (one query unless ``k`` is 0 or n)."""
        if k == 0:
            return self.f_empty
        if k == self.n:
            return self.f_full
        if not 0 < k < self.n:
            raise DomainError(f"prefix length {k} outside [0, {self.n}]")
        return self.f.value(self.prefix(k))

    def _cached_prefix(self):
        cache = {0: self.f_empty, self.n: self.f_full}

        def value(k):
            v = cache.get(k)
            if v is None:
                v = cache[k] = self.f.value(self.prefix(k))
            return v

        return value

    def interval_sum(self, a: int, b: int):
        """``sum_{i=a}^{b} g_{P_i}`` from two prefix queries."""
        if not 1 <= a <= b <= self.n:
            raise DomainError(f"rank interval [{a}, {b}] outside [1, {self.n}]")
        return self.f.value(self.prefix(b)) - self.f.value(self.prefix(a - 1))

    def stored_interval_sum(self, a: int, b: int):
        """Sum of stored ``g`` over ranks ``a..b`` read from subtree sums."""
        if not 1 <= a <= b <= self.n:
            raise DomainError(f"rank interval [{a}, {b}] outside [1, {self.n}]")
        return self._prefix_gsum(b) - self._prefix_gsum(a - 1)

    def _prefix_gsum(self, k):
        nil, left, right, size, gsum, g = self.nil, self.left, self.right, self.size, self.gsum, self.g
        t, total = self.root, 0
        while t != nil and k > 0:
            ls = size[left[t]]
            if k <= ls:
                t = left[t]
            else:
                total += gsum[left[t]] + g[t]
                k -= ls + 1
                t = right[t]
        return total

    def x(self) -> np.ndarray:
        return np.asarray(self.key, dtype=float)

    def gradient(self) -> np.ndarray:
        if self.stale:
            raise RuntimeError("stored gradient is stale; call refresh_gradient()")
        return np.asarray(self.g[: self.n], dtype=float)

    def nonzero_gradient(self) -> SparseVector:
        if self.stale:
            raise RuntimeError("stored gradient is stale; call refresh_gradient()")
        return SparseVector((j, self.g[j]) for j in self.nonzero)

    def subtree_sums_consistent(self) -> bool:
        """Recompute every subtree sum from scratch and compare (test hook)."""
        nil, left, right, g = self.nil, self.left, self.right, self.g
        sums = {nil: 0}
        sizes = {nil: 0}
        for t in self._postorder(self.root):
            sums[t] = sums[left[t]] + sums[right[t]] + g[t]
            sizes[t] = sizes[left[t]] + sizes[right[t]] + 1
            if sizes[t] != self.size[t] or abs(sums[t] - self.gsum[t]) > max(self.atol, 1e-9):
                return False
        inorder = []
        stack, t = [], self.root
        while stack or t != nil:
            while t != nil:
                stack.append(t)
                t = left[t]
            t = stack.pop()
            inorder.append(t)
            t = right[t]
        return inorder == self.order == consistent_permutation(self.key)

    # ------------------------------------------------------------- updates

    def refresh_gradient(self):
        """Recompute every ``g`` along the current order (n - 1 queries)."""
        value = self._cached_prefix()
        prev = value(0)
        g = self.g
        for r, j in enumerate(self.order, start=1):
            cur = value(r)
            g[j] = cur - prev
            prev = cur
        self.nonzero = {j for j in range(self.n) if g[j] != 0}
        self._pull_all(self.root)
        self.stale = False

    def _checked_targets(self, e: SparseVector):
        targets = []
        for j, d in e.items():
            if not 0 <= j < self.n:
                raise DomainError(f"coordinate {j} outside 0..{self.n - 1}")
            new = self.key[j] + d
            if self.bounds is not None:
                lo, hi = self.bounds
                if new < lo - _BOUND_SLACK or new > hi + _BOUND_SLACK:
                    raise DomainError(f"edit moves coordinate {j} to {new}, outside [{lo}, {hi}]")
                new = min(max(new, lo), hi)
            targets.append((j, new))
        return targets

    def shift(self, e: SparseVector):
        """Move ``x`` to ``x + e`` without touching the stored gradient."""
        for j, new in self._checked_targets(e):
            self._rekey(j, new)
        self.stale = True

    def set_keys(self, targets):
        """Assign explicit keys ``[(j, key), ...]`` (stored gradient goes stale)."""
        for j, new in targets:
            self._rekey(j, float(new))
        self.stale = True

    def apply_update_exact(self, e: SparseVector) -> list[int]:
        """Move to ``x + e`` and bring ``g`` up to date; returns changed coordinates."""
        if self.stale:
            raise RuntimeError("stored gradient is stale; call refresh_gradient()")
        self._checked_targets(e)
        changed: set[int] = set()
        for part in (e.positive_part(), e.negative_part()):
            if part:
                self._apply_part(self._checked_targets(part), changed)
        return sorted(changed)

    def apply_targets_exact(self, targets) -> list[int]:
        """Exact update to explicit keys; targets must all move the same way."""
        if self.stale:
            raise RuntimeError("stored gradient is stale; call refresh_gradient()")
        changed: set[int] = set()
        up = [(j, v) for j, v in targets if v > self.key[j]]
        down = [(j, v) for j, v in targets if v < self.key[j]]
        for part in (up, down):
            if part:
                self._apply_part(part, changed)
        return sorted(changed)

    def _apply_part(self, targets, changed):
        for j, new in targets:
            self._rekey(j, new)
        value = self._cached_prefix()
        for j, _ in targets:
            r = self.rank(j)
            own = value(r) - value(r - 1)
            if own != self.g[j]:
                self._set_g(j, own)
                changed.add(j)
        self._repair(value, changed)

    def _repair(self, value, changed):
        """Top-down comparison descent; prunes subtrees whose stored sum is already right."""
        nil, atol, debug = self.nil, self.atol, self.debug
        left, right, size, gsum, g = self.left, self.right, self.size, self.gsum, self.g
        nonzero, pruned = self.nonzero, self.pruned

        def visit(t, lo):
            hi = lo + size[t]
            if abs(gsum[t] - (value(hi) - value(lo))) <= atol:
                if debug:
                    pruned.append((lo + 1, hi))
                return
            l, r = left[t], right[t]
            mid = lo + size[l]
            if l != nil:
                visit(l, lo)
            own = value(mid + 1) - value(mid)
            if own != g[t]:
                g[t] = own
                if own != 0:
                    nonzero.add(t)
                else:
                    nonzero.discard(t)
                changed.add(t)
            if r != nil:
                visit(r, mid + 1)
            gsum[t] = gsum[l] + gsum[r] + own

        if self.root != nil:
            visit(self.root, 0)

    # ------------------------------------------------------------ sampling

    def prepare_difference(self, e: SparseVector) -> "DifferenceSampler":
        """Move to ``x + e`` and return a sampler for ``g(x + e) - g(x)``.

        ``e`` must be sign-uniform.  The stored gradient goes stale.
        """
        if any(v > 0 for v in e.values) and any(v < 0 for v in e.values):
            raise DomainError("edit mixes signs; split it into positive and negative parts")
        targets = self._checked_targets(e)
        self.stale = True
        if not targets:
            return DifferenceSampler([], [], self.f)
        return self._prepare_targets(targets)

    def prepare_targets(self, targets) -> "DifferenceSampler":
        """Like :meth:`prepare_difference` but with explicit same-direction keys."""
        self.stale = True
        targets = [(j, float(v)) for j, v in targets if v != self.key[j]]
        if not targets:
            return DifferenceSampler([], [], self.f)
        ups = sum(1 for j, v in targets if v > self.key[j])
        if 0 < ups < len(targets):
            raise DomainError("targets mix directions; split them first")
        return self._prepare_targets(targets)

    def _prepare_targets(self, targets):
        touched = [j for j, _ in targets]
        tset = set(touched)
        k = len(touched)
        m = self.n - k

        def untouched_before(ranks):
            # ranks: touched -> 1-based rank; count untouched placed ahead of each
            srt = sorted(ranks.values())
            return {j: r - 1 - bisect.bisect_left(srt, r) for j, r in ranks.items()}

        old_value = self._cached_prefix()
        old_rank = {j: self.rank(j) for j in touched}
        old_g = {j: old_value(r) - old_value(r - 1) for j, r in old_rank.items()}
        cx = untouched_before(old_rank)

        for j, new in targets:
            self._rekey(j, new)

        new_value = self._cached_prefix()
        new_rank = {j: self.rank(j) for j in touched}
        d = {j: (new_value(r) - new_value(r - 1)) - old_g[j] for j, r in new_rank.items()}
        cy = untouched_before(new_rank)

        cuts = sorted({0, m, *cx.values(), *cy.values()})
        runs = []
        for q0, q1 in zip(cuts, cuts[1:]):
            if q1 <= q0:
                continue
            ay = frozenset(j for j in touched if cy[j] <= q0)
            ax = frozenset(j for j in touched if cx[j] <= q0)
            runs.append(_Run(self, q0, q1, len(ay), ay - ax, ax - ay, new_value))
        items = [(j, dj) for j, dj in d.items() if dj != 0]
        return DifferenceSampler(items, [r for r in runs if r.mass != 0], self.f, tset)

    def sample_difference(self, e: SparseVector, ell: int, rng) -> DifferenceEstimate:
        """Move to ``x + e`` and draw an ``ell``-sample estimate of ``g(x + e) - g(x)``."""
        return self.prepare_difference(e).draw(ell, rng)

    def copy(self) -> "OrderTree":
        other = object.__new__(OrderTree)
        other.__dict__.update(self.__dict__)
        for name in ("key", "prio", "left", "right", "size", "g", "gsum", "order", "pruned"):
            setattr(other, name, list(getattr(self, name)))
        other.nonzero = set(self.nonzero)
        return other


class _Run:
    """Untouched coordinates with untouched-ranks ``q0..q1-1``.

    Contiguous in both the old and the new order.  Prefix values in the new
    order are ordinary tree prefixes; in the old order they are the same sets
    with the touched coordinates that crossed this run swapped back.
    """

    __slots__ = ("tree", "q0", "q1", "shift", "drop", "add", "new_value", "cache", "mass")

    def __init__(self, tree, q0, q1, shift, drop, add, new_value):
        self.tree = tree
        self.q0, self.q1 = q0, q1
        self.shift = shift
        self.drop, self.add = drop, add
        self.new_value = new_value
        self.cache = {}
        self.mass = self.interval_mass(q0, q1)

    def boundary_delta(self, q):
        """``f_new(prefix) - f_old(prefix)`` for the prefix ending before untouched-rank ``q``."""
        v = self.cache.get(q)
        if v is None:
            k = q + self.shift
            new = self.new_value(k)
            if self.drop or self.add:
                old = self.tree.f.value(AdjustedSet(self.tree.prefix(k), self.drop, self.add))
            else:
                old = new
            v = self.cache[q] = new - old
        return v

    def interval_mass(self, u0, u1):
        return self.boundary_delta(u1) - self.boundary_delta(u0)

    def coordinate(self, q):
        return self.tree.order[q + self.shift]

    def locate(self, u):
        """Walk down halves with ``u`` in [0, 1); returns the chosen coordinate."""
        lo, hi = self.q0, self.q1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            left = abs(self.interval_mass(lo, mid))
            right = abs(self.interval_mass(mid, hi))
            total = left + right
            if total == 0:
                # Only reachable through rounding; fall back to uniform halves.
                left, total = mid - lo, hi - lo
            if u * total < left:
                u = u * total / left
                hi = mid
            else:
                u = (u * total - left) / (total - left)
                lo = mid
            u = min(u, np.nextafter(1.0, 0.0))
        return self.coordinate(lo)


class DifferenceSampler:
    """Sampling state for one sign-uniform edit.

    ``items`` are explicit touched differences ``(j, d_j)`` and ``runs`` are the
    interval masses; each one-point sample picks an item or run with
    probability proportional to its absolute mass and, for runs, descends by
    halving to a single coordinate.
    """

    def __init__(self, items, runs, f, touched=frozenset()):
        self.items = items
        self.runs = runs
        self.f = f
        self.touched = touched
        weights = [abs(v) for _, v in items] + [abs(r.mass) for r in runs]
        self.l1_mass = float(sum(weights))
        self.cumulative = np.cumsum(weights).tolist() if weights else []

    def exact_masses(self):
        """Explicit touched differences and run masses (for tests)."""
        return list(self.items), [(r.q0, r.q1, r.mass) for r in self.runs]

    def one_point(self, u):
        """Coordinate and sign picked by the uniform ``u`` in [0, 1)."""
        target = u * self.l1_mass
        idx = bisect.bisect_right(self.cumulative, target)
        idx = min(idx, len(self.cumulative) - 1)
        lower = self.cumulative[idx - 1] if idx else 0.0
        width = self.cumulative[idx] - lower
        if idx < len(self.items):
            j, v = self.items[idx]
            return j, 1 if v > 0 else -1
        run = self.runs[idx - len(self.items)]
        inner = (target - lower) / width if width else 0.0
        inner = min(max(inner, 0.0), np.nextafter(1.0, 0.0))
        return run.locate(inner), 1 if run.mass > 0 else -1

    def draw(self, ell: int, rng) -> DifferenceEstimate:
        if ell < 1:
            raise DomainError("ell must be a positive integer")
        if self.l1_mass == 0:
            return DifferenceEstimate(SparseVector(), ell, 0.0)
        scale = self.l1_mass / ell
        acc: dict[int, float] = {}
        for u in rng.random(ell).tolist():
            j, sign = self.one_point(u)
            acc[j] = acc.get(j, 0.0) + sign * scale
        return DifferenceEstimate(SparseVector(acc), ell, self.l1_mass)
