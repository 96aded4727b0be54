"""From scores to vertex correspondences.

* :func:`match_by_threshold` keeps row i when exactly one column reaches tau.
* :func:`seeded_match` grows a correct partial matching by repeatedly adding a
  pair whose number of seed-witnessed common neighbors reaches
  ``gamma (n - 2) q^2``.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvariantError, ParameterError

DENSE_COUNTER_MAX_N = 5000


@dataclass
class PartialMatching:
    """Injective partial map from vertices of A to vertices of B."""

    n: int
    pairs: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.pairs = {int(i): int(j) for i, j in self.pairs.items()}
        if len(set(self.pairs.values())) != len(self.pairs):
            raise ParameterError("matching is not injective")
        for i, j in self.pairs.items():
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ParameterError(f"pair ({i}, {j}) out of range for n={self.n}")

    @property
    def domain(self) -> list[int]:
        return sorted(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def __contains__(self, i):
        return i in self.pairs

    def as_array(self) -> np.ndarray:
        """Length-n array with -1 for unmatched rows."""
        out = np.full(self.n, -1, dtype=np.int64)
        for i, j in self.pairs.items():
            out[i] = j
        return out

    @classmethod
    def from_array(cls, arr) -> "PartialMatching":
        arr = np.asarray(arr)
        return cls(len(arr), {int(i): int(j) for i, j in enumerate(arr) if j >= 0})

    def write(self, path) -> None:
        Path(path).write_text("".join(f"{i} {self.pairs[i]}\n" for i in self.domain))

    @classmethod
    def read(cls, path, n: int) -> "PartialMatching":
        pairs = {}
        for ln in Path(path).read_text().splitlines():
            ln = ln.strip()
            if ln and not ln.startswith("#"):
                i, j = map(int, ln.split())
                if i in pairs:
                    raise ParameterError(f"{path}: vertex {i} matched twice")
                pairs[i] = j
        return cls(n, pairs)


def match_by_threshold(scores, tau: float) -> PartialMatching:
    """Row i -> j iff j is the only column with ``scores[i, j] >= tau``.

    Rows that end up sharing a column are all dropped.
    """
    S = np.asarray(getattr(scores, "scores", scores), dtype=float)
    if not np.all(np.isfinite(S)):
        raise ParameterError("scores must be finite")
    above = S >= tau
    unique_rows = np.flatnonzero(above.sum(axis=1) == 1)
    cols = np.argmax(above[unique_rows], axis=1)
    taken = Counter(cols.tolist())
    pairs = {int(i): int(j) for i, j in zip(unique_rows, cols) if taken[int(j)] == 1}
    return PartialMatching(S.shape[0], pairs)


def rate_h(x: float) -> float:
    """x log x - x + 1 for x > 0 (and 1 at x = 0)."""
    if x < 0:
        raise ParameterError("h is defined for x >= 0")
    if x == 0:
        return 1.0
    d = x - 1.0
    return x * math.log1p(d) - d


def solve_gamma(target: float) -> float:
    """The root gamma > 1 of h(gamma) = target, by bisection."""
    if not target > 0 or not math.isfinite(target):
        raise ParameterError(f"target must be a positive finite number, got {target}")
    lo, hi = 1.0, max(math.e, target + math.e)
    while rate_h(hi) < target:
        lo, hi = hi, 2.0 * hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if rate_h(mid) < target:
            lo = mid
        else:
            hi = mid
    best = min((lo, hi), key=lambda x: abs(rate_h(x) - target))
    return best if best > 1.0 else hi


def seeded_gamma(n: int, q: float) -> float:
    """gamma solving h(gamma) = 3 log n / ((n - 2) q^2)."""
    return solve_gamma(3.0 * math.log(n) / ((n - 2) * q * q))


def _count_product(X, Y) -> np.ndarray:
    # float32 BLAS is exact for integer sums below 2**24
    if X.shape[1] >= 2**24:
        return X.astype(np.int64) @ Y.astype(np.int64).T
    return np.rint(X.astype(np.float32) @ Y.astype(np.float32).T).astype(np.int32)


class SeedState:
    """Current map, matched sets and common-neighbor counters N(i, j).

    N(i, j) counts matched u with A[i, u] = 1 and B[j, map(u)] = 1; it is kept
    up to date incrementally as pairs are inserted.
    """

    def __init__(self, A, B, seeds: PartialMatching, threshold: float, dense: bool | None = None):
        self.A = np.asarray(A, dtype=bool)
        self.B = np.asarray(B, dtype=bool)
        self.n = self.A.shape[0]
        self.threshold = threshold
        self.map: dict[int, int] = dict(seeds.pairs)
        self.matched_a = np.zeros(self.n, dtype=bool)
        self.matched_b = np.zeros(self.n, dtype=bool)
        for i, j in self.map.items():
            self.matched_a[i] = True
            self.matched_b[j] = True
        self.dense = self.n <= DENSE_COUNTER_MAX_N if dense is None else dense
        self._nbr_a = [np.flatnonzero(row) for row in self.A]
        self._nbr_b = [np.flatnonzero(row) for row in self.B]
        if self.dense:
            dom = np.array(sorted(self.map), dtype=np.int64)
            img = np.array([self.map[u] for u in dom], dtype=np.int64)
            if len(dom):
                self.counts = _count_product(self.A[:, dom], self.B[:, img])
            else:
                self.counts = np.zeros((self.n, self.n), dtype=np.int32)
        else:
            self.counts = Counter()
            for u, v in self.map.items():
                self._bump(u, v)

    def count(self, i: int, j: int) -> int:
        return int(self.counts[i, j]) if self.dense else self.counts.get((i, j), 0)

    def qualifying(self) -> list[tuple[int, int]]:
        """All open pairs at or above threshold, in lexicographic order."""
        if self.dense:
            mask = self.counts >= self.threshold
            mask[self.matched_a, :] = False
            mask[:, self.matched_b] = False
            return [(int(i), int(j)) for i, j in zip(*np.nonzero(mask))]
        return sorted((i, j) for (i, j), c in self.counts.items()
                      if c >= self.threshold and not self.matched_a[i] and not self.matched_b[j])

    def _bump(self, u: int, v: int) -> list[tuple[int, int]]:
        ia, jb = self._nbr_a[u], self._nbr_b[v]
        if len(ia) == 0 or len(jb) == 0:
            return []
        if self.dense:
            block = np.ix_(ia, jb)
            self.counts[block] += 1
            hit = self.counts[block] >= self.threshold
            hit &= (self.counts[block] - 1 < self.threshold)
            r, c = np.nonzero(hit)
            return [(int(ia[x]), int(jb[y])) for x, y in zip(r, c)]
        crossed = []
        for i in ia.tolist():
            for j in jb.tolist():
                c = self.counts[(i, j)] = self.counts.get((i, j), 0) + 1
                if c >= self.threshold > c - 1:
                    crossed.append((i, j))
        return crossed

    def insert(self, i: int, j: int) -> list[tuple[int, int]]:
        """Match i -> j; returns pairs that just reached the threshold (lex order)."""
        self.map[i] = j
        self.matched_a[i] = True
        self.matched_b[j] = True
        return sorted(self._bump(i, j))

    def recount(self) -> np.ndarray:
        """Full recomputation of the counters (for checking the invariant)."""
        dom = np.array(sorted(self.map), dtype=np.int64)
        if not len(dom):
            return np.zeros((self.n, self.n), dtype=np.int64)
        img = np.array([self.map[u] for u in dom], dtype=np.int64)
        return _count_product(self.A[:, dom], self.B[:, img]).astype(np.int64)

    def as_dense(self) -> np.ndarray:
        if self.dense:
            return np.asarray(self.counts, dtype=np.int64)
        out = np.zeros((self.n, self.n), dtype=np.int64)
        for (i, j), c in self.counts.items():
            out[i, j] = c
        return out

    def matching(self) -> PartialMatching:
        return PartialMatching(self.n, dict(self.map))


def seeded_match(A, B, seeds: PartialMatching, q: float | None = None, gamma: float | None = None,
                 dense: bool | None = None, on_insert=None) -> PartialMatching:
    """Percolation-style completion of an error-free seed matching.

    Qualifying pairs are processed FIFO; pairs that qualify at the same moment
    enter the queue in lexicographic order.  ``q`` defaults to the pooled edge
    density of A and B and ``gamma`` to :func:`seeded_gamma`.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    n = A.shape[0]
    if seeds.n != n:
        raise ParameterError(f"seed matching has n={seeds.n}, graphs have n={n}")
    if q is None:
        q = float(A.sum() + B.sum()) / (2 * n * (n - 1))
    if gamma is None:
        if q <= 0 or n < 3:
            return PartialMatching(n, dict(seeds.pairs))
        gamma = seeded_gamma(n, q)
    threshold = gamma * (n - 2) * q * q
    state = SeedState(A, B, seeds, threshold, dense=dense)
    frontier = deque(state.qualifying())
    while frontier:
        i, j = frontier.popleft()
        if state.matched_a[i] or state.matched_b[j]:
            continue
        if state.count(i, j) < threshold:
            raise InvariantError(f"queued pair ({i}, {j}) fell below threshold")
        frontier.extend(state.insert(i, j))
        if on_insert is not None:
            on_insert(state, i, j)
    return state.matching()


def evaluate(matching: PartialMatching, truth) -> dict:
    """Precision on the matched domain, coverage |I|/n, accuracy on [n], exact recovery."""
    truth = np.asarray(truth)
    n = len(truth)
    correct = sum(1 for i, j in matching.pairs.items() if truth[i] == j)
    size = len(matching)
    return {
        "precision": correct / size if size else 1.0,
        "coverage": size / n,
        "accuracy": correct / n,
        "exact": bool(correct == n),
        "matched": size,
        "correct": correct,
    }
