"""Signed rooted tree counts on a weighted host.

``W_{i,H}(M)`` sums, over copies ``S`` of the rooted tree ``H`` in the complete
graph with root at ``i``, the product of the host weights on the edges of S.

Three routes are provided:

* :func:`exact_signed_count` - backtracking over injective embeddings (tiny
  instances only).
* :func:`signed_counts` - exact for every root at once, by Moebius inversion
  over vertex partitions of H: injective sums are an alternating combination of
  unrestricted (homomorphism) sums, each of which is a small tensor
  contraction.
* color coding - :func:`colorful_count_all_roots` and the chandelier helpers
  count only copies whose vertices get pairwise distinct colors, with a DP over
  color subsets.  Dividing by ``r = (N+1)!/(N+1)^(N+1)`` gives an unbiased
  estimate of W.

Floating point is float64 throughout.  Counts are bounded by
``n^N max|w|^N``, e.g. below 1e93 for n = 1e4, N = 23, which is far from
overflow.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .exceptions import BudgetExceededError, CapExceededError, ParameterError
from .model import make_rng
from .trees import Chandelier, RootedTreeShape, branch_levels, children_lists, path_shape

MAX_WIDTH = 24
BACKTRACK_MAX_EDGES = 6
BACKTRACK_MAX_N = 40
MOBIUS_MAX_VERTICES = 9
DEFAULT_MEMORY_BUDGET = 2 * 1024**3


class WeightedHost:
    """Symmetric real weights on ``[n]`` with zero diagonal."""

    def __init__(self, weights, check: bool = True):
        W = np.array(weights, dtype=float)
        if check:
            if W.ndim != 2 or W.shape[0] != W.shape[1]:
                raise ParameterError("weights must be a square matrix")
            if not np.array_equal(W, W.T):
                raise ParameterError("weights must be symmetric")
            if np.any(np.diag(W) != 0):
                raise ParameterError("weights must have a zero diagonal")
        W.setflags(write=False)
        self.weights = W

    @classmethod
    def from_adjacency(cls, A, q: float) -> "WeightedHost":
        W = np.asarray(A, dtype=float) - q
        np.fill_diagonal(W, 0.0)
        return cls(W)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self.weights)

    def scaled(self, c: float) -> "WeightedHost":
        return WeightedHost(self.weights * c, check=False)


def colorful_probability(N: int) -> float:
    """Probability that N + 1 vertices receive pairwise distinct colors out of N + 1."""
    k = N + 1
    return math.factorial(k) / k**k


@dataclass(frozen=True)
class Coloring:
    colors: np.ndarray
    N: int
    seed: int | None = None

    def __post_init__(self):
        c = np.asarray(self.colors, dtype=np.int64)
        if c.size and (c.min() < 0 or c.max() > self.N):
            raise ParameterError(f"colors must lie in [0, {self.N}]")
        object.__setattr__(self, "colors", c)

    @classmethod
    def random(cls, n: int, N: int, seed: int) -> "Coloring":
        return cls(make_rng(seed).integers(0, N + 1, size=n), N, seed)

    def is_colorful(self, vertices) -> bool:
        cols = self.colors[list(vertices)]
        return len(set(cols.tolist())) == len(cols)


def random_colorings(n: int, N: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, N + 1, size=(count, n))


# -- color-subset bookkeeping ------------------------------------------------

class _MaskSpace:
    """Color subsets over k colors, grouped by popcount, with merge plans."""

    def __init__(self, k: int):
        if k > MAX_WIDTH:
            raise CapExceededError(f"{k} colors exceeds the bitmask width cap {MAX_WIDTH}")
        self.k = k
        self.by_size = []
        for s in range(k + 1):
            masks = np.array([sum(1 << b for b in bits) for bits in combinations(range(k), s)],
                             dtype=np.int64)
            masks.sort()
            self.by_size.append(masks)
        self._rank = [dict(zip(m.tolist(), range(len(m)))) for m in self.by_size]
        self._plans = {}

    def width(self, s: int) -> int:
        return len(self.by_size[s])

    def plan(self, a: int, b: int) -> tuple[np.ndarray, np.ndarray, int, int]:
        """Index arrays for merging tables of popcount ``a`` and ``b`` into ``a + b``.

        For every output mask S (sorted) and every split S = S1 + S2 with
        |S1| = a, returns positions of S1 and S2; rows are grouped by S with
        ``C(a+b, a)`` splits each.
        """
        key = (a, b)
        if key not in self._plans:
            out = self.by_size[a + b]
            bits = np.array([[1 << t for t in range(self.k) if (int(S) >> t) & 1] for S in out],
                            dtype=np.int64).reshape(len(out), a + b)
            combos = np.array(list(combinations(range(a + b), a)), dtype=np.int64)
            left = bits[:, combos].sum(axis=-1)
            right = out[:, None] - left
            li = np.vectorize(self._rank[a].__getitem__, otypes=[np.int64])(left).ravel()
            ri = np.vectorize(self._rank[b].__getitem__, otypes=[np.int64])(right).ravel()
            self._plans[key] = (li, ri, len(out), combos.shape[0])
        return self._plans[key]

    def single_plan(self, b: int) -> np.ndarray:
        """(k, C(k, b+1)) positions of S minus {color} among size-b masks; -1 if color not in S."""
        key = ("single", b)
        if key not in self._plans:
            out = self.by_size[b + 1]
            G = np.full((self.k, len(out)), -1, dtype=np.int64)
            rank = self._rank[b]
            for c in range(self.k):
                bit = 1 << c
                for t, S in enumerate(out.tolist()):
                    if S & bit:
                        G[c, t] = rank[S ^ bit]
            self._plans[key] = G
        return self._plans[key]


@lru_cache(maxsize=32)
def mask_space(k: int) -> _MaskSpace:
    return _MaskSpace(k)


class _Leaf:
    """Tables of a single vertex: one-hot on the vertex's own color, kept implicit."""

    def __init__(self, colors: np.ndarray, k: int):
        self.colors = colors.T.copy()  # (n, B)
        self.k = k
        flat = self.colors.ravel()
        self.order = np.argsort(flat, kind="stable")
        self.bounds = np.searchsorted(flat[self.order], np.arange(k + 1))

    def dense(self) -> np.ndarray:
        n, B = self.colors.shape
        T = np.zeros((n, B, self.k))
        np.put_along_axis(T, self.colors[:, :, None], 1.0, axis=2)
        return T


def _push(W: np.ndarray, T: np.ndarray) -> np.ndarray:
    """out[i, b, m] = sum_j W[i, j] T[j, b, m] as one matrix product."""
    n, B, m = T.shape
    return (W @ T.reshape(n, B * m)).reshape(n, B, m)


def _fold(space: _MaskSpace, part, a: int, pushed: np.ndarray, b: int) -> np.ndarray:
    """Disjoint-color product of a partial table (popcount a) with a pushed child table (b)."""
    if isinstance(part, _Leaf):
        # one-hot partial: out[S] = pushed[S - color(i)] when color(i) is in S
        G = space.single_plan(b)
        n, B, m = pushed.shape
        flat = pushed.reshape(n * B, m)
        out = np.zeros((n * B, G.shape[1]))
        for c in range(part.k):
            rows = part.order[part.bounds[c]:part.bounds[c + 1]]
            cols = np.flatnonzero(G[c] >= 0)
            out[rows[:, None], cols] = flat[rows][:, G[c, cols]]
        return out.reshape(n, B, G.shape[1])
    li, ri, nout, splits = space.plan(a, b)
    prod = part[:, :, li] * pushed[:, :, ri]
    return prod.reshape(part.shape[0], part.shape[1], nout, splits).sum(axis=-1)


def _subtree_table(W, kids, v, leaf: _Leaf, space) -> tuple[int, np.ndarray]:
    size, part = 1, leaf
    for c in kids[v]:
        cs, ct = _subtree_table(W, kids, c, leaf, space)
        part = _fold(space, part, size, _push(W, ct), cs)
        size += cs
    if isinstance(part, _Leaf):
        part = part.dense()
    return size, part


def _as_color_batch(coloring, n: int, N: int) -> np.ndarray:
    if isinstance(coloring, Coloring):
        if coloring.N != N:
            raise ParameterError(f"coloring has N={coloring.N} but the tree has N={N}")
        colors = coloring.colors[None, :]
    else:
        colors = np.atleast_2d(np.asarray(coloring, dtype=np.int64))
    if colors.shape[1] != n:
        raise ParameterError(f"coloring covers {colors.shape[1]} vertices, host has {n}")
    return colors


def table_bytes(n: int, levels: Sequence[int], batch: int = 1) -> int:
    """Bytes held by the DP tables of one tree: sum over nodes of n * C(N+1, subtree size)."""
    k = len(levels)
    kids = children_lists(levels)
    sizes = [1] * k
    for v in reversed(range(k)):
        for c in kids[v]:
            sizes[v] += sizes[c]
    return 8 * batch * sum(n * math.comb(k, s) for s in sizes)


def colorful_counts_batch(host: WeightedHost, shape: RootedTreeShape, colors) -> np.ndarray:
    """X_{i,H} for every root i and every coloring in a (B, n) batch; returns (B, n)."""
    N = shape.edges
    colors = _as_color_batch(colors, host.n, N)
    if N == 0:
        return np.ones(colors.shape)
    if host.is_zero():
        return np.zeros(colors.shape)
    space = mask_space(N + 1)
    _, root = _subtree_table(host.weights, shape.children(), 0, _Leaf(colors, N + 1), space)
    return root[:, :, 0].T / shape.aut


def colorful_count_all_roots(host: WeightedHost, shape: RootedTreeShape, coloring) -> np.ndarray:
    """X_{i,H}(M, coloring) for all roots i in one DP pass."""
    return colorful_counts_batch(host, shape, coloring)[0]


def colorful_count(host: WeightedHost, root: int, shape: RootedTreeShape, coloring) -> float:
    return float(colorful_count_all_roots(host, shape, coloring)[root])


def wall_time_scaling(n: int, edge_counts: Sequence[int], colorings: int = 4, seed: int = 0) -> dict:
    """Measured seconds per coloring of the DP on end-rooted paths with N edges.

    Returns the timings and the growth base fitted by least squares on
    log(seconds) against N; this is what gets reported instead of a
    theoretical constant.
    """
    rng = make_rng(seed)
    A = np.triu(rng.random((n, n)) < 0.5, 1).astype(float)
    host = WeightedHost.from_adjacency(A + A.T, 0.5)

    secs = {}
    for N in edge_counts:
        colors = rng.integers(0, N + 1, size=(colorings, n))
        tic = time.perf_counter()
        colorful_counts_batch(host, path_shape(N), colors)
        secs[int(N)] = (time.perf_counter() - tic) / colorings
    Ns = sorted(secs)
    base = math.nan
    if len(Ns) > 1:
        slope = np.polyfit(Ns, np.log([secs[N] for N in Ns]), 1)[0]
        base = float(np.exp(slope))
    return {"n": n, "seconds_per_coloring": secs, "fitted_base": base}


# -- chandeliers with shared bulb tables -----------------------------------

class BulbTableCache:
    """Per-coloring-batch DP tables of every wired bulb (wire plus bulb), built lazily.

    A chandelier's root table is the fold of its L branch tables, so each
    branch is computed once per coloring batch and reused across the family.
    """

    def __init__(self, host: WeightedHost, catalog, M: int, colors: np.ndarray, N: int,
                 memory_budget: int = DEFAULT_MEMORY_BUDGET, enabled: bool = True):
        self.host = host
        self.catalog = catalog
        self.M = M
        self.N = N
        self.colors = colors
        self.enabled = enabled
        self.space = mask_space(N + 1)
        self.leaf = _Leaf(colors, N + 1)
        self.hits = 0
        self.misses = 0
        self._tables: dict[int, np.ndarray] = {}
        if enabled:
            width = math.comb(N + 1, catalog.K + M)
            est = 8 * len(catalog) * colors.shape[0] * host.n * width
            if est > memory_budget:
                raise BudgetExceededError(
                    f"bulb cache needs ~{est} bytes, over the budget of {memory_budget} bytes")

    def _compute(self, bulb_id: int) -> np.ndarray:
        levels = branch_levels(self.catalog[bulb_id], self.M)
        _, T = _subtree_table(self.host.weights, children_lists(levels), 0, self.leaf, self.space)
        return _push(self.host.weights, T)

    def pushed_branch(self, bulb_id: int) -> np.ndarray:
        """sum_j W[i, j] * table(branch rooted at j), shape (n, B, C(N+1, K+M))."""
        if not self.enabled:
            return self._compute(bulb_id)
        if bulb_id in self._tables:
            self.hits += 1
        else:
            self.misses += 1
            self._tables[bulb_id] = self._compute(bulb_id)
        return self._tables[bulb_id]


def chandelier_counts(cache: BulbTableCache, chandelier: Chandelier) -> np.ndarray:
    """X_{i,H} for all roots and all colorings of the cache batch; (B, n)."""
    B, n = cache.colors.shape
    if cache.host.is_zero():
        return np.zeros((B, n))
    branch = cache.catalog.K + cache.M
    part, size = cache.leaf, 1
    for b in chandelier.bulb_ids:
        part = _fold(cache.space, part, size, cache.pushed_branch(b), branch)
        size += branch
    return part[:, :, 0].T / chandelier.aut


# -- exact counts --------------------------------------------------------------

def exact_signed_count(host: WeightedHost, root: int, shape: RootedTreeShape) -> float:
    """W_{i,H} by enumerating ordered injective embeddings, divided by aut(H)."""
    if shape.edges > BACKTRACK_MAX_EDGES or host.n > BACKTRACK_MAX_N:
        raise CapExceededError(
            f"backtracking is limited to {BACKTRACK_MAX_EDGES} edges and n <= {BACKTRACK_MAX_N}")
    W = host.weights
    n = host.n
    parent = [-1] * shape.size
    for v, kids in enumerate(shape.children()):
        for c in kids:
            parent[c] = v
    image = [0] * shape.size
    image[0] = root
    used = [False] * n
    used[root] = True

    def extend(v: int, acc: float) -> float:
        if v == shape.size:
            return acc
        total = 0.0
        p = image[parent[v]]
        for x in range(n):
            if used[x]:
                continue
            w = W[p, x]
            if w == 0.0:
                continue
            used[x] = True
            image[v] = x
            total += extend(v + 1, acc * w)
            used[x] = False
        return total

    return extend(1, 1.0) / shape.aut


def _independent_partitions(size: int, edges: list[tuple[int, int]]):
    """Set partitions of range(size) in which no block contains an edge."""
    adj = [set() for _ in range(size)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    blocks: list[list[int]] = []

    def place(v):
        if v == size:
            yield [list(b) for b in blocks]
            return
        for b in blocks:
            if not adj[v].intersection(b):
                b.append(v)
                yield from place(v + 1)
                b.pop()
        blocks.append([v])
        yield from place(v + 1)
        blocks.pop()

    yield from place(0)


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@lru_cache(maxsize=64)
def _mobius_terms(levels: tuple[int, ...]):
    """(coefficient, einsum subscripts, operand multiplicities) per quotient of the tree."""
    parent = [-1] * len(levels)
    for v, kids in enumerate(children_lists(levels)):
        for c in kids:
            parent[c] = v
    edges = [(parent[v], v) for v in range(1, len(levels))]
    terms = []
    for blocks in _independent_partitions(len(levels), edges):
        of = {v: bi for bi, b in enumerate(blocks) for v in b}
        coef = 1
        for b in blocks:
            coef *= (-1) ** (len(b) - 1) * math.factorial(len(b) - 1)
        mult: dict[tuple[int, int], int] = {}
        for u, v in edges:
            key = tuple(sorted((of[u], of[v])))
            mult[key] = mult.get(key, 0) + 1
        pairs = sorted(mult)
        subs = ",".join(_LETTERS[a] + _LETTERS[b] for a, b in pairs) + "->" + _LETTERS[of[0]]
        terms.append((coef, subs, tuple(mult[p] for p in pairs)))
    return tuple(terms)


def signed_counts(host: WeightedHost, shape: RootedTreeShape) -> np.ndarray:
    """Exact W_{i,H} for every root i.

    Uses inj(H) = sum over partitions P of sum_B (-1)^(|B|-1) (|B|-1)! hom(H/P);
    partitions that put an edge inside a block vanish because the diagonal is
    zero.
    """
    if shape.size > MOBIUS_MAX_VERTICES:
        raise CapExceededError(f"exact counting supports at most {MOBIUS_MAX_VERTICES} vertices")
    if shape.edges == 0:
        return np.ones(host.n)
    if host.is_zero():
        return np.zeros(host.n)
    W = host.weights
    powers = {1: W}
    total = np.zeros(host.n)
    for coef, subs, mults in _mobius_terms(shape.levels):
        ops = []
        for m in mults:
            if m not in powers:
                powers[m] = W**m
            ops.append(powers[m])
        total += coef * _contract(subs, ops)
    return total / shape.aut


_PATHS: dict[tuple[str, int], list] = {}


def _contract(subs: str, ops: list[np.ndarray]) -> np.ndarray:
    key = (subs, ops[0].shape[0])
    if key not in _PATHS:
        _PATHS[key] = np.einsum_path(subs, *ops, optimize="optimal")[0]
    return np.einsum(subs, *ops, optimize=_PATHS[key])
