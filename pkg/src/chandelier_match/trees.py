"""Unlabeled rooted trees, bulb catalogs and chandelier families.

Trees are represented by their canonical level sequence: the preorder list of
depths (root at depth 0) with children visited in non-increasing order of
their own canonical subsequences.  This is the lexicographically largest level
sequence of the tree, so two rooted trees are isomorphic iff their canonical
sequences are equal.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Iterator, Sequence

from .exceptions import CapExceededError, EmptyCatalogWarning, InfeasibleAtThisNWarning, ParameterError

MAX_ENUM_EDGES = 20
MAX_COUNT_EDGES = 2000
AUT_BITS = 128
DEFAULT_WIDTH_CAP = 24

# Otter's constant alpha; 1/alpha ~ 2.9557652856
OTTER_ALPHA = 0.3383218568992076


def children_lists(levels: Sequence[int]) -> list[list[int]]:
    """Child index lists for a preorder depth sequence."""
    kids: list[list[int]] = [[] for _ in levels]
    stack: list[int] = []
    for v, d in enumerate(levels):
        if v == 0:
            if d != 0:
                raise ParameterError("level sequence must start at depth 0")
        else:
            if d < 1 or d > len(stack):
                raise ParameterError(f"invalid level sequence {tuple(levels)}")
            del stack[d:]
            kids[stack[-1]].append(v)
        stack.append(v)
    return kids


def parents_from_levels(levels: Sequence[int]) -> list[int]:
    parent = [-1] * len(levels)
    for v, kids in enumerate(children_lists(levels)):
        for c in kids:
            parent[c] = v
    return parent


def _canonical_codes(kids: list[list[int]], root: int) -> dict[int, tuple[int, ...]]:
    """Canonical level sequence (relative depths) of every subtree, bottom up."""
    order = [root]
    for v in order:
        order.extend(kids[v])
    code: dict[int, tuple[int, ...]] = {}
    for v in reversed(order):
        subs = sorted((code[c] for c in kids[v]), reverse=True)
        seq = [0]
        for s in subs:
            seq.extend(d + 1 for d in s)
        code[v] = tuple(seq)
    return code


def canonical_levels_from_adjacency(adj: Sequence[Sequence[int]], root: int) -> tuple[int, ...]:
    """Canonical level sequence of the tree given by an adjacency list, rooted at ``root``."""
    n = len(adj)
    kids: list[list[int]] = [[] for _ in range(n)]
    seen = [False] * n
    seen[root] = True
    queue = [root]
    for v in queue:
        for u in adj[v]:
            if not seen[u]:
                seen[u] = True
                kids[v].append(u)
                queue.append(u)
    if len(queue) != n:
        raise ParameterError("adjacency does not describe a connected tree")
    return _canonical_codes(kids, root)[root]


def canonicalize(levels: Sequence[int]) -> tuple[int, ...]:
    return _canonical_codes(children_lists(levels), 0)[0]


def automorphism_count(levels: Sequence[int]) -> int:
    """Root-preserving automorphisms: product over vertices of child-class multiplicity factorials."""
    kids = children_lists(levels)
    code = _canonical_codes(kids, 0)
    aut = 1
    for v in range(len(levels)):
        mult: dict[tuple[int, ...], int] = {}
        for c in kids[v]:
            mult[code[c]] = mult.get(code[c], 0) + 1
        for m in mult.values():
            if m > 1:
                aut *= math.factorial(m)
    if aut.bit_length() > AUT_BITS:
        raise OverflowError(f"automorphism count exceeds {AUT_BITS} bits")
    return aut


def levels_to_adjacency(levels: Sequence[int]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in levels]
    for v, p in enumerate(parents_from_levels(levels)):
        if p >= 0:
            adj[v].append(p)
            adj[p].append(v)
    return adj


@dataclass(frozen=True)
class RootedTreeShape:
    levels: tuple[int, ...]
    aut: int

    @classmethod
    def from_levels(cls, levels: Sequence[int]) -> "RootedTreeShape":
        canon = canonicalize(levels)
        return cls(canon, automorphism_count(canon))

    @property
    def edges(self) -> int:
        return len(self.levels) - 1

    @property
    def size(self) -> int:
        return len(self.levels)

    def children(self) -> list[list[int]]:
        return children_lists(self.levels)

    def adjacency(self) -> list[list[int]]:
        return levels_to_adjacency(self.levels)

    def __str__(self):
        return f"levels={','.join(map(str, self.levels))} aut={self.aut}"


def single_vertex() -> RootedTreeShape:
    return RootedTreeShape((0,), 1)


def path_shape(edges: int, rooted_at_end: bool = True) -> RootedTreeShape:
    if rooted_at_end:
        return RootedTreeShape.from_levels(list(range(edges + 1)))
    half = edges // 2
    levels = [0] + list(range(1, edges - half + 1)) + list(range(1, half + 1))
    return RootedTreeShape.from_levels(levels)


def star_shape(leaves: int) -> RootedTreeShape:
    return RootedTreeShape.from_levels([0] + [1] * leaves)


def enumerate_rooted_trees(K: int) -> Iterator[RootedTreeShape]:
    """All unlabeled rooted trees with ``K`` edges, by level-sequence successor.

    Starts from the path ``0, 1, ..., K`` and walks the canonical sequences in
    decreasing lexicographic order down to the star.
    """
    if not 0 <= K <= MAX_ENUM_EDGES:
        raise CapExceededError(f"enumeration supports 0 <= K <= {MAX_ENUM_EDGES}, got {K}")
    levels = list(range(K + 1))
    while True:
        yield RootedTreeShape(tuple(levels), automorphism_count(levels))
        p = len(levels) - 1
        while p > 0 and levels[p] <= 1:
            p -= 1
        if p == 0:
            return
        q = p - 1
        while levels[q] != levels[p] - 1:
            q -= 1
        shift = p - q
        for i in range(p, len(levels)):
            levels[i] = levels[i - shift]


def count_rooted_trees(K: int) -> int:
    """Number of unlabeled rooted trees with ``K`` edges (Euler transform recurrence)."""
    if not 0 <= K <= MAX_COUNT_EDGES:
        raise CapExceededError(f"count supports 0 <= K <= {MAX_COUNT_EDGES}, got {K}")
    return _rooted_tree_counts(K + 1)[K + 1]


@lru_cache(maxsize=8)
def _rooted_tree_counts(nmax: int) -> list[int]:
    # a[v] = rooted trees on v vertices; a[v+1] = (1/v) sum_k (sum_{d|k} d a[d]) a[v-k+1]
    a = [0, 1]
    s = [0]  # s[k] = sum_{d | k} d a[d]
    for v in range(1, nmax):
        s.append(sum(d * a[d] for d in _divisors(v)))
        total = sum(s[k] * a[v - k + 1] for k in range(1, v + 1))
        a.append(total // v)
    return a


def _divisors(k: int) -> list[int]:
    out = []
    d = 1
    while d * d <= k:
        if k % d == 0:
            out.append(d)
            if d * d != k:
                out.append(k // d)
        d += 1
    return out


def estimate_otter(K_max: int) -> float:
    """Ratio |J(K_max)| / |J(K_max - 1)|, which converges to 1/alpha."""
    if K_max < 50:
        raise ParameterError("K_max must be >= 50")
    return _big_ratio(count_rooted_trees(K_max), count_rooted_trees(K_max - 1))


def _big_ratio(a: int, b: int) -> float:
    shift = max(a.bit_length(), b.bit_length()) - 60
    if shift > 0:
        a >>= shift
        b >>= shift
    return a / b


# -- bulbs and chandeliers ---------------------------------------------------

@dataclass(frozen=True)
class BulbCatalog:
    K: int
    R: int | None
    bulbs: tuple[RootedTreeShape, ...]

    def __len__(self):
        return len(self.bulbs)

    def __getitem__(self, i):
        return self.bulbs[i]

    def fraction_of_all(self) -> float:
        """|J(K, R)| / |J(K)|."""
        return len(self.bulbs) / count_rooted_trees(self.K)


def build_catalog(K: int, R: int | None = None) -> BulbCatalog:
    """Rooted trees with ``K`` edges and at most ``R`` automorphisms (``None`` means no cap)."""
    bulbs = tuple(s for s in enumerate_rooted_trees(K) if R is None or s.aut <= R)
    if not bulbs:
        warnings.warn(f"empty bulb catalog: no rooted tree with {K} edges has aut <= {R}",
                      EmptyCatalogWarning, stacklevel=2)
    return BulbCatalog(K, R, bulbs)


def branch_levels(bulb: RootedTreeShape, M: int) -> tuple[int, ...]:
    """Level sequence of one branch as hung below the chandelier root.

    The branch is rooted at the first wire vertex: ``M - 1`` further wire
    edges, then the bulb.
    """
    return tuple(range(M)) + tuple(d + M - 1 for d in bulb.levels[1:])


@dataclass(frozen=True)
class Chandelier:
    catalog: BulbCatalog = field(repr=False)
    bulb_ids: tuple[int, ...]
    M: int

    @property
    def L(self) -> int:
        return len(self.bulb_ids)

    @property
    def bulbs(self) -> tuple[RootedTreeShape, ...]:
        return tuple(self.catalog[b] for b in self.bulb_ids)

    @property
    def edges(self) -> int:
        return (self.catalog.K + self.M) * self.L

    @property
    def aut(self) -> int:
        return math.prod(b.aut for b in self.bulbs)

    @cached_property
    def realized(self) -> RootedTreeShape:
        levels = [0]
        for b in self.bulbs:
            levels.extend(d + 1 for d in branch_levels(b, self.M))
        return RootedTreeShape.from_levels(levels)


class ChandelierFamily:
    """All (L, M, K, R)-chandeliers, indexed by L-subsets of the catalog in lex order."""

    def __init__(self, K: int, L: int, M: int, R: int | None, catalog: BulbCatalog):
        self.K, self.L, self.M, self.R = K, L, M, R
        self.catalog = catalog

    @property
    def N(self) -> int:
        return (self.K + self.M) * self.L

    @property
    def uniquely_rooted_guaranteed(self) -> bool:
        return self.L >= 2

    def __len__(self):
        return math.comb(len(self.catalog), self.L)

    def __iter__(self) -> Iterator[Chandelier]:
        for ids in combinations(range(len(self.catalog)), self.L):
            yield Chandelier(self.catalog, ids, self.M)

    def __getitem__(self, index: int) -> Chandelier:
        return Chandelier(self.catalog, unrank_combination(index, len(self.catalog), self.L), self.M)

    def iter_range(self, start: int, stop: int) -> Iterator[Chandelier]:
        """Independent cursor over ``[start, stop)``; parallel consumers each take one."""
        stop = min(stop, len(self))
        if start >= stop:
            return
        ids = list(unrank_combination(start, len(self.catalog), self.L))
        for _ in range(stop - start):
            yield Chandelier(self.catalog, tuple(ids), self.M)
            _next_combination(ids, len(self.catalog))

    def materialize(self) -> list[Chandelier]:
        return list(self)

    def fingerprint(self) -> dict:
        return {"K": self.K, "L": self.L, "M": self.M, "R": self.R, "N": self.N,
                "family_size": len(self), "catalog_size": len(self.catalog)}


def unrank_combination(index: int, n: int, k: int) -> tuple[int, ...]:
    """The ``index``-th k-subset of range(n) in lexicographic order."""
    total = math.comb(n, k)
    if not 0 <= index < total:
        raise IndexError(f"combination index {index} out of range [0, {total})")
    out = []
    x = 0
    for slot in range(k):
        while True:
            c = math.comb(n - x - 1, k - slot - 1)
            if index < c:
                break
            index -= c
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def _next_combination(ids: list[int], n: int) -> None:
    k = len(ids)
    i = k - 1
    while i >= 0 and ids[i] == n - k + i:
        i -= 1
    if i < 0:
        return
    ids[i] += 1
    for j in range(i + 1, k):
        ids[j] = ids[j - 1] + 1


def build_family(K: int, L: int, M: int, R: int | None = None,
                 width_cap: int = DEFAULT_WIDTH_CAP) -> ChandelierFamily:
    if L < 1 or M < 1:
        raise ParameterError(f"need L >= 1 and M >= 1, got L={L}, M={M}")
    N = (K + M) * L
    if N + 1 > width_cap:
        raise CapExceededError(f"N + 1 = {N + 1} colors exceeds the width cap {width_cap}")
    catalog = build_catalog(K, R)
    if len(catalog) < L:
        raise ParameterError(f"only {len(catalog)} bulbs with K={K}, R={R}; need L={L}")
    if L == 1:
        warnings.warn("L = 1 chandeliers are not guaranteed to be uniquely rooted", stacklevel=2)
    return ChandelierFamily(K, L, M, R, catalog)


def is_uniquely_rooted(shape: RootedTreeShape) -> bool:
    """True iff re-rooting at any other vertex gives a non-isomorphic rooted tree."""
    if shape.edges > 30:
        raise CapExceededError("is_uniquely_rooted supports at most 30 edges")
    adj = shape.adjacency()
    base = canonical_levels_from_adjacency(adj, 0)
    return all(canonical_levels_from_adjacency(adj, v) != base for v in range(1, shape.size))


# -- parameter recipe --------------------------------------------------------

def falling_factorial(n: int, k: int) -> float:
    """(n-1)! / (n-k-1)! as a float."""
    out = 1.0
    for m in range(k):
        out *= (n - 1 - m)
    return max(out, 0.0)


def compute_mu(n: int, q: float, rho: float, N: int, family_size: int) -> float:
    """Mean true-pair score |T| (rho sigma^2)^N (n-1)!/(n-N-1)!."""
    if rho < 0 and N % 2 == 1:
        raise ParameterError("N must be even when rho < 0 (otherwise mu < 0)")
    s2 = q * (1.0 - q)
    return family_size * (rho * s2) ** N * falling_factorial(n, N)


@dataclass(frozen=True)
class ParameterChoice:
    K: int
    L: int
    M: int
    R: int
    N: int
    mu: float
    family_size: int
    catalog_fraction: float
    clauses: dict
    rho_condition: bool


DEFAULT_CONSTANTS = {"C1": 2.0, "C2": 1.0, "C3": 1.0, "C4": 0.5}
DEFAULT_CONDITION_CONSTANTS = {f"c{i}": 1.0 for i in range(1, 7)}


def condition_clauses(n, q, rho, K, L, M, R, c=None) -> dict[str, bool]:
    """Which clauses of the general (K, L, M, R) sufficient condition hold."""
    c = {**DEFAULT_CONDITION_CONSTANTS, **(c or {})}
    logn = math.log(n)
    lognq = math.log(n * q)
    r2 = rho * rho
    gap = math.log(r2 / OTTER_ALPHA) if r2 > 0 else -math.inf
    if r2 >= 1.0:
        mk_upper = math.inf
    elif r2 <= 0:
        mk_upper = -math.inf
    else:
        mk_upper = gap / (2.0 * math.log(1.0 / r2))
    loglogn = math.log(logn) if logn > 1 else math.nan
    return {
        "L <= c1 log n / log log n": bool(loglogn > 0 and L <= c["c1"] * logn / loglogn),
        "L <= c6 sqrt(nq)": L <= c["c6"] * math.sqrt(n * q),
        "M/K >= c2 / log(nq)": lognq > 0 and M / K >= c["c2"] / lognq,
        "M/K <= log(rho^2/alpha) / (2 log(1/rho^2))": M / K <= mk_upper,
        "KL >= c3 log n / log(rho^2/alpha)": gap > 0 and K * L >= c["c3"] * logn / gap,
        "K + M <= c4 log n": K + M <= c["c4"] * logn,
        "R <= exp(c5 K)": R <= math.exp(c["c5"] * K),
    }


def select_parameters(n: int, q: float, rho: float, epsilon: float, constants: dict | None = None,
                      condition_constants: dict | None = None) -> ParameterChoice:
    """Round the (L, K, M, R) recipe to integers and report mu and the general condition.

    ``L = C1/eps``, ``K = C2 log n``, ``M = C3 K / log(nq)``, ``R = exp(C4 K)``;
    M is bumped by one when needed so that ``N = (K + M) L`` is even.
    """
    if n * q <= 1:
        raise ParameterError(f"need nq > 1, got nq = {n * q}")
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    C = {**DEFAULT_CONSTANTS, **(constants or {})}
    L = max(1, round(C["C1"] / epsilon))
    K = max(1, round(C["C2"] * math.log(n)))
    M = max(1, round(C["C3"] * K / math.log(n * q)))
    R = max(1, math.floor(math.exp(C["C4"] * K)))
    if ((K + M) * L) % 2:
        M += 1
    N = (K + M) * L
    catalog = build_catalog(K, R)
    size = math.comb(len(catalog), L)
    mu = compute_mu(n, q, rho, N, size)
    clauses = condition_clauses(n, q, rho, K, L, M, R, condition_constants)
    rho_ok = rho * rho > OTTER_ALPHA + epsilon
    failed = [name for name, ok in clauses.items() if not ok]
    if not rho_ok:
        failed.insert(0, "rho^2 > alpha + eps")
    if len(catalog) < L:
        failed.insert(0, f"|J(K,R)| = {len(catalog)} >= L = {L}")
    if failed:
        warnings.warn(f"parameters infeasible at n={n}: first violated clause: {failed[0]}",
                      InfeasibleAtThisNWarning, stacklevel=2)
    return ParameterChoice(K, L, M, R, N, mu, size, catalog.fraction_of_all(), clauses, rho_ok)
