"""Brute-force references for tests and acceptance checks.

Nothing here is meant to be fast, and none of it goes through the DP,
partition-inversion or formula code paths it is used to check, except
:func:`exhaustive_coloring_expectation`, which deliberately averages the
production colorful count over every coloring.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable

import numpy as np

from .exceptions import CapExceededError
from .trees import RootedTreeShape, levels_to_adjacency

EXHAUSTIVE_MAX_COLORINGS = 10**7


def mc_mean_with_se(samples: Iterable[float] | Callable[[int], float], trials: int | None = None):
    """Streaming (Welford) mean and standard error of the mean.

    ``samples`` is either an iterable of values or a callable ``f(trial)``
    evaluated for ``trial = 0 .. trials-1``.
    """
    it = (samples(k) for k in range(trials)) if callable(samples) else samples
    count, mean, m2 = 0, 0.0, 0.0
    for x in it:
        count += 1
        d = x - mean
        mean += d / count
        m2 += d * (x - mean)
    if count < 2:
        return mean, math.inf if count == 0 else 0.0
    return mean, math.sqrt(m2 / (count - 1) / count)


def automorphisms_bruteforce(shape: RootedTreeShape) -> int:
    """Root-fixing permutations of the vertices that preserve adjacency."""
    if shape.edges > 9:
        raise CapExceededError("brute-force automorphism search supports at most 9 edges")
    adj = [set(a) for a in levels_to_adjacency(shape.levels)]
    n = shape.size
    deg = [len(a) for a in adj]
    image = [-1] * n
    image[0] = 0
    used = [False] * n
    used[0] = True

    def extend(v: int) -> int:
        if v == n:
            return 1
        total = 0
        for x in range(1, n):
            if used[x] or deg[x] != deg[v]:
                continue
            if all((u in adj[v]) == (image[u] in adj[x]) for u in range(v)):
                used[x] = True
                image[v] = x
                total += extend(v + 1)
                used[x] = False
        return total

    return extend(1)


def brute_colorful_count(weights: np.ndarray, root: int, shape: RootedTreeShape, colors) -> float:
    """X_{i,H}: sum over ordered embeddings with pairwise distinct colors, divided by aut."""
    W = np.asarray(weights, dtype=float)
    colors = np.asarray(colors)
    n = W.shape[0]
    parent = [-1] * shape.size
    for v, kids in enumerate(shape.children()):
        for c in kids:
            parent[c] = v
    total = 0.0
    for rest in itertools.permutations([x for x in range(n) if x != root], shape.size - 1):
        img = (root,) + rest
        if len({int(colors[x]) for x in img}) != len(img):
            continue
        prod = 1.0
        for v in range(1, shape.size):
            prod *= W[img[parent[v]], img[v]]
        total += prod
    return total / shape.aut


def brute_signed_count(weights: np.ndarray, root: int, shape: RootedTreeShape) -> float:
    """W_{i,H} from all ordered embeddings (itertools.permutations), divided by aut."""
    return brute_colorful_count(weights, root, shape, np.arange(np.asarray(weights).shape[0]))


def exhaustive_coloring_expectation(host, shape: RootedTreeShape, root: int) -> float:
    """Exact average of the colorful count over all (N+1)^n colorings."""
    from .count import colorful_counts_batch

    n = host.n
    k = shape.edges + 1
    if k**n > EXHAUSTIVE_MAX_COLORINGS:
        raise CapExceededError(f"(N+1)^n = {k ** n} colorings exceeds {EXHAUSTIVE_MAX_COLORINGS}")
    total = 0.0
    chunk = max(1, 200_000 // max(n, 1))
    for block in _chunks(itertools.product(range(k), repeat=n), chunk):
        total += colorful_counts_batch(host, shape, np.array(block))[:, root].sum()
    return total / k**n


def _chunks(it, size):
    buf = []
    for x in it:
        buf.append(x)
        if len(buf) == size:
            yield buf
            buf = []
    if buf:
        yield buf


def phi_bruteforce(A, B, q: float, family) -> np.ndarray:
    """Score matrix from brute-force signed counts (tiny n only)."""
    Abar = np.asarray(A, dtype=float) - q
    Bbar = np.asarray(B, dtype=float) - q
    np.fill_diagonal(Abar, 0.0)
    np.fill_diagonal(Bbar, 0.0)
    n = Abar.shape[0]
    Phi = np.zeros((n, n))
    for H in family:
        shape = H.realized
        wa = np.array([brute_signed_count(Abar, i, shape) for i in range(n)])
        wb = np.array([brute_signed_count(Bbar, j, shape) for j in range(n)])
        Phi += H.aut * np.outer(wa, wb)
    return Phi


def threshold_rule_bruteforce(S, tau: float) -> dict[int, int]:
    """Unique-column rule row by row, then drop rows that collide on a column."""
    S = np.asarray(S)
    picks = {}
    for i in range(S.shape[0]):
        cols = [j for j in range(S.shape[1]) if S[i, j] >= tau]
        if len(cols) == 1:
            picks[i] = cols[0]
    owners: dict[int, list[int]] = {}
    for i, j in picks.items():
        owners.setdefault(j, []).append(i)
    return {i: j for i, j in picks.items() if len(owners[j]) == 1}


def data_driven_tau_bruteforce(S) -> float:
    """Half the lower median of the row maxima, recomputed with plain Python."""
    rows = [list(map(float, r)) for r in np.asarray(S)]
    best = []
    for i, r in enumerate(rows):
        j = max(range(len(r)), key=lambda c: (r[c], -c))
        best.append((r[j], i))
    best.sort()
    return best[(len(best) - 1) // 2][0] / 2.0
