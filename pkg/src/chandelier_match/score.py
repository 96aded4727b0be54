"""Similarity scores between the vertices of A and the vertices of B.

``Phi[i, j] = sum_H aut(H) W_{i,H}(A - q) W_{j,H}(B - q)`` over a chandelier
family; the color-coding version replaces each W by an average of colorful
counts over t random colorings, divided by r.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .count import BulbTableCache, WeightedHost, chandelier_counts, colorful_probability, mask_space, signed_counts
from .exceptions import BudgetExceededError, CapExceededError, ParameterError
from .model import RNG_ALGORITHM, GraphPair, derive_seed, make_rng
from .trees import ChandelierFamily, compute_mu

DEFAULT_T_CAP = 10_000
DEFAULT_FLOP_BUDGET = 5e13
EXACT_MAX_N = 40
EXACT_MAX_N_EDGES = 6
EXACT_MAX_FAMILY = 50


@dataclass
class ScoreMatrix:
    scores: np.ndarray
    mode: str
    mu: float
    fingerprint: dict
    r: float | None = None
    t: int | None = None
    seeds: dict = field(default_factory=dict)
    tau: float | None = None
    cache_stats: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    def metadata(self) -> dict:
        meta = {k: v for k, v in asdict(self).items() if k != "scores"}
        meta["n"] = self.n
        meta["rng"] = RNG_ALGORITHM
        return meta

    def save(self, path) -> None:
        """Matrix as CSV (or .npy) plus a ``<path>.meta.json`` sidecar."""
        path = Path(path)
        if path.suffix == ".npy":
            np.save(path, self.scores)
        else:
            np.savetxt(path, self.scores, delimiter=",", fmt="%.17g")
        Path(str(path) + ".meta.json").write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ScoreMatrix":
        path = Path(path)
        if path.suffix == ".npy":
            scores = np.load(path)
        else:
            scores = np.loadtxt(path, delimiter=",", ndmin=2)
        meta_path = Path(str(path) + ".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        return cls(scores, meta.get("mode", "unknown"), meta.get("mu", math.nan),
                   meta.get("fingerprint", {}), meta.get("r"), meta.get("t"),
                   meta.get("seeds", {}), meta.get("tau"), meta.get("cache_stats", {}))


def _hosts(pair: GraphPair, q: float | None):
    Abar, Bbar = pair.centered(q)
    return WeightedHost(Abar, check=False), WeightedHost(Bbar, check=False)


def _family_mu(pair: GraphPair, family: ChandelierFamily, q: float | None) -> float:
    qq = pair.q if q is None else q
    if pair.rho < 0 and family.N % 2:
        return math.nan
    return compute_mu(pair.n, qq, pair.rho, family.N, len(family))


def phi_exact(pair: GraphPair, family: ChandelierFamily, q: float | None = None) -> ScoreMatrix:
    """Exact scores from exact signed counts (small instances)."""
    if pair.n > EXACT_MAX_N or family.N > EXACT_MAX_N_EDGES or len(family) > EXACT_MAX_FAMILY:
        raise CapExceededError(
            f"exact scores need n <= {EXACT_MAX_N}, N <= {EXACT_MAX_N_EDGES}, |T| <= {EXACT_MAX_FAMILY}")
    hA, hB = _hosts(pair, q)
    Phi = np.zeros((pair.n, pair.n))
    for H in family:
        shape = H.realized
        Phi += H.aut * np.outer(signed_counts(hA, shape), signed_counts(hB, shape))
    return ScoreMatrix(Phi, "exact", _family_mu(pair, family, q), family.fingerprint())


def default_t(N: int, t_cap: int = DEFAULT_T_CAP) -> int:
    return min(math.ceil(1.0 / colorful_probability(N)), t_cap)


def estimate_flops(n: int, family: ChandelierFamily, t: int) -> float:
    """Rough multiply-add count of the color-coding pass over both graphs."""
    k = family.N + 1
    K, M, L = family.K, family.M, family.L
    bulb_nodes = K + M
    per_branch = bulb_nodes * 2.0 * n * n * math.comb(k, max(1, bulb_nodes // 2))
    per_branch += 2.0 * n * n * math.comb(k, bulb_nodes)
    per_chandelier = sum(n * math.comb(k, 1 + s * bulb_nodes) * math.comb(1 + s * bulb_nodes, bulb_nodes)
                         for s in range(1, L + 1))
    return 2.0 * t * (len(family.catalog) * per_branch + len(family) * per_chandelier)


def _side_means(host: WeightedHost, family: ChandelierFamily, colors: np.ndarray,
                batch: int, use_cache: bool, stats: dict) -> np.ndarray:
    """(|T|, n) averages over colorings of the colorful counts of every chandelier."""
    sums = np.zeros((len(family), host.n))
    for lo in range(0, colors.shape[0], batch):
        block = colors[lo:lo + batch]
        cache = BulbTableCache(host, family.catalog, family.M, block, family.N, enabled=use_cache)
        for h, H in enumerate(family):
            sums[h] += chandelier_counts(cache, H).sum(axis=0)
        stats["hits"] += cache.hits
        stats["misses"] += cache.misses
    return sums / colors.shape[0]


def phi_approx(pair: GraphPair, family: ChandelierFamily, t: int | None = None, seed: int = 0,
               t_cap: int = DEFAULT_T_CAP, q: float | None = None, flop_budget: float = DEFAULT_FLOP_BUDGET,
               batch: int | None = None, use_cache: bool = True, colors=None) -> ScoreMatrix:
    """Color-coding scores from t colorings per graph (2t in total).

    ``colors`` may supply the colorings explicitly as a pair of (t, n) arrays
    for A and B; ``t`` and ``seed`` are then ignored.
    """
    N = family.N
    if N + 1 > 24:
        raise CapExceededError(f"N + 1 = {N + 1} exceeds the bitmask width cap 24")
    if colors is not None:
        t = np.asarray(colors[0]).shape[0]
    elif t is None:
        t = default_t(N, t_cap)
    if t < 1:
        raise ParameterError(f"number of colorings t must be >= 1, got {t}")
    flops = estimate_flops(pair.n, family, t)
    if flops > flop_budget:
        raise BudgetExceededError(f"estimated {flops:.3g} flops exceeds the budget {flop_budget:.3g}")
    r = colorful_probability(N)
    mask_space(N + 1)
    if batch is None:
        width = math.comb(N + 1, (N + 1) // 2)
        batch = int(max(1, min(t, 2e7 // (pair.n * width * 8))))
    if colors is None:
        seeds = {"master": int(seed), "A": derive_seed(seed, 0), "B": derive_seed(seed, 1)}
        colors_A = make_rng(seeds["A"]).integers(0, N + 1, size=(t, pair.n))
        colors_B = make_rng(seeds["B"]).integers(0, N + 1, size=(t, pair.n))
    else:
        seeds = {}
        colors_A, colors_B = (np.asarray(c, dtype=np.int64) for c in colors)
        if colors_A.shape != (t, pair.n) or colors_B.shape != (t, pair.n):
            raise ParameterError(f"explicit colorings must both have shape (t, n) = ({t}, {pair.n})")
        if min(colors_A.min(), colors_B.min()) < 0 or max(colors_A.max(), colors_B.max()) > N:
            raise ParameterError(f"colors must lie in 0..{N}")
    hA, hB = _hosts(pair, q)
    stats = {"hits": 0, "misses": 0}
    XA = _side_means(hA, family, colors_A, batch, use_cache, stats)
    XB = _side_means(hB, family, colors_B, batch, use_cache, stats)
    auts = np.array([H.aut for H in family], dtype=float)
    Phi = (XA.T * auts) @ XB / (r * r)
    return ScoreMatrix(Phi, "approx", _family_mu(pair, family, q), family.fingerprint(), r, t,
                       seeds, cache_stats=stats)


def threshold_fixed(mu: float, c: float = 0.5) -> float:
    if not 0.0 < c < 1.0:
        raise ParameterError(f"c must lie in (0, 1), got {c}")
    return c * mu


def threshold_data_driven(scores) -> float:
    """Half of the median of the row maxima (ties: smallest column, lower median)."""
    S = scores.scores if isinstance(scores, ScoreMatrix) else np.asarray(scores, dtype=float)
    psi = np.argmax(S, axis=1)
    best = S[np.arange(S.shape[0]), psi]
    k = np.argsort(best, kind="stable")[(S.shape[0] - 1) // 2]
    return float(best[k]) / 2.0
