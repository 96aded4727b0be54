"""Correlated Erdos-Renyi graph pairs.

A pair ``(A, B)`` on ``n`` vertices with hidden permutation ``pi`` is drawn by
sampling, independently for every unordered pair ``i < j``, the joint cell of
``(A_ij, B_{pi(i) pi(j)})`` from the 2x2 Bernoulli law with both marginals
``q`` and Pearson correlation ``rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParameterError

RNG_ALGORITHM = "numpy.PCG64+SeedSequence"

PI_MODES = ("identity", "uniform")


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator seeded through ``SeedSequence`` (accepts int or SeedSequence)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed of ``seed`` along the spawn path ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rho_min(q: float) -> float:
    # p10 = q(1-q)(1-rho) >= 0 always; p00 >= 0 and p11 >= 0 bind for q <= 1/2
    return -q / (1.0 - q)


def joint_cells(q: float, rho: float) -> tuple[float, float, float, float]:
    """Cell probabilities ``(p00, p01, p10, p11)`` of the correlated Bernoulli pair."""
    s2 = q * (1.0 - q)
    p11 = q * q + rho * s2
    p10 = s2 * (1.0 - rho)
    p00 = (1.0 - q) ** 2 + rho * s2
    return p00, p10, p10, p11


def check_pair_params(n: int, q: float, rho: float) -> None:
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if not 0.0 < q <= 0.5:
        hint = " (complement both graphs: use q' = 1 - q and --complement)" if q > 0.5 else ""
        raise ParameterError(f"q must satisfy 0 < q <= 1/2, got {q}{hint}")
    lo = rho_min(q)
    if rho < lo - 1e-15 or rho > 1.0:
        raise ParameterError(f"rho must satisfy rho_min(q) = {lo:.6g} <= rho <= 1, got {rho}")


@dataclass(frozen=True, eq=False)
class GraphPair:
    n: int
    q: float
    rho: float
    A: np.ndarray
    B: np.ndarray
    pi: np.ndarray
    seed: int = 0
    pi_mode: str = "identity"
    rng_algorithm: str = field(default=RNG_ALGORITHM)

    def __post_init__(self):
        for arr in (self.A, self.B, self.pi):
            arr.setflags(write=False)

    def centered(self, q: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``A - q`` and ``B - q`` with zero diagonals."""
        q = self.q if q is None else q
        out = []
        for G in (self.A, self.B):
            W = G.astype(float) - q
            np.fill_diagonal(W, 0.0)
            out.append(W)
        return out[0], out[1]

    def edge_density(self) -> float:
        """Pooled empirical edge density of A and B."""
        pairs = self.n * (self.n - 1)
        return float(self.A.sum() + self.B.sum()) / (2 * pairs)

    def packed_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Row bitsets of A and B (``np.packbits`` along axis 1)."""
        return np.packbits(self.A, axis=1), np.packbits(self.B, axis=1)

    def __eq__(self, other):
        if not isinstance(other, GraphPair):
            return NotImplemented
        return (
            self.n == other.n
            and self.q == other.q
            and self.rho == other.rho
            and self.seed == other.seed
            and self.pi_mode == other.pi_mode
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.pi, other.pi)
        )


def sample_pair(n: int, q: float, rho: float, pi_mode: str = "identity", seed: int = 0) -> GraphPair:
    check_pair_params(n, q, rho)
    if pi_mode not in PI_MODES:
        raise ParameterError(f"pi_mode must be one of {PI_MODES}, got {pi_mode!r}")
    rng = make_rng(seed)
    pi = np.arange(n) if pi_mode == "identity" else rng.permutation(n)
    iu, ju = np.triu_indices(n, 1)
    cum = np.cumsum(joint_cells(q, rho))
    cell = np.searchsorted(cum[:3], rng.random(len(iu)), side="right")
    # cell index = 2 * a + b over (00, 01, 10, 11)
    a = (cell >> 1).astype(np.uint8)
    b = (cell & 1).astype(np.uint8)
    A = np.zeros((n, n), dtype=np.uint8)
    B = np.zeros((n, n), dtype=np.uint8)
    A[iu, ju] = a
    A[ju, iu] = a
    B[pi[iu], pi[ju]] = b
    B[pi[ju], pi[iu]] = b
    return GraphPair(n, float(q), float(rho), A, B, pi.astype(np.int64), int(seed), pi_mode)


def complement_pair(pair: GraphPair) -> GraphPair:
    """Complement both graphs; the result is correlated ER with edge probability 1 - q."""
    off = 1 - np.eye(pair.n, dtype=np.uint8)
    return GraphPair(
        pair.n, 1.0 - pair.q, pair.rho, (off - pair.A).astype(np.uint8),
        (off - pair.B).astype(np.uint8), pair.pi.copy(), pair.seed, pair.pi_mode,
    )


def cross_moment(l: int, m: int, q: float, rho: float) -> float:
    """E[sigma^-(l+m) Abar^l Bbar^m] for one correlated edge pair, sigma^2 = q(1-q)."""
    if not (0 <= l <= 2 and 0 <= m <= 2 and 2 <= l + m <= 4):
        raise ParameterError(f"need 0 <= l, m <= 2 and 2 <= l + m <= 4, got ({l}, {m})")
    s2 = q * (1.0 - q)
    if l + m == 2:
        return rho if l == m == 1 else 1.0
    if l + m == 3:
        return rho * (1.0 - 2.0 * q) / math.sqrt(s2)
    return (s2 + rho * (1.0 - 2.0 * q) ** 2) / s2


# -- plain-text pair format -------------------------------------------------

def _edges(G: np.ndarray) -> np.ndarray:
    iu, ju = np.nonzero(np.triu(G, 1))
    return np.column_stack([iu, ju])


def write_pair(pair: GraphPair, path) -> None:
    lines = [f"# rng={pair.rng_algorithm}",
             f"{pair.n} {pair.q!r} {pair.rho!r} {pair.seed} {pair.pi_mode}"]
    for G in (pair.A, pair.B):
        lines.extend(f"{u} {v}" for u, v in _edges(G))
        lines.append("%")
    lines.extend(f"{i} {p}" for i, p in enumerate(pair.pi))
    Path(path).write_text("\n".join(lines) + "\n")


def read_pair(path) -> GraphPair:
    raw = [ln.strip() for ln in Path(path).read_text().splitlines()]
    rng_alg = RNG_ALGORITHM
    body = []
    for ln in raw:
        if ln.startswith("#"):
            if ln.startswith("# rng="):
                rng_alg = ln[len("# rng="):]
            continue
        if ln:
            body.append(ln)
    if not body:
        raise ParameterError(f"{path}: empty pair file")
    head = body[0].split()
    if len(head) != 5:
        raise ParameterError(f"{path}: header must be 'n q rho seed pi_mode'")
    n, q, rho, seed, pi_mode = int(head[0]), float(head[1]), float(head[2]), int(head[3]), head[4]
    sections: list[list[str]] = [[]]
    for ln in body[1:]:
        if ln == "%":
            sections.append([])
        else:
            sections[-1].append(ln)
    if len(sections) != 3:
        raise ParameterError(f"{path}: expected A edges, '%', B edges, '%', permutation")
    mats = []
    for sec in sections[:2]:
        G = np.zeros((n, n), dtype=np.uint8)
        for ln in sec:
            u, v = map(int, ln.split())
            if u == v:
                raise ParameterError(f"{path}: self-loop at {u}")
            G[u, v] = G[v, u] = 1
        mats.append(G)
    pi = np.full(n, -1, dtype=np.int64)
    for ln in sections[2]:
        i, p = map(int, ln.split())
        pi[i] = p
    if sorted(pi.tolist()) != list(range(n)):
        raise ParameterError(f"{path}: permutation section is not a permutation of [n]")
    return GraphPair(n, q, rho, mats[0], mats[1], pi, seed, pi_mode, rng_alg)
