"""scikit-learn style front end for the matching chain."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ParameterError
from .matchers import PartialMatching, match_by_threshold, seeded_match
from .model import GraphPair
from .score import phi_approx, phi_exact, threshold_data_driven, threshold_fixed
from .trees import build_family


def _check_adjacency(G, name: str) -> np.ndarray:
    G = check_array(G, dtype=None, ensure_min_samples=2, ensure_min_features=2)
    if G.shape[0] != G.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {G.shape}")
    if not np.isin(G, (0, 1)).all():
        raise ParameterError(f"{name} must be a 0/1 adjacency matrix")
    if not np.array_equal(G, G.T):
        raise ParameterError(f"{name} must be symmetric")
    if np.any(np.diag(G)):
        raise ParameterError(f"{name} must have an empty diagonal")
    return G.astype(np.uint8)


class ChandelierMatcher(BaseEstimator):
    """Match the vertices of two graphs with chandelier-count scores.

    Parameters
    ----------
    K, L, M, R : int
        Bulb edges, branches per chandelier, wire length and the automorphism
        cap on bulbs (``None`` for no cap).
    exact : bool
        Use exact signed counts instead of color coding (small n only).
    t : int or None
        Colorings per graph; ``None`` uses ``min(ceil(1/r), t_cap)``.
    tau : float or None
        Fixed score threshold.  When ``None``, ``auto_tau`` picks between the
        data-driven rule and ``c * mu``.
    rho : float or None
        Correlation used for ``mu``; only needed when ``auto_tau=False`` and
        ``tau`` is ``None``.
    q : float or None
        Edge density used for centering; defaults to the pooled density.
    seeded : bool
        Complete the threshold matching with seeded percolation.
    random_state : int
        Master seed for the colorings.

    Attributes
    ----------
    scores_ : ScoreMatrix
    tau_ : float
    threshold_matching_ : PartialMatching
    matching_ : PartialMatching
    mapping_ : ndarray of shape (n,), -1 for unmatched vertices
    """

    def __init__(self, K=2, L=2, M=1, R=None, exact=False, t=None, t_cap=10_000, tau=None,
                 auto_tau=True, c=0.5, rho=None, q=None, seeded=True, random_state=0):
        self.K = K
        self.L = L
        self.M = M
        self.R = R
        self.exact = exact
        self.t = t
        self.t_cap = t_cap
        self.tau = tau
        self.auto_tau = auto_tau
        self.c = c
        self.rho = rho
        self.q = q
        self.seeded = seeded
        self.random_state = random_state

    def fit(self, A, B):
        """Score, threshold and (optionally) complete; ``B`` plays the role of y."""
        A = _check_adjacency(A, "A")
        B = _check_adjacency(B, "B")
        if A.shape != B.shape:
            raise ParameterError(f"A and B differ in size: {A.shape} vs {B.shape}")
        n = A.shape[0]
        q = self.q if self.q is not None else float(A.sum() + B.sum()) / (2 * n * (n - 1))
        if not 0.0 < q < 1.0:
            raise ParameterError(f"edge density must lie in (0, 1), got {q}")
        if self.tau is None and not self.auto_tau and self.rho is None:
            raise ParameterError("rho is required for the c * mu threshold")
        rho = 0.0 if self.rho is None else float(self.rho)
        pair = GraphPair(n, q, rho, A, B, np.arange(n))
        family = build_family(self.K, self.L, self.M, self.R)
        if self.exact:
            S = phi_exact(pair, family)
        else:
            S = phi_approx(pair, family, t=self.t, seed=self.random_state, t_cap=self.t_cap)
        if self.tau is not None:
            tau = float(self.tau)
        elif self.auto_tau:
            tau = threshold_data_driven(S)
        else:
            tau = threshold_fixed(S.mu, self.c)
        S.tau = tau
        first = match_by_threshold(S, tau)
        final = seeded_match(A, B, first, q=q) if self.seeded else first
        self.scores_ = S
        self.tau_ = tau
        self.threshold_matching_ = first
        self.matching_ = final
        self.mapping_ = final.as_array()
        self.n_vertices_ = n
        return self

    def predict(self, A=None, B=None):
        """The fitted map as an array (``-1`` marks unmatched vertices)."""
        if A is not None:
            self.fit(A, B)
        check_is_fitted(self, "mapping_")
        return self.mapping_

    def fit_predict(self, A, B):
        return self.fit(A, B).mapping_

    def score(self, A, B, truth) -> float:
        """Fraction of vertices mapped to their true partner."""
        mapping = self.fit_predict(A, B)
        return float(np.mean(mapping == np.asarray(truth)))
