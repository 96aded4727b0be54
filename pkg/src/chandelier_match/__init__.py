"""Vertex matching for correlated Erdős–Rényi graphs via chandelier counts."""
from .count import (Coloring, WeightedHost, colorful_count, colorful_count_all_roots,
                    colorful_probability, exact_signed_count, signed_counts)
from .estimator import ChandelierMatcher
from .exceptions import (BudgetExceededError, CapExceededError, EmptyCatalogWarning,
                         InfeasibleAtThisNWarning, InvariantError, ParameterError)
from .matchers import (PartialMatching, evaluate, match_by_threshold, rate_h, seeded_gamma,
                       seeded_match, solve_gamma)
from .model import GraphPair, complement_pair, cross_moment, read_pair, sample_pair, write_pair
from .pipeline import run_pipeline, run_sweep
from .score import ScoreMatrix, phi_approx, phi_exact, threshold_data_driven, threshold_fixed
from .trees import (ChandelierFamily, RootedTreeShape, build_catalog, build_family, compute_mu,
                    count_rooted_trees, enumerate_rooted_trees, estimate_otter, is_uniquely_rooted,
                    select_parameters)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError", "CapExceededError", "ChandelierFamily", "ChandelierMatcher", "Coloring",
    "EmptyCatalogWarning", "GraphPair", "InfeasibleAtThisNWarning", "InvariantError",
    "ParameterError", "PartialMatching", "RootedTreeShape", "ScoreMatrix", "WeightedHost",
    "build_catalog", "build_family", "colorful_count", "colorful_count_all_roots",
    "colorful_probability", "complement_pair", "compute_mu", "count_rooted_trees", "cross_moment",
    "enumerate_rooted_trees", "estimate_otter", "evaluate", "exact_signed_count",
    "is_uniquely_rooted", "match_by_threshold", "phi_approx", "phi_exact", "rate_h",
    "read_pair", "run_pipeline", "run_sweep", "sample_pair", "seeded_gamma", "seeded_match",
    "select_parameters", "solve_gamma", "threshold_data_driven", "threshold_fixed", "write_pair",
]
