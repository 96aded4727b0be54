import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chandelier_match.exceptions import ParameterError
from chandelier_match.matchers import (PartialMatching, evaluate, match_by_threshold, rate_h,
                                       seeded_gamma, seeded_match, solve_gamma)
from chandelier_match.model import make_rng, sample_pair
from chandelier_match.oracle import threshold_rule_bruteforce

square = st.integers(1, 8).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False)))


def _random_seeds(pi, frac, seed):
    n = len(pi)
    dom = make_rng(seed).choice(n, int(frac * n), replace=False)
    return PartialMatching(n, {int(i): int(pi[i]) for i in dom})


# -- PartialMatching ----------------------------------------------------------

def test_partial_matching_validation_and_io(tmp_path):
    with pytest.raises(ParameterError):
        PartialMatching(3, {0: 1, 2: 1})
    with pytest.raises(ParameterError):
        PartialMatching(3, {0: 3})
    m = PartialMatching(5, {3: 0, 1: 4})
    assert m.domain == [1, 3] and len(m) == 2 and 3 in m and m[1] == 4
    assert m.as_array().tolist() == [-1, 4, -1, 0, -1]
    assert PartialMatching.from_array(m.as_array()) == m
    path = tmp_path / "m.txt"
    m.write(path)
    assert path.read_text() == "1 4\n3 0\n"
    assert PartialMatching.read(path, 5) == m
    path.write_text("# header\n1 4\n1 2\n")
    with pytest.raises(ParameterError):
        PartialMatching.read(path, 5)


# -- threshold matching --------------------------------------------------------

def test_threshold_examples():
    S = np.ones((5, 5)) + 9 * np.eye(5)
    assert match_by_threshold(S, 5).pairs == {i: i for i in range(5)}
    S[2, 4] = 7
    got = match_by_threshold(S, 5)
    assert 2 not in got and got.pairs == {0: 0, 1: 1, 3: 3, 4: 4}


def test_threshold_collisions_dropped():
    S = np.array([[9.0, 0, 0], [9.0, 0, 0], [0, 0, 9.0]])
    assert match_by_threshold(S, 5).pairs == {2: 2}


def test_threshold_rejects_non_finite():
    with pytest.raises(ParameterError):
        match_by_threshold(np.array([[np.nan]]), 0.0)


@given(square, st.floats(-10, 10))
def test_threshold_matches_bruteforce(S, tau):
    assert match_by_threshold(S, tau).pairs == threshold_rule_bruteforce(S, tau)


int_square = st.integers(1, 8).flatmap(lambda n: arrays(np.int64, (n, n), elements=st.integers(-20, 20)))


@given(int_square, st.integers(-21, 21))
def test_threshold_invariant_under_increasing_maps(S, tau):
    # integer inputs keep these maps strictly increasing in floating point too
    S = S.astype(float)
    base = match_by_threshold(S, tau).pairs
    for f in (np.exp, lambda x: x**3 + 2 * x, lambda x: 3 * x - 1):
        assert match_by_threshold(f(S), f(float(tau))).pairs == base


# -- gamma -----------------------------------------------------------------------

def test_rate_h():
    assert rate_h(1.0) == 0.0
    assert rate_h(0.0) == 1.0
    assert rate_h(math.e) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ParameterError):
        rate_h(-1)


def test_solve_gamma_examples():
    assert solve_gamma(1.0) == pytest.approx(math.e, abs=1e-10)
    assert solve_gamma(0.5) == pytest.approx(2.1555, abs=1e-3)
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ParameterError):
            solve_gamma(bad)


@given(st.floats(1e-8, 1e6))
def test_solve_gamma_residual(target):
    g = solve_gamma(target)
    assert g > 1.0
    assert abs(rate_h(g) - target) <= 1e-12 * max(1.0, target)


def test_seeded_gamma():
    n, q = 1000, 0.1
    assert rate_h(seeded_gamma(n, q)) == pytest.approx(3 * math.log(n) / ((n - 2) * q * q))


# -- seeded matching -------------------------------------------------------------

def _hand_graph():
    A = np.zeros((6, 6), dtype=np.uint8)
    for u, v in [(0, 2), (1, 2), (1, 3), (2, 3), (3, 4), (2, 4), (4, 5), (3, 5)]:
        A[u, v] = A[v, u] = 1
    return A


def test_hand_trace():
    # q = 1/2, gamma = 2: threshold gamma (n - 2) q^2 = 2
    A = _hand_graph()
    seen = []
    out = seeded_match(A, A, PartialMatching(6, {0: 0, 1: 1}), q=0.5, gamma=2.0,
                       on_insert=lambda state, i, j: seen.append((i, j)))
    assert seen == [(2, 2), (3, 3), (4, 4), (5, 5)]
    assert out.pairs == {i: i for i in range(6)}


def test_empty_seeds_and_tiny_graphs():
    pair = sample_pair(50, 0.2, 1.0, seed=1)
    assert len(seeded_match(pair.A, pair.B, PartialMatching(50))) == 0
    pair = sample_pair(2, 0.5, 1.0, seed=1)
    assert seeded_match(pair.A, pair.B, PartialMatching(2, {0: 0})).pairs == {0: 0}
    with pytest.raises(ParameterError):
        seeded_match(pair.A, pair.B, PartialMatching(3))


@pytest.mark.parametrize("seed", range(3))
def test_counter_invariant_after_every_insertion(seed):
    pair = sample_pair(150, 0.3, 0.9, "uniform", seed)
    seeds = _random_seeds(pair.pi, 0.6, seed)
    calls = []

    def check(state, i, j):
        np.testing.assert_array_equal(state.as_dense(), state.recount())
        calls.append((i, j))

    # gamma lowered so that insertions actually happen at this n
    out = seeded_match(pair.A, pair.B, seeds, q=0.3, gamma=1.5, on_insert=check)
    assert calls
    assert all(out[i] == j for i, j in seeds.pairs.items())
    assert len(set(out.pairs.values())) == len(out)


def test_sparse_counters_agree_with_dense():
    pair = sample_pair(120, 0.3, 0.85, "uniform", 4)
    seeds = _random_seeds(pair.pi, 0.6, 4)
    kw = dict(q=0.3, gamma=1.5)
    dense = seeded_match(pair.A, pair.B, seeds, dense=True, **kw)
    sparse = seeded_match(pair.A, pair.B, seeds, dense=False, **kw)
    assert dense == sparse and len(dense) > len(seeds)

    def check(state, i, j):
        np.testing.assert_array_equal(state.as_dense(), state.recount())

    seeded_match(pair.A, pair.B, seeds, dense=False, on_insert=check, **kw)


@given(st.integers(0, 10**6), st.floats(0.0, 0.9))
def test_seeds_are_kept_and_output_is_injective(seed, frac):
    pair = sample_pair(40, 0.3, 0.6, "uniform", seed)
    # seeds may be wrong here: the invariants must hold regardless
    rng = make_rng(seed)
    dom = rng.choice(40, int(frac * 40), replace=False)
    img = rng.permutation(40)[: len(dom)]
    seeds = PartialMatching(40, dict(zip(dom.tolist(), img.tolist())))
    out = seeded_match(pair.A, pair.B, seeds)
    assert all(out[i] == j for i, j in seeds.pairs.items())
    assert len(set(out.pairs.values())) == len(out)


def test_seeded_recovers_with_many_seeds():
    pair = sample_pair(600, 0.1, 0.9, "uniform", 2)
    out = seeded_match(pair.A, pair.B, _random_seeds(pair.pi, 0.8, 2))
    assert evaluate(out, pair.pi)["exact"]


@pytest.mark.xfail(strict=True, reason="10% seeds give about 10 seed-witnessed common neighbors per "
                                       "true pair, far below the threshold of about 36 at n=1000")
def test_ten_percent_seeds_identity_instance():
    n, q = 1000, 0.1
    wins = 0
    for trial in range(10):
        pair = sample_pair(n, q, 1.0, "identity", trial)
        out = seeded_match(pair.A, pair.A, _random_seeds(np.arange(n), 0.1, trial), q=q)
        wins += evaluate(out, np.arange(n))["exact"]
    assert wins >= 9


# -- evaluate ----------------------------------------------------------------------

def test_evaluate_examples():
    ident = np.arange(5)
    full = PartialMatching(5, {i: i for i in range(5)})
    assert evaluate(full, ident) == {"precision": 1.0, "coverage": 1.0, "accuracy": 1.0,
                                     "exact": True, "matched": 5, "correct": 5}
    empty = evaluate(PartialMatching(5), ident)
    assert empty["coverage"] == 0.0 and empty["accuracy"] == 0.0 and not empty["exact"]
    m = PartialMatching(5, {0: 0, 1: 2, 2: 1, 4: 4})
    got = evaluate(m, ident)
    assert (got["correct"], got["matched"]) == (2, 4)
    assert got["precision"] == 0.5 and got["coverage"] == 0.8 and got["accuracy"] == 0.4
