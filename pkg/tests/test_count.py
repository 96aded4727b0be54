import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chandelier_match.count import (BulbTableCache, Coloring, WeightedHost, chandelier_counts,
                                    colorful_count, colorful_count_all_roots, colorful_counts_batch,
                                    colorful_probability, exact_signed_count, signed_counts,
                                    table_bytes, wall_time_scaling)
from chandelier_match.exceptions import BudgetExceededError, CapExceededError, ParameterError
from chandelier_match.oracle import (brute_colorful_count, brute_signed_count,
                                     exhaustive_coloring_expectation)
from chandelier_match.trees import (build_family, enumerate_rooted_trees, path_shape, single_vertex,
                                    star_shape)

from conftest import random_host_weights

SMALL_SHAPES = [s for K in range(5) for s in enumerate_rooted_trees(K)]


def test_colorful_probability():
    assert colorful_probability(0) == 1.0
    assert colorful_probability(1) == 0.5
    assert colorful_probability(2) == pytest.approx(6 / 27)
    assert colorful_probability(6) == pytest.approx(math.factorial(7) / 7**7)


def test_host_validation():
    with pytest.raises(ParameterError):
        WeightedHost(np.zeros((2, 3)))
    with pytest.raises(ParameterError):
        WeightedHost(np.array([[0, 1.0], [0.5, 0]]))
    with pytest.raises(ParameterError):
        WeightedHost(np.eye(3))
    host = WeightedHost.from_adjacency(np.array([[0, 1], [1, 0]]), 0.25)
    assert host.weights[0, 1] == 0.75 and host.weights[0, 0] == 0.0


def test_coloring_validation():
    with pytest.raises(ParameterError):
        Coloring(np.array([0, 3]), 2)
    c = Coloring.random(10, 3, seed=1)
    assert c.colors.max() <= 3
    assert Coloring(np.array([0, 1, 2, 0]), 2).is_colorful([0, 1, 2])
    assert not Coloring(np.array([0, 1, 2, 0]), 2).is_colorful([0, 3])


@given(st.integers(0, 10**6), st.sampled_from(SMALL_SHAPES))
def test_exact_routes_agree(seed, shape):
    _, W = random_host_weights(7, seed)
    host = WeightedHost(W)
    fast = signed_counts(host, shape)
    for i in range(7):
        ref = brute_signed_count(W, i, shape)
        assert exact_signed_count(host, i, shape) == pytest.approx(ref, abs=1e-9)
        assert fast[i] == pytest.approx(ref, abs=1e-9)


@given(st.integers(0, 10**6), st.sampled_from(SMALL_SHAPES))
def test_colorful_dp_matches_bruteforce(seed, shape):
    _, W = random_host_weights(7, seed)
    rng = np.random.default_rng(seed + 1)
    colors = rng.integers(0, shape.edges + 1, size=7)
    host = WeightedHost(W)
    got = colorful_count_all_roots(host, shape, colors)
    for i in range(7):
        assert got[i] == pytest.approx(brute_colorful_count(W, i, shape, colors), abs=1e-9)
        # all-roots vector and the single-root call agree exactly
        assert colorful_count(host, i, shape, Coloring(colors, shape.edges)) == got[i]


@pytest.mark.parametrize("shape", [s for K in range(4) for s in enumerate_rooted_trees(K)],
                         ids=str)
def test_exhaustive_expectation_equals_r_times_exact(shape):
    _, W = random_host_weights(6, 3)
    host = WeightedHost(W)
    r = colorful_probability(shape.edges)
    exact = signed_counts(host, shape)
    for root in (0, 4):
        got = exhaustive_coloring_expectation(host, shape, root)
        assert got == pytest.approx(r * exact[root], rel=1e-9, abs=1e-12)


@given(st.integers(0, 10**6), st.floats(-3, 3), st.sampled_from(SMALL_SHAPES))
def test_homogeneity(seed, c, shape):
    _, W = random_host_weights(8, seed)
    host = WeightedHost(W)
    colors = np.random.default_rng(seed).integers(0, shape.edges + 1, size=(3, 8))
    base = colorful_counts_batch(host, shape, colors)
    scaled = colorful_counts_batch(host.scaled(c), shape, colors)
    np.testing.assert_allclose(scaled, c**shape.edges * base, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(signed_counts(host.scaled(c), shape),
                               c**shape.edges * signed_counts(host, shape), rtol=1e-9, atol=1e-9)


@given(st.integers(0, 10**6), st.permutations(range(8)))
def test_relabelling_equivariance(seed, perm):
    _, W = random_host_weights(8, seed)
    perm = np.array(perm)
    shape = path_shape(3, rooted_at_end=False)
    a = signed_counts(WeightedHost(W), shape)
    inv = np.argsort(perm)
    b = signed_counts(WeightedHost(W[np.ix_(inv, inv)]), shape)
    np.testing.assert_allclose(b[perm], a, atol=1e-9)


def test_degree_and_center_path_closed_forms():
    n, q = 30, 0.3
    for seed in range(20):
        A, W = random_host_weights(n, seed, q)
        d = A.sum(axis=1)
        host = WeightedHost(W)
        edge = signed_counts(host, path_shape(1))
        np.testing.assert_allclose(edge, d - (n - 1) * q, atol=1e-10)
        cherry = signed_counts(host, star_shape(2))
        want = d * (d - 1) / 2 - (n - 2) * d * q + (n - 1) * (n - 2) / 2 * q * q
        np.testing.assert_allclose(cherry, want, atol=1e-9)


def test_degenerate_inputs():
    _, W = random_host_weights(5, 0)
    host = WeightedHost(W)
    colors = np.zeros((2, 5), dtype=int)
    np.testing.assert_array_equal(colorful_counts_batch(host, single_vertex(), colors), 1.0)
    zero = WeightedHost(np.zeros((5, 5)))
    colors = np.random.default_rng(0).integers(0, 3, size=(2, 5))
    np.testing.assert_array_equal(colorful_counts_batch(zero, path_shape(2), colors), 0.0)
    # monochromatic coloring: nothing is colorful
    mono = np.zeros((1, 5), dtype=int)
    np.testing.assert_array_equal(colorful_counts_batch(host, path_shape(2), mono), 0.0)


def test_caps():
    _, W = random_host_weights(41, 0)
    with pytest.raises(CapExceededError):
        exact_signed_count(WeightedHost(W), 0, path_shape(2))
    _, W = random_host_weights(6, 0)
    with pytest.raises(CapExceededError):
        exact_signed_count(WeightedHost(W), 0, path_shape(7))
    with pytest.raises(CapExceededError):
        exhaustive_coloring_expectation(WeightedHost(random_host_weights(12, 0)[1]), path_shape(3), 0)
    assert table_bytes(100, path_shape(3).levels, batch=2) > 0


def test_cached_chandelier_counts_match_generic_dp():
    fam = build_family(3, 2, 1)
    _, W = random_host_weights(12, 5)
    host = WeightedHost(W)
    colors = np.random.default_rng(2).integers(0, fam.N + 1, size=(4, 12))
    for use in (True, False):
        cache = BulbTableCache(host, fam.catalog, fam.M, colors, fam.N, enabled=use)
        for H in fam:
            got = chandelier_counts(cache, H)
            np.testing.assert_allclose(got, colorful_counts_batch(host, H.realized, colors),
                                       rtol=1e-12, atol=1e-12)


def test_cache_reuses_branches():
    fam = build_family(3, 2, 1)
    _, W = random_host_weights(10, 1)
    colors = np.random.default_rng(0).integers(0, fam.N + 1, size=(2, 10))
    cache = BulbTableCache(WeightedHost(W), fam.catalog, fam.M, colors, fam.N)
    for H in fam:
        chandelier_counts(cache, H)
    assert cache.misses == len(fam.catalog)
    assert cache.hits == 2 * len(fam) - len(fam.catalog)


def test_cache_budget():
    fam = build_family(2, 2, 1)
    _, W = random_host_weights(10, 1)
    colors = np.zeros((2, 10), dtype=int)
    with pytest.raises(BudgetExceededError):
        BulbTableCache(WeightedHost(W), fam.catalog, fam.M, colors, fam.N, memory_budget=10)


def test_monte_carlo_estimate_is_unbiased():
    _, W = random_host_weights(12, 8)
    host = WeightedHost(W)
    shape = path_shape(3)
    r = colorful_probability(3)
    colors = np.random.default_rng(1).integers(0, 4, size=(4000, 12))
    X = colorful_counts_batch(host, shape, colors)[:, 2] / r
    se = X.std(ddof=1) / math.sqrt(len(X))
    assert abs(X.mean() - signed_counts(host, shape)[2]) < 4 * se


def test_wall_time_scaling_reports_growth():
    out = wall_time_scaling(60, [2, 4, 6], colorings=2, seed=1)
    assert sorted(out["seconds_per_coloring"]) == [2, 4, 6]
    assert all(s > 0 for s in out["seconds_per_coloring"].values())
    assert math.isfinite(out["fitted_base"]) and out["fitted_base"] > 0
