"""Tests for the conditional inference layer."""

import math

import numpy as np
import pytest
from scipy.special import ndtri

from dtwsi.dtw_core import AlignmentMatrix, TimeSeriesPair, dtw, sign_vector
from dtwsi.dtw_core import TestDirection as Direction
from dtwsi.dtw_core import test_direction as direction_of
from dtwsi.inference import (
    DegenerateDirectionError,
    RegionMassUnderflowError,
    nuisance_decomposition,
    selective_confidence_interval,
    selective_p_value,
    truncated_gaussian_ci,
    truncated_gaussian_sf,
    z2_region,
)
from dtwsi.intervals import IntervalUnion
from dtwsi.parametric import DataLine

INF = math.inf


def random_pair(seed, n=5, m=5):
    rng = np.random.default_rng(seed)
    return TimeSeriesPair(rng.normal(size=n), rng.normal(size=m))


def observed_direction(pair):
    M, _ = dtw(pair)
    return M, direction_of(M, sign_vector(M, pair))


class TestNuisanceDecomposition:
    def test_algebraic_identities(self):
        for seed in range(10):
            pair = random_pair(seed)
            M, d = observed_direction(pair)
            line = nuisance_decomposition(pair, d)
            assert float(d.eta @ line.b) == pytest.approx(1.0, abs=1e-10)
            assert float(d.eta @ line.a) == pytest.approx(0.0, abs=1e-10)
            z_obs = float(d.eta @ pair.stacked())
            np.testing.assert_allclose(line.a + line.b * z_obs, pair.stacked(), atol=1e-10)

    def test_identity_covariance_unit_direction(self):
        pair = random_pair(3, n=3, m=2)
        eta = np.zeros(5)
        eta[0] = 1.0
        line = nuisance_decomposition(pair, Direction(eta=eta, s_hat=np.zeros(6)))
        np.testing.assert_allclose(line.b, eta)
        expected = pair.stacked().copy()
        expected[0] = 0.0
        np.testing.assert_allclose(line.a, expected, atol=1e-12)

    def test_degenerate_direction_raises(self):
        x = np.array([0.4, -1.0, 2.2])
        pair = TimeSeriesPair(x, x.copy())
        M, d = observed_direction(pair)
        assert not d.eta.any()
        with pytest.raises(DegenerateDirectionError, match="degenerate"):
            nuisance_decomposition(pair, d)


class TestZ2Region:
    def test_single_constraint_half_line(self):
        # one cell, sign +1: a-difference -2, b-difference 1 -> z >= 2
        line = DataLine(np.array([-2.0, 0.0]), np.array([1.0, 0.0]), 1)
        M = AlignmentMatrix(1, 1, (((1, 1)),))
        region = z2_region(line, M, np.array([1.0]))
        assert region.intervals == ((2.0, INF),)

    def test_z_free_constraints_give_real_line(self):
        line = DataLine(np.array([3.0, 0.0]), np.array([1.0, 1.0]), 1)
        M = AlignmentMatrix(1, 1, (((1, 1)),))
        assert z2_region(line, M, np.array([1.0])) == IntervalUnion.real_line()

    def test_infeasible_constant_constraint_empty(self):
        line = DataLine(np.array([-1.0, 0.0]), np.array([1.0, 1.0]), 1)
        M = AlignmentMatrix(1, 1, (((1, 1)),))
        assert z2_region(line, M, np.array([1.0])).is_empty

    def test_contains_observed_parameter(self):
        for seed in range(15):
            pair = random_pair(seed, n=4, m=6)
            M, d = observed_direction(pair)
            line = nuisance_decomposition(pair, d)
            z_obs = float(d.eta @ pair.stacked())
            region = z2_region(line, M, d.s_hat)
            assert region.contains(z_obs, tol=1e-9 * max(1.0, abs(z_obs)))


class TestTruncatedGaussianSf:
    def test_full_line_center(self):
        assert truncated_gaussian_sf(0.0, 1.0, IntervalUnion.real_line()) == pytest.approx(0.5)

    def test_half_line_bottom(self):
        region = IntervalUnion([(0.0, INF)])
        assert truncated_gaussian_sf(0.0, 1.0, region) == pytest.approx(1.0)

    def test_matches_rejection_monte_carlo(self):
        region = IntervalUnion([(-1.0, 1.0), (2.0, 3.0)])
        p = truncated_gaussian_sf(0.5, 1.0, region)
        rng = np.random.default_rng(12345)
        draws = rng.normal(size=10_000_000)
        member = ((draws >= -1.0) & (draws <= 1.0)) | ((draws >= 2.0) & (draws <= 3.0))
        kept = draws[member]
        est = float(np.mean(kept >= 0.5))
        se = math.sqrt(est * (1.0 - est) / kept.size)
        assert abs(p - est) <= 3.0 * se

    def test_monotone_in_observation(self):
        region = IntervalUnion([(-2.0, -1.0), (0.5, 1.5), (3.0, 4.0)])
        zs = [-1.5, 0.6, 1.0, 1.4, 3.2, 3.9]
        ps = [truncated_gaussian_sf(z, 1.3, region) for z in zs]
        assert all(p1 >= p2 - 1e-12 for p1, p2 in zip(ps, ps[1:]))

    def test_high_precision_far_tails(self):
        mpmath = pytest.importorskip("mpmath")
        mp = mpmath.mp
        mp.dps = 50

        def phi_bar(x):
            return mpmath.erfc(x / mpmath.sqrt(2)) / 2

        def exact(z_obs, sigma, intervals):
            num = den = mpmath.mpf(0)
            for lo, hi in intervals:
                lo_s, hi_s = mpmath.mpf(lo) / sigma, mpmath.mpf(hi) / sigma
                den += phi_bar(lo_s) - phi_bar(hi_s)
                lo_n = max(lo, z_obs)
                if lo_n < hi:
                    num += phi_bar(mpmath.mpf(lo_n) / sigma) - phi_bar(hi_s)
            return float(num / den)

        rng = np.random.default_rng(77)
        for _ in range(25):
            sigma = float(rng.uniform(0.5, 2.0))
            edges = np.sort(rng.uniform(-8.0 * sigma, 8.0 * sigma, size=6))
            intervals = [(edges[0], edges[1]), (edges[2], edges[3]), (edges[4], edges[5])]
            region = IntervalUnion(intervals)
            z_obs = float(rng.uniform(*intervals[rng.integers(0, 3)]))
            got = truncated_gaussian_sf(z_obs, sigma, region)
            want = exact(z_obs, sigma, intervals)
            assert got == pytest.approx(want, rel=1e-10, abs=1e-300)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            truncated_gaussian_sf(0.0, 1.0, IntervalUnion.empty())
        with pytest.raises(ValueError):
            truncated_gaussian_sf(5.0, 1.0, IntervalUnion([(0.0, 1.0)]))
        with pytest.raises(ValueError):
            truncated_gaussian_sf(0.5, 0.0, IntervalUnion([(0.0, 1.0)]))

    def test_underflow_raises_with_log_mass(self):
        region = IntervalUnion([(40.0, 41.0)])
        with pytest.raises(RegionMassUnderflowError, match="log-mass"):
            truncated_gaussian_sf(40.5, 1.0, region)


class TestSelectivePValue:
    def test_contract_on_near_identical_series(self):
        rng = np.random.default_rng(21)
        x = np.sin(np.linspace(0, 2, 5))
        pair = TimeSeriesPair(x, x + 1e-8 * rng.normal(size=5))
        res = selective_p_value(pair)
        assert 0.0 <= res.p_selective <= 1.0
        assert res.region.contains(res.z_obs, tol=1e-8)

    def test_engines_agree(self):
        rng = np.random.default_rng(0)
        for seed in range(30):
            n = int(rng.integers(2, 6))
            m = int(rng.integers(2, 6))
            pair = random_pair(seed, n=n, m=m)
            fast = selective_p_value(pair)
            slow = selective_p_value(pair, engine="enumeration")
            assert fast.p_selective == pytest.approx(slow.p_selective, abs=1e-9)

    def test_statistic_is_alignment_statistic(self):
        pair = random_pair(99)
        res = selective_p_value(pair)
        want = sum(abs(pair.x[i - 1] - pair.y[j - 1]) for i, j in res.alignment.path)
        assert res.z_obs == pytest.approx(want, abs=1e-10)

    def test_null_rejection_rate_within_binomial_band(self):
        hits = 0
        for t in range(120):
            rng = np.random.default_rng([202, t])
            pair = TimeSeriesPair(rng.normal(size=5), rng.normal(size=5))
            hits += selective_p_value(pair).p_selective <= 0.05
        assert 0.008 <= hits / 120 <= 0.12

    def test_unknown_engine(self):
        with pytest.raises(ValueError):
            selective_p_value(random_pair(0), engine="sampling")


class TestConfidenceInterval:
    def test_untruncated_reduction(self):
        z_obs, sigma, alpha = 1.3, 2.0, 0.05
        lo, hi = truncated_gaussian_ci(z_obs, sigma, IntervalUnion.real_line(), alpha)
        half = sigma * ndtri(1.0 - alpha / 2.0)
        assert lo == pytest.approx(z_obs - half, abs=1e-6)
        assert hi == pytest.approx(z_obs + half, abs=1e-6)

    def test_positive_length_and_wrapper(self):
        pair = random_pair(5)
        res = selective_p_value(pair)
        lo, hi = selective_confidence_interval(pair, 0.1, result=res)
        assert hi > lo
        lo2, hi2 = selective_confidence_interval(pair, 0.1)
        assert (lo2, hi2) == (lo, hi)

    def test_nested_in_alpha(self):
        pair = random_pair(6)
        res = selective_p_value(pair)
        lo1, hi1 = truncated_gaussian_ci(res.z_obs, res.sigma, res.region, 0.2)
        lo2, hi2 = truncated_gaussian_ci(res.z_obs, res.sigma, res.region, 0.05)
        assert lo2 <= lo1 and hi1 <= hi2

    def test_coverage_on_simulated_truncated_draws(self):
        region = IntervalUnion([(-1.5, 0.5), (1.0, 4.0)])
        theta, sigma, alpha = 0.8, 1.0, 0.05
        rng = np.random.default_rng(404)
        covered = 0
        reps = 500
        for _ in range(reps):
            while True:
                z = float(rng.normal(theta, sigma))
                if region.contains(z):
                    break
            lo, hi = truncated_gaussian_ci(z, sigma, region, alpha)
            covered += lo <= theta <= hi
        assert 0.90 <= covered / reps <= 0.99

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            truncated_gaussian_ci(0.0, 1.0, IntervalUnion.real_line(), 1.5)
