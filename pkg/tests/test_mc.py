"""Substream layout, log-domain accumulation, and interval helpers."""

import numpy as np
import pytest
from scipy import stats
from scipy.special import logsumexp

from uwbbounds.mc import (LogAccumulator, gaussian_ci, lognormal_ci, normal_qq_corr,
                          pairwise_logsumexp, substream)


class TestSubstream:
    def test_reproducible(self):
        a = substream(123, 2, stratum=4, index=7).standard_normal(16)
        b = substream(123, 2, stratum=4, index=7).standard_normal(16)
        np.testing.assert_array_equal(a, b)

    def test_distinct_axes(self):
        base = substream(123, 2, stratum=4, index=7).standard_normal(16)
        for kw in ({"seed": 124}, {"estimator": 3}, {"stratum": 5}, {"index": 8}):
            args = {"seed": 123, "estimator": 2, "stratum": 4, "index": 7}
            args.update(kw)
            other = substream(**args).standard_normal(16)
            assert not np.array_equal(base, other)

    def test_streams_uncorrelated(self):
        # adjacent indices should look independent
        n = 4000
        x = np.array([substream(0, 1, index=i).standard_normal() for i in range(n)])
        y = np.array([substream(0, 1, index=i + 1).standard_normal() for i in range(n)])
        assert abs(np.corrcoef(x, y)[0, 1]) < 0.05

    def test_marginal_uniformity(self):
        u = substream(7, 9).random(1_000_000)
        counts, _ = np.histogram(u, bins=20, range=(0.0, 1.0))
        chi2 = ((counts - 50_000.0) ** 2 / 50_000.0).sum()
        assert stats.chi2.sf(chi2, df=19) > 0.01


class TestPairwiseLogsumexp:
    def test_matches_scipy(self):
        rng = np.random.default_rng(3)
        v = rng.normal(size=1001) * 50.0
        assert pairwise_logsumexp(v) == pytest.approx(logsumexp(v), rel=1e-12)

    def test_order_of_magnitude_spread(self):
        v = np.array([-5000.0, -5000.0, -5010.0])
        expect = -5000.0 + np.log(2.0 + np.exp(-10.0))
        assert pairwise_logsumexp(v) == pytest.approx(expect, abs=1e-12)

    def test_split_invariance(self):
        # merging partial accumulators must equal one-shot accumulation
        rng = np.random.default_rng(4)
        v = rng.normal(size=777) * 100.0
        whole = LogAccumulator.from_log_values(v)
        left = LogAccumulator.from_log_values(v[:300])
        right = LogAccumulator.from_log_values(v[300:])
        merged = left.merge(right)
        assert merged.log_mean == pytest.approx(whole.log_mean, rel=1e-13)
        assert merged.log_variance == pytest.approx(whole.log_variance, rel=1e-10)

    def test_empty(self):
        assert pairwise_logsumexp(np.array([])) == -np.inf


class TestLogAccumulator:
    def test_small_known_values(self):
        acc = LogAccumulator()
        for x in (1.0, 2.0, 3.0):
            acc.accumulate(np.log(x))
        assert np.exp(acc.log_mean) == pytest.approx(2.0, rel=1e-14)
        assert np.exp(acc.log_variance) == pytest.approx(1.0, rel=1e-12)

    def test_shifted_values(self):
        # same data scaled by e^-5000: log stats shift, relative spread fixed
        acc = LogAccumulator.from_log_values(np.log([1.0, 2.0, 3.0]) - 5000.0)
        assert acc.log_mean == pytest.approx(np.log(2.0) - 5000.0, rel=1e-12)
        assert acc.log_variance == pytest.approx(np.log(1.0) - 10000.0, abs=1e-9)

    def test_zero_variance(self):
        acc = LogAccumulator.from_log_values(np.full(10, -321.5))
        assert acc.log_mean == pytest.approx(-321.5)
        assert acc.log_variance == -np.inf
        assert acc.se_log_mean == 0.0

    def test_rejects_nonfinite(self):
        acc = LogAccumulator()
        with pytest.raises(ValueError):
            acc.accumulate(np.nan)
        with pytest.raises(ValueError):
            acc.accumulate(np.inf)

    def test_se_matches_direct(self):
        rng = np.random.default_rng(5)
        x = np.abs(rng.normal(size=500)) + 0.1
        acc = LogAccumulator.from_log_values(np.log(x))
        direct = x.std(ddof=1) / np.sqrt(500) / x.mean()
        assert acc.se_log_mean == pytest.approx(direct, rel=1e-10)


class TestIntervals:
    def test_gaussian_ci_frozen(self):
        # t_{0.975, 2} * sqrt(1/3) = 4.302653 * 0.5773503
        assert gaussian_ci(2.0, 1.0, 3) == pytest.approx(2.4841377, rel=1e-6)

    def test_gaussian_ci_shrinks(self):
        # large n: t -> z, halfwidth -> 1.96 / sqrt(n)
        assert gaussian_ci(0.0, 1.0, 10_000) == pytest.approx(0.0196, abs=1e-4)

    def test_lognormal_recovers_mean(self):
        rng = np.random.default_rng(6)
        logs = rng.normal(0.0, 1.0, size=200_000)
        iv = lognormal_ci(float(logs.mean()), float(logs.var(ddof=1)), logs.size)
        assert iv.arithmetic_mean == pytest.approx(np.exp(0.5), rel=0.05)
        assert iv.factor > 1.0

    def test_qq_corr(self):
        rng = np.random.default_rng(7)
        assert normal_qq_corr(rng.normal(size=5000)) > 0.999
        assert normal_qq_corr(rng.exponential(size=5000)) < 0.99
        assert normal_qq_corr(np.zeros(10)) == 1.0
