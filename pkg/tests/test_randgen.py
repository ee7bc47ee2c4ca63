"""Variate generators: Laplace-transform property tests, reproducibility, laws."""

import math

import numpy as np
import pytest

from fracbd._talbot import talbot_invert
from fracbd.errors import RejectionCapError
from fracbd.mlfunc import ml_cdf, tempered_ml_survival
from fracbd.randgen import (
    RngStream,
    StableParams,
    _inverse_tempered_grid_crossings,
    _tempered_stable_auto,
    sample_inverse_stable,
    sample_inverse_tempered,
    sample_ml,
    sample_stable,
    sample_tempered_ml,
    sample_tempered_stable,
)
from fracbd.mcstats import ks_one_sample, ks_two_sample

N_LT = 10**6


def lt_dev(samples, z, exact):
    """Signed deviation of the Monte Carlo Laplace transform in stderr units."""
    v = np.exp(-z * samples)
    return (v.mean() - exact) / (v.std(ddof=1) / math.sqrt(len(v)))


class TestStable:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
    def test_laplace_transform(self, alpha):
        s = sample_stable(alpha, RngStream(11, 1), size=N_LT)
        for z in (0.5, 1.0, 2.0):
            assert abs(lt_dev(s, z, math.exp(-(z**alpha)))) < 4.0

    def test_positive_and_finite(self):
        s = sample_stable(0.5, RngStream(11, 2), size=100_000)
        assert np.all(s > 0.0) and np.all(np.isfinite(s))

    def test_degenerate_drift_limit(self):
        # D_1(1) = 1: for alpha near 1 the median approaches 1
        s = sample_stable(0.999, RngStream(11, 3), size=50_000)
        assert abs(np.median(s) - 1.0) < 0.05

    def test_reproducible(self):
        a = sample_stable(0.6, RngStream(42, 7), size=1000)
        b = sample_stable(0.6, RngStream(42, 7), size=1000)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = sample_stable(0.6, RngStream(42, 7), size=1000)
        b = sample_stable(0.6, RngStream(42, 8), size=1000)
        assert not np.array_equal(a, b)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            sample_stable(1.0, RngStream(0))


class TestTemperedStable:
    def test_acceptance_rate_matches_stable_lt(self):
        # accept prob is e^{-theta X}; empirical rate = E[e^{-theta X}] = e^{-1}
        gen = RngStream(12, 1).generator()
        n = 10**5
        x = sample_stable(0.5, gen, size=n)
        acc = (gen.uniform(size=n) <= np.exp(-x)).mean()
        se = math.sqrt(acc * (1 - acc) / n)
        assert abs(acc - math.exp(-1.0)) < 3 * se

    def test_laplace_transform(self):
        p = StableParams(alpha=0.5, theta=0.5, t=1.0)
        gen = RngStream(12, 2).generator()
        d = np.array([sample_tempered_stable(p, gen) for _ in range(200_000)])
        exact = math.exp(-((1.0 + 0.5) ** 0.5 - 0.5**0.5))  # 0.595899
        assert abs(lt_dev(d, 1.0, exact)) < 4.0

    def test_theta_zero_is_scaled_stable(self):
        p = StableParams(alpha=0.6, theta=0.0, t=2.0)
        gen = RngStream(12, 3).generator()
        d = np.array([sample_tempered_stable(p, gen) for _ in range(20_000)])
        s = 2.0 ** (1 / 0.6) * sample_stable(0.6, RngStream(12, 4), size=20_000)
        assert ks_two_sample(d, s).passed

    def test_rejection_cap(self):
        with pytest.raises(RejectionCapError):
            sample_tempered_stable(StableParams(0.5, 5.0, 40.0), RngStream(1), max_attempts=50)

    def test_auto_subdivision_handles_large_t(self):
        # same regime as the cap test, exact by infinite divisibility
        gen = RngStream(12, 5).generator()
        d = _tempered_stable_auto(0.5, 5.0, 40.0, gen)
        assert d > 0.0 and np.isfinite(d)


class TestMittagLeffler:
    def test_alpha1_exponential_mean(self):
        x = sample_ml(1.0, 2.0, RngStream(13, 1), size=10**5)
        se = x.std(ddof=1) / math.sqrt(len(x))
        assert abs(x.mean() - 0.5) < 3 * se

    def test_ks_against_cdf(self):
        x = sample_ml(0.5, 1.0, RngStream(13, 2), size=10**4)
        assert ks_one_sample(x, lambda v: ml_cdf(0.5, 1.0, v)).passed

    def test_rate_scaling_law(self):
        # draws at rate c are c**(-1/alpha) times draws at rate 1 in law
        a, c = 0.6, 3.0
        x1 = sample_ml(a, c, RngStream(13, 3), size=10**4)
        x2 = c ** (-1.0 / a) * sample_ml(a, 1.0, RngStream(13, 4), size=10**4)
        assert ks_two_sample(x1, x2).passed


class TestTemperedML:
    def test_ks_against_survival(self):
        a, th, rate = 0.6, 0.8, 1.5
        x = sample_tempered_ml(a, th, rate, RngStream(14, 1), size=10**4)
        cdf = lambda v: 1.0 - tempered_ml_survival(a, th, rate, v)
        assert ks_one_sample(x, cdf).passed

    def test_theta_to_zero_collapses_to_ml(self):
        a, rate = 0.6, 1.0
        x = sample_tempered_ml(a, 1e-6, rate, RngStream(14, 2), size=10**4)
        assert ks_one_sample(x, lambda v: ml_cdf(a, rate, v)).passed

    def test_large_rate_concentrates_at_zero(self):
        x = sample_tempered_ml(0.6, 0.8, 1e4, RngStream(14, 3), size=10**4)
        assert np.quantile(x, 0.99) < 0.05


class TestInverseStable:
    def test_self_similarity(self):
        # Y(t) equals t**alpha * Y(1) in law
        a, t = 0.6, 2.5
        y1 = sample_inverse_stable(a, t, RngStream(15, 1), size=10**4)
        y2 = t**a * sample_inverse_stable(a, 1.0, RngStream(15, 2), size=10**4)
        assert ks_two_sample(y1, y2).passed

    def test_laplace_functional_vs_inversion(self):
        # E[e^{-s Y(t)}] = ILT[z^{a-1}/(z^a + s)](t)
        a, t, s = 0.5, 1.0, 1.0
        y = sample_inverse_stable(a, t, RngStream(15, 3), size=N_LT)
        exact = talbot_invert(lambda z: z ** (a - 1.0) / (z**a + s), t)
        assert abs(lt_dev(y, s, exact)) < 3.0

    def test_short_time_collapse(self):
        y = sample_inverse_stable(0.5, 1e-6, RngStream(15, 4), size=10**4)
        assert y.max() < 1e-2


class TestInverseTempered:
    def test_theta_to_zero_matches_inverse_stable(self):
        a, t = 0.6, 1.0
        y1 = sample_inverse_tempered(a, 1e-6, t, RngStream(16, 1), size=10**4)
        y2 = sample_inverse_stable(a, t, RngStream(16, 2), size=10**4)
        assert ks_two_sample(y1, y2).passed

    def test_mean_against_laplace_oracle(self):
        # E[Y(t)] = ILT[1/(z phi(z))](t)
        a, th, t = 0.6, 0.8, 1.0
        y = sample_inverse_tempered(a, th, t, RngStream(16, 3), size=400_000)
        phi = lambda z: (z + th) ** a - th**a
        exact = talbot_invert(lambda z: 1.0 / (z * phi(z)), t)
        se = y.std(ddof=1) / math.sqrt(len(y))
        assert abs(y.mean() - exact) < 3 * se

    def test_against_grid_walk_sampler(self):
        # independent slow sampler with a rigorous one-step bias bound
        a, th, t = 0.6, 0.8, 1.0
        gen = RngStream(16, 4).generator()
        walk = np.array(
            [_inverse_tempered_grid_crossings(a, th, [t], gen, ds=0.01)[0] for _ in range(4000)]
        )
        fast = sample_inverse_tempered(a, th, t, RngStream(16, 5), size=4000)
        # the walk reports the right endpoint of its step: shift by half a step
        assert ks_two_sample(walk - 0.005, fast).passed

    def test_first_passage_monotone_in_level(self):
        # crossings of one increasing path are ordered by construction; the
        # sampler couples through shared uniforms the same way
        gen = RngStream(16, 6).generator()
        cross = _inverse_tempered_grid_crossings(0.6, 0.8, [0.5, 1.0, 2.0], gen, ds=0.02)
        assert cross[0] <= cross[1] <= cross[2]
        u = RngStream(16, 7).generator().uniform(size=2000)
        from fracbd.randgen import _inverse_tempered_cdf_grid

        ys = []
        for t in (0.5, 1.0, 2.0):
            s_grid, cdf = _inverse_tempered_cdf_grid(0.6, 0.8, t)
            ys.append(np.interp(u, cdf, s_grid))
        assert np.all(ys[0] <= ys[1] + 1e-12) and np.all(ys[1] <= ys[2] + 1e-12)
