"""Laplace-domain builders and numerical inversion."""

import math
import warnings

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from fracbd.laplace import (
    InversionWarning,
    LTEvaluator,
    TemperingSymbols,
    invert,
    lt_effective_catastrophe_pdf,
    lt_first_visit_pdf,
    lt_modified_q,
    lt_tc_bdpc,
    lt_tempered_family,
)
from fracbd.markov import (
    ModelSpec,
    TimeChange,
    Truncation,
    make_resolvent_accessor,
    subordinated_probs,
    transient_probs,
)
from fracbd.mlfunc import MLArgs, ml3
from fracbd.mcstats import ks_one_sample
from fracbd.randgen import RngStream
from fracbd.simulate import first_passage_times

TR = Truncation(200)
SPEC0 = ModelSpec.linear_model(1.0, 2.0, 0.0)  # catastrophe-free base chain
BASE = make_resolvent_accessor(SPEC0, TR)


class TestInvert:
    def test_constant(self):
        for t in (0.2, 1.0, 3.0):
            assert invert(lambda z: 1.0 / z, t) == pytest.approx(1.0, abs=1e-9)

    def test_exponential(self):
        assert invert(lambda z: 1.0 / (z + 2.0), 0.5) == pytest.approx(
            math.exp(-1.0), abs=1e-8
        )

    def test_ml_transform_pair(self):
        # z^{a-1}/(z^a + 1) inverts to E_a(-t^a)
        a = 0.5
        v = invert(lambda z: z ** (a - 1.0) / (z**a + 1.0), 1.0)
        assert v == pytest.approx(ml3(MLArgs(a, 1.0, 1.0, -1.0)), abs=1e-6)

    def test_gaver_stehfest_sanity(self):
        v = invert(lambda z: 1.0 / (z + 2.0), 0.5, method="gaver_stehfest")
        assert v == pytest.approx(math.exp(-1.0), abs=1e-3)

    def test_cross_check_warns_on_mismatch(self):
        # a transform whose GS inversion is garbage: oscillatory kernel
        f = lambda z: z / (z**2 + 400.0)  # cos(20 t)
        with pytest.warns(InversionWarning):
            invert(f, 1.0, cross_check=True)

    def test_round_trip_smoke_grid(self):
        worst = 0.0
        for a in (0.3, 0.8):
            for g in (1.0, 2.0):
                for w in (-1.0, 0.5):
                    F = lambda z: z ** (a * g - 1.0) / (z**a - w) ** g
                    for t in (0.1, 1.0, 5.0):
                        ref = ml3(MLArgs(a, 1.0, g, w * t**a))
                        worst = max(worst, abs(invert(F, t) - ref) / max(1.0, abs(ref)))
        assert worst < 1e-6


class TestStateTransforms:
    def test_pakes_relation_at_alpha_one(self):
        # alpha = 1: inverting the composed transform reproduces the
        # with-catastrophe chain's transient probabilities
        spec_nu = ModelSpec.linear_model(1.0, 2.0, 0.5)
        p = transient_probs(spec_nu, 1, 1.0, TR)
        for n in (0, 1, 2):
            ev = lt_tc_bdpc(BASE, 1.0, 0.5, 1, n)
            assert invert(ev, 1.0) == pytest.approx(p[n], abs=1e-6)

    def test_matches_subordination_oracle(self):
        ev = lt_tc_bdpc(BASE, 0.5, 0.5, 1, 0)
        val = invert(ev, 1.0)
        spec_nu = ModelSpec.linear_model(1.0, 2.0, 0.5)
        mean, se = subordinated_probs(
            spec_nu, 1, 1.0, TimeChange.inverse_stable(0.5), TR,
            n_mc=200_000, rng=RngStream(31, 1),
        )
        assert abs(val - mean[0]) < max(3 * se[0], 2e-3)

    def test_nu_zero_reduces_to_time_changed_bdp(self):
        ev = lt_tc_bdpc(BASE, 0.6, 0.0, 1, 1)
        z = 1.3
        expected = z ** (0.6 - 1.0) * BASE(1, z**0.6)[1]
        assert ev(z) == pytest.approx(expected, abs=1e-14)


class TestFirstVisit:
    def test_total_mass_limit(self):
        # the transform approaches total mass 1 at the z**alpha rate
        ev = lt_first_visit_pdf(BASE, 0.6, 0.5, 1)
        assert abs(ev(1e-12) - 1.0) < 1e-6

    def test_pdf_integrates_to_one(self):
        # the density is ~t^{alpha-1} at the origin and ~t^{-1-alpha} in the
        # tail; both ends are regularized by power substitutions
        alpha, nu, m = 0.6, 0.5, 1
        ev = lt_first_visit_pdf(BASE, alpha, nu, m)
        xs, ws = leggauss(64)
        v_nodes = 0.5 * (xs + 1.0)
        head = sum(
            w * invert(ev, v ** (1.0 / alpha)) * (1.0 / alpha) * v ** (1.0 / alpha - 1.0)
            for v, w in zip(v_nodes, 0.5 * ws)
        )
        tail = sum(
            w * invert(ev, u ** (-1.0 / alpha)) * (1.0 / alpha) * u ** (-1.0 / alpha - 1.0)
            for u, w in zip(v_nodes, 0.5 * ws)
        )
        assert head + tail == pytest.approx(1.0, abs=1e-4)

    def test_cdf_matches_simulated_first_visits(self):
        alpha, nu = 0.6, 0.5
        ev = lt_first_visit_pdf(BASE, alpha, nu, 1)
        spec_nu = ModelSpec.linear_model(1.0, 2.0, nu)
        times = first_passage_times(
            spec_nu, TimeChange.inverse_stable(alpha), 1, 10_000, RngStream(31, 2), n_cap=4000
        )
        grid = np.geomspace(1e-4, times.max() * 1.001, 400)
        cdf_grid = np.maximum.accumulate(
            np.clip([invert(lambda z: ev(z) / z, t) for t in grid], 0.0, 1.0)
        )
        cdf = lambda x: np.interp(x, grid, cdf_grid, left=0.0, right=cdf_grid[-1])
        assert ks_one_sample(times, cdf).passed


class TestModifiedQ:
    IMMIGRATION = ModelSpec(lambda n: 0.5 + n, lambda n: 2.0 * n, 0.0)

    def test_total_probability(self):
        base = make_resolvent_accessor(self.IMMIGRATION, Truncation(150))
        z = 1.0
        tot = lt_modified_q(base, 0.6, 0.4, 1, -1)(z)
        tot += sum(lt_modified_q(base, 0.6, 0.4, 1, n)(z) for n in range(0, 120))
        assert abs(z * tot - 1.0) < 1e-8

    def test_alpha1_matches_modified_transient(self):
        base = make_resolvent_accessor(self.IMMIGRATION, Truncation(150))
        spec = ModelSpec(lambda n: 0.5 + n, lambda n: 2.0 * n, 0.4)
        q = modified = __import__("fracbd.markov", fromlist=["modified_transient"]).modified_transient(
            spec, 1, 1.0, Truncation(150)
        )
        for n, idx in ((-1, 0), (0, 1), (1, 2)):
            ev = lt_modified_q(base, 1.0, 0.4, 1, n)
            assert invert(ev, 1.0) == pytest.approx(q[idx], abs=1e-6)

    def test_sentinel_inversion_vs_subordinated_modified(self):
        # E_Y[q_{1,-1}(Y)] via a dense grid + clock draws against the inverted
        # transform at alpha = 0.7
        from fracbd.markov import modified_transient
        from fracbd.randgen import sample_stable

        alpha, nu = 0.7, 0.4
        base = make_resolvent_accessor(self.IMMIGRATION, Truncation(150))
        ev = lt_modified_q(base, alpha, nu, 1, -1)
        val = invert(ev, 1.0)
        spec = ModelSpec(lambda n: 0.5 + n, lambda n: 2.0 * n, nu)
        ys = np.geomspace(1e-4, 60.0, 300)
        qs = np.array([modified_transient(spec, 1, y, Truncation(150))[0] for y in ys])
        gen = RngStream(31, 3).generator()
        draws = (1.0 / sample_stable(alpha, gen, size=200_000)) ** alpha
        emp = np.interp(draws, ys, qs, left=0.0, right=qs[-1]).mean()
        assert abs(val - emp) < 2e-3


class TestEffectiveCatastrophe:
    IMMIGRATION = ModelSpec(lambda n: 0.5 + n, lambda n: 2.0 * n, 0.0)

    def test_mass_at_origin(self):
        base = make_resolvent_accessor(self.IMMIGRATION, Truncation(150))
        ev = lt_effective_catastrophe_pdf(base, 0.7, 0.4, 1)
        assert ev(1e-9).real <= 1.0 + 1e-6

    def test_pdf_nonnegative(self):
        base = make_resolvent_accessor(self.IMMIGRATION, Truncation(150))
        ev = lt_effective_catastrophe_pdf(base, 0.7, 0.4, 1)
        for t in np.linspace(0.05, 5.0, 25):
            assert invert(ev, t) > -1e-6

    def test_ks_vs_simulated_times(self):
        alpha, nu = 0.7, 0.4
        base = make_resolvent_accessor(self.IMMIGRATION, Truncation(150))
        q_ev = lt_modified_q(base, alpha, nu, 1, -1)
        spec = ModelSpec(lambda n: 0.5 + n, lambda n: 2.0 * n, nu)
        times = first_passage_times(
            spec, TimeChange.inverse_stable(alpha), 1, 10_000, RngStream(31, 4),
            target="effective_catastrophe", n_cap=2000,
        )
        grid = np.geomspace(1e-4, times.max() * 1.001, 400)
        # CDF of K is q_{1,-1}(t) itself
        cdf_grid = np.maximum.accumulate(np.clip([invert(q_ev, t) for t in grid], 0.0, 1.0))
        cdf = lambda x: np.interp(x, grid, cdf_grid, left=0.0, right=cdf_grid[-1])
        assert ks_one_sample(times, cdf).passed


class TestTemperedFamily:
    def test_theta_collapse(self):
        # collapse error is O(theta**alpha): theta**alpha = 1e-8 here
        alpha = 0.8
        theta = 10.0 ** (-8.0 / alpha)
        for which, n in (("state", 1), ("first_visit", None), ("modified_q", -1),
                         ("effective_catastrophe", None)):
            ev_t = lt_tempered_family(BASE, alpha, theta, 0.5, which, 1, n=n)
            if which == "state":
                ev_s = lt_tc_bdpc(BASE, alpha, 0.5, 1, n)
            elif which == "first_visit":
                ev_s = lt_first_visit_pdf(BASE, alpha, 0.5, 1)
            elif which == "modified_q":
                ev_s = lt_modified_q(BASE, alpha, 0.5, 1, -1)
            else:
                ev_s = lt_effective_catastrophe_pdf(BASE, alpha, 0.5, 1)
            for z in (0.5, 1.0, 2.0):
                assert abs(ev_t(z) - ev_s(z)) < 1e-6

    def test_tempered_first_visit_cdf_vs_simulation(self):
        alpha, theta, nu = 0.6, 0.8, 0.5
        ev = lt_tempered_family(BASE, alpha, theta, nu, "first_visit", 1)
        spec_nu = ModelSpec.linear_model(1.0, 2.0, nu)
        times = first_passage_times(
            spec_nu, TimeChange.inverse_tempered(alpha, theta), 1, 10_000,
            RngStream(31, 5), n_cap=4000,
        )
        grid = np.geomspace(1e-4, times.max() * 1.001, 400)
        cdf_grid = np.maximum.accumulate(
            np.clip([invert(lambda z: ev(z) / z, t) for t in grid], 0.0, 1.0)
        )
        cdf = lambda x: np.interp(x, grid, cdf_grid, left=0.0, right=cdf_grid[-1])
        assert ks_one_sample(times, cdf).passed

    def test_expected_first_visit_closed_form_vs_quadrature(self):
        # E[T] = (alpha theta^{alpha-1}/nu)(1 - f(nu)) against the integral of
        # the inverted survival (tempered tails are light)
        alpha, theta, nu = 0.6, 0.8, 0.5
        ev = lt_tempered_family(BASE, alpha, theta, nu, "first_visit", 1)
        f_nu = BASE(1, nu)[0].real / BASE(0, nu)[0].real
        closed = alpha * theta ** (alpha - 1.0) / nu * (1.0 - f_nu)
        xs, ws = leggauss(200)
        T = 40.0
        tt = 0.5 * T * (xs + 1.0)
        surv = 1.0 - np.clip([invert(lambda z: ev(z) / z, t) for t in tt], 0.0, 1.0)
        mean_quad = float((0.5 * T * ws * surv).sum())
        assert closed == pytest.approx(mean_quad, rel=1e-3)

    def test_psi_symbol_properties(self):
        sym = TemperingSymbols(theta=0.7, alpha=0.6)
        assert sym.phi(0.0) == pytest.approx(0.0, abs=1e-15)
        assert sym.phi(2.0) > sym.phi(1.0) > 0.0
        flat = TemperingSymbols(theta=0.0, alpha=1.0)
        for z in (0.5, 2.0):
            for nu in (0.1, 1.0):
                assert flat.psi(z, nu) == pytest.approx(1.0, abs=1e-14)

    def test_riemann_lebesgue_decay(self):
        for builder in (
            lt_first_visit_pdf(BASE, 0.6, 0.5, 1),
            lt_tempered_family(BASE, 0.6, 0.8, 0.5, "first_visit", 1),
        ):
            assert abs(builder(1e3)) < 0.1
