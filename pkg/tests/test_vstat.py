"""Tests for the estimators and their diagnostic decompositions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uvstats.empirical import empirical_cdf, smoothed_cdf
from uvstats.errors import ConfigError, PreconditionError
from uvstats.kernels import Kernel, gini_kernel, project, variance_kernel
from uvstats.models import (
    exponential,
    normal,
    pareto,
    point_mass,
    student_t,
    uniform,
)
from uvstats.vstat import (
    hoeffding_linear_part,
    u_statistic,
    uv_gap,
    v_statistic_edf,
    v_statistic_plugin,
)

RNG = np.random.default_rng(20260814)

samples = st.lists(st.floats(-50.0, 50.0), min_size=2, max_size=40)


def abs_kernel_generic():
    # same function as the gini kernel but unnamed: exercises generic paths
    return Kernel(name="abs_generic", func=lambda x, y: np.abs(x - y),
                  lambda_prime=1.0)


class TestVStatistic:
    def test_hand_sum_gini(self):
        # (1/4)(0 + 1 + 1 + 0)
        assert v_statistic_edf(gini_kernel(), [0.0, 1.0]).value == \
            pytest.approx(0.5, abs=1e-15)

    def test_hand_sum_variance(self):
        # (1/4)(0 + 2 + 2 + 0): the population variance of the EDF
        assert v_statistic_edf(variance_kernel(), [0.0, 2.0]).value == \
            pytest.approx(1.0, abs=1e-15)

    def test_fast_sorted_equals_generic(self):
        x = RNG.uniform(size=10_000)
        fast = v_statistic_edf(gini_kernel(), x)
        assert fast.path == "fast-sorted"
        sub = x[:2000]
        generic = v_statistic_edf(gini_kernel(), sub, force_generic=True)
        again = v_statistic_edf(gini_kernel(), sub)
        assert generic.path == "generic-quadratic"
        assert again.value == pytest.approx(generic.value, rel=1e-10)

    def test_moment_form_equals_generic(self):
        x = RNG.normal(size=2000)
        a = v_statistic_edf(variance_kernel(), x)
        b = v_statistic_edf(variance_kernel(), x, force_generic=True)
        assert a.path == "moment-form"
        assert a.value == pytest.approx(b.value, rel=1e-10)

    @given(samples)
    @settings(max_examples=40, deadline=None)
    def test_fast_paths_property(self, xs):
        x = np.asarray(xs)
        for kern in (gini_kernel(), variance_kernel()):
            a = v_statistic_edf(kern, x).value
            b = v_statistic_edf(kern, x, force_generic=True).value
            assert a == pytest.approx(b, rel=1e-10, abs=1e-12)

    def test_gini_translation_and_scale(self):
        x = RNG.normal(size=300)
        base = v_statistic_edf(gini_kernel(), x).value
        shifted = v_statistic_edf(gini_kernel(), x + 17.0).value
        scaled = v_statistic_edf(gini_kernel(), 3.0 * x).value
        assert shifted == pytest.approx(base, rel=1e-12)
        assert scaled == pytest.approx(3.0 * base, rel=1e-12)

    def test_variance_translation_and_scale(self):
        x = RNG.normal(size=300)
        base = v_statistic_edf(variance_kernel(), x).value
        assert v_statistic_edf(variance_kernel(), x - 5.0).value == \
            pytest.approx(base, rel=1e-10)
        assert v_statistic_edf(variance_kernel(), 3.0 * x).value == \
            pytest.approx(9.0 * base, rel=1e-12)

    def test_empty_sample(self):
        with pytest.raises(PreconditionError):
            v_statistic_edf(gini_kernel(), [])


class TestUStatistic:
    def test_hand_value(self):
        assert u_statistic(gini_kernel(), [0.0, 1.0]).value == \
            pytest.approx(1.0, abs=1e-15)

    def test_zero_diagonal_relation(self):
        x = RNG.uniform(size=51)
        n = x.size
        u = u_statistic(gini_kernel(), x).value
        v = v_statistic_edf(gini_kernel(), x).value
        assert u == pytest.approx(v * n / (n - 1.0), rel=1e-12)

    def test_unbiased_sample_variance(self):
        x = RNG.normal(size=123)
        oracle = float(np.sum((x - x.mean()) ** 2) / (x.size - 1))
        assert u_statistic(variance_kernel(), x).value == \
            pytest.approx(oracle, rel=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(PreconditionError):
            u_statistic(gini_kernel(), [1.0])


class TestGap:
    def test_hand_values(self):
        rec = uv_gap(gini_kernel(), [0.0, 1.0])
        assert rec.s1 == pytest.approx(math.sqrt(2.0) * 0.5, abs=1e-15)
        assert rec.s2 == 0.0
        assert rec.gap == pytest.approx(math.sqrt(2.0) * 0.5, abs=1e-15)

    def test_zero_diagonal_makes_s2_zero(self):
        rec = uv_gap(variance_kernel(), RNG.normal(size=40))
        assert rec.s2 == 0.0

    @given(samples)
    @settings(max_examples=40, deadline=None)
    def test_identity_is_algebraic(self, xs):
        for kern in (gini_kernel(), variance_kernel(), abs_kernel_generic()):
            rec = uv_gap(kern, np.asarray(xs))
            assert abs(rec.identity_residual) <= 1e-10 * (1.0 + abs(rec.gap))

    def test_gap_shrinks_like_root_n(self):
        # E gap = -sqrt(n) (V - diag-mean)/(n-1) ~ c/sqrt(n)
        means = {}
        for n in (1000, 16000):
            gaps = [uv_gap(gini_kernel(), RNG.uniform(size=n)).gap
                    for _ in range(8)]
            means[n] = np.mean(gaps)
        ratio = means[1000] / means[16000]
        assert ratio == pytest.approx(4.0, rel=0.35)

    def test_full_expansion_identity(self):
        # root-n (U_n - theta) = S1 - S2 + root-n (V_n - theta)
        theta = 1.0 / 3.0
        x = RNG.uniform(size=400)
        rec = uv_gap(gini_kernel(), x)
        lhs = math.sqrt(400) * (rec.u_value - theta)
        rhs = rec.s1 - rec.s2 + math.sqrt(400) * (rec.v_value - theta)
        assert lhs == pytest.approx(rhs, abs=1e-10)


class TestPlugin:
    def test_point_mass_gini_zero(self):
        assert v_statistic_plugin(gini_kernel(), point_mass(0.0)).value == 0.0

    def test_uniform_gini_third(self):
        # oracle: double integral of |x - y| over the unit square = 1/3
        rec = v_statistic_plugin(gini_kernel(), uniform(0.0, 1.0))
        assert rec.value == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert rec.estimator_kind == "V-plugin-generic"

    def test_normal_variance_kernel_one(self):
        # oracle: E (X - Y)^2 / 2 = sigma^2
        rec = v_statistic_plugin(variance_kernel(), normal(0.0, 1.0))
        assert rec.value == pytest.approx(1.0, abs=1e-9)

    def test_normal_gini_closed_form(self):
        # E|X - Y| = 2 sigma / sqrt(pi) for X, Y independent N(mu, sigma^2)
        rec = v_statistic_plugin(gini_kernel(), normal(3.0, 2.0))
        assert rec.value == pytest.approx(4.0 / math.sqrt(math.pi), rel=1e-9)

    def test_exponential_gini(self):
        # E|X - Y| = 1/rate for independent exponentials
        rec = v_statistic_plugin(gini_kernel(), exponential(0.5))
        assert rec.value == pytest.approx(2.0, rel=1e-9)

    def test_pareto_gini(self):
        # mean difference of Pareto(a, 1): 2a / ((a-1)(2a-1))
        rec = v_statistic_plugin(gini_kernel(), pareto(3.0, 1.0))
        assert rec.value == pytest.approx(0.6, rel=1e-8)

    def test_student_variance_kernel(self):
        rec = v_statistic_plugin(variance_kernel(), student_t(5.0))
        assert rec.value == pytest.approx(5.0 / 3.0, rel=1e-7)

    def test_edf_agreement_invariant(self):
        x = RNG.normal(size=400)
        x[:40] = x[40:80]  # inject ties
        for kern in (gini_kernel(), variance_kernel(), abs_kernel_generic()):
            a = v_statistic_edf(kern, x).value
            b = v_statistic_plugin(kern, empirical_cdf(x)).value
            assert b == pytest.approx(a, rel=1e-10)

    def test_raw_measure_path(self):
        mu = uniform(0.0, 1.0).to_measure(grid_points=801)
        rec = v_statistic_plugin(gini_kernel(), mu)
        assert rec.value == pytest.approx(1.0 / 3.0, abs=1e-6)
        edf = empirical_cdf(RNG.uniform(size=150))
        a = v_statistic_plugin(gini_kernel(), edf.to_measure()).value
        b = v_statistic_edf(gini_kernel(), edf.sample).value
        assert a == pytest.approx(b, rel=1e-12)

    def test_raw_measure_rejects_excess_mass(self):
        mu = uniform(0.0, 1.0).to_measure(grid_points=801).scaled(1.5)
        with pytest.raises(PreconditionError):
            v_statistic_plugin(gini_kernel(), mu)

    def test_unknown_target(self):
        with pytest.raises(ConfigError):
            v_statistic_plugin(gini_kernel(), "not a cdf")


class TestSmoothedPlugin:
    def test_zero_bandwidth_identical(self):
        x = RNG.normal(size=200)
        sm = smoothed_cdf(x, 0.0)
        a = v_statistic_plugin(gini_kernel(), sm).value
        b = v_statistic_plugin(gini_kernel(), empirical_cdf(x)).value
        assert a == b  # bitwise: the zero-bandwidth path is the EDF path

    def test_variance_kernel_shift(self):
        # gaussian smoothing adds exactly tau^2/2 = 2 eps to the V-statistic
        x = RNG.normal(size=100)
        eps = 0.05
        base = v_statistic_edf(variance_kernel(), x).value
        rec = v_statistic_plugin(variance_kernel(), smoothed_cdf(x, eps))
        assert rec.value == pytest.approx(base + 2.0 * eps, rel=1e-12)

    def test_gini_closed_form_vs_hermite(self):
        x = RNG.normal(size=80)
        sm = smoothed_cdf(x, 0.01)
        closed = v_statistic_plugin(gini_kernel(), sm).value
        generic = v_statistic_plugin(abs_kernel_generic(), sm).value
        assert generic == pytest.approx(closed, abs=2e-4)

    def test_smoothing_increases_gini(self):
        # adding independent gaussian noise can only spread the sample
        x = RNG.uniform(size=60)
        base = v_statistic_edf(gini_kernel(), x).value
        prev = base
        for eps in (1e-4, 1e-3, 1e-2):
            val = v_statistic_plugin(gini_kernel(), smoothed_cdf(x, eps)).value
            assert val > prev
            prev = val


class TestHoeffding:
    def test_lattice_sample_near_zero(self):
        m = uniform(0.0, 1.0)
        n = 1000
        x = m.quantile((np.arange(n) + 0.5) / n)
        assert abs(hoeffding_linear_part(gini_kernel(), m, x)) < 1e-4

    def test_duality_uniform_exact(self):
        m = uniform(0.0, 1.0)
        k = gini_kernel()
        proj = project(k, m)
        values_fn, _ = k.analytic_g1(m)
        theta = 1.0 / 3.0
        for n in (50, 500):
            x = RNG.uniform(size=n)
            lhs = hoeffding_linear_part(k, m, x, projection=proj)
            rhs = math.sqrt(n) * (2.0 * math.fsum(values_fn(x)) / n
                                  - 2.0 * theta)
            assert lhs == pytest.approx(rhs, abs=1e-10)

    @pytest.mark.parametrize("kernel, model, sampler, tol", [
        (variance_kernel(), normal(0.0, 1.0),
         lambda n: RNG.normal(size=n), 5e-5),
        (gini_kernel(), exponential(1.0),
         lambda n: RNG.exponential(size=n), 1e-4),
        (gini_kernel(), student_t(5.0),
         lambda n: RNG.standard_t(5.0, size=n), 3e-4),
    ])
    def test_duality_curved_models(self, kernel, model, sampler, tol):
        proj = project(kernel, model)
        values_fn, _ = kernel.analytic_g1(model)
        theta = v_statistic_plugin(kernel, model).value
        x = sampler(2000)
        lhs = hoeffding_linear_part(kernel, model, x, projection=proj)
        rhs = math.sqrt(2000) * (
            2.0 * math.fsum(np.asarray(values_fn(x), dtype=float)) / 2000
            - 2.0 * theta)
        assert lhs == pytest.approx(rhs, abs=tol)

    def test_tracks_vstat_fluctuations(self):
        # the linear part carries the first-order randomness of the plug-in
        k, m = gini_kernel(), uniform(0.0, 1.0)
        proj = project(k, m)
        ell, vee = [], []
        for _ in range(60):
            x = RNG.uniform(size=300)
            ell.append(hoeffding_linear_part(k, m, x, projection=proj))
            vee.append(math.sqrt(300) * (v_statistic_edf(k, x).value
                                         - 1.0 / 3.0))
        assert np.corrcoef(ell, vee)[0, 1] > 0.98
