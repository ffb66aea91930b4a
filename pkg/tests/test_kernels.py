"""Tests for kernels, projections, and the hypothesis checker.

Closed-form oracles, derived by direct integration and frozen here:

* gini vs uniform(0,1):  E|x - U| = x^2 - x + 1/2 on [0,1]
  (integrate (x-y) over y<x and (y-x) over y>x), 1/2 - x below, x - 1/2 above;
  the induced density is 2x - 1 on (0,1).
* gini vs exp(1):        E|x - Y| = x - 1 + 2 exp(-x) for x >= 0.
* gini vs normal(0,1):   E|x - Z| = x (2 Phi(x) - 1) + 2 phi(x).
* variance vs any F with mean mu, variance s2:
                         E (x - Y)^2 / 2 = (x - mu)^2 / 2 + s2 / 2,
  induced density x - mu.
"""

import math

import numpy as np
import pytest
from scipy import stats

from uvstats.errors import ConfigError, PreconditionError
from uvstats.gridfun import measure_from, weighted_norm
from uvstats.kernels import (
    check_assumptions,
    gini_kernel,
    kernel_from_name,
    kernel_from_table,
    project,
    variance_kernel,
)
from uvstats.models import exponential, normal, pareto, student_t, uniform


class TestClosedForms:
    def test_gini_uniform_projection(self):
        proj = project(gini_kernel(), uniform(0.0, 1.0))
        x = proj.g1.x
        np.testing.assert_allclose(proj.g1.values, x * x - x + 0.5,
                                   atol=1e-14)
        # outside the support the projection is linear
        assert proj.g1(-2.0) == pytest.approx(2.5, abs=1e-12)
        assert proj.g1(3.0) == pytest.approx(2.5, abs=1e-12)

    def test_gini_uniform_density(self):
        proj = project(gini_kernel(), uniform(0.0, 1.0))
        np.testing.assert_allclose(proj.dg1.dens_l,
                                   2.0 * proj.dg1.breaks[:-1] - 1.0,
                                   atol=1e-14)
        np.testing.assert_allclose(proj.dg1.dens_r,
                                   2.0 * proj.dg1.breaks[1:] - 1.0,
                                   atol=1e-14)
        assert proj.dg1.atom_x.size == 0

    def test_gini_exponential_projection(self):
        proj = project(gini_kernel(), exponential(1.0))
        x = proj.g1.x
        np.testing.assert_allclose(proj.g1.values, x - 1.0 + 2.0 * np.exp(-x),
                                   rtol=1e-12, atol=1e-12)

    def test_gini_normal_projection(self):
        proj = project(gini_kernel(), normal(0.0, 1.0))
        x = proj.g1.x
        oracle = x * (2.0 * stats.norm.cdf(x) - 1.0) + 2.0 * stats.norm.pdf(x)
        np.testing.assert_allclose(proj.g1.values, oracle, atol=1e-12)

    def test_variance_normal_projection(self):
        proj = project(variance_kernel(), normal(1.0, 2.0))
        x = proj.g1.x
        np.testing.assert_allclose(proj.g1.values,
                                   0.5 * (x - 1.0) ** 2 + 2.0, rtol=1e-12)
        np.testing.assert_allclose(proj.dg1.dens_l, x[:-1] - 1.0, atol=1e-12)

    def test_density_tail_matches_marginal_tail(self):
        proj = project(gini_kernel(), normal(0.0, 1.0))
        # density 2F - 1 tends to +-1 far out
        assert proj.dg1.tail_right(50.0) == pytest.approx(1.0, abs=1e-9)
        assert proj.dg1.tail_left(-50.0) == pytest.approx(-1.0, abs=1e-9)

    def test_projection_value_tails_grow_linearly(self):
        proj = project(gini_kernel(), normal(0.0, 1.0))
        assert proj.g1(1e6) / 1e6 == pytest.approx(1.0, rel=1e-4)
        assert proj.g1(-1e6) / 1e6 == pytest.approx(1.0, rel=1e-4)

    def test_symmetric_kernel_shares_objects(self):
        proj = project(gini_kernel(), uniform(0.0, 1.0))
        assert proj.g2 is proj.g1 and proj.dg2 is proj.dg1
        # |g| = g for a nonnegative kernel, so the absolute projection too
        assert proj.gbar1 is proj.g1


class TestNumericPath:
    @pytest.mark.parametrize("kernel, model, rtol", [
        (gini_kernel(), uniform(0.0, 1.0), 1e-14),
        (gini_kernel(), normal(0.0, 1.0), 3e-9),
        (gini_kernel(), exponential(1.0), 3e-9),
        (gini_kernel(), student_t(5.0), 3e-9),
        (gini_kernel(), pareto(3.0, 1.0), 3e-9),
        (variance_kernel(), normal(0.0, 1.0), 3e-9),
        (variance_kernel(), exponential(1.0), 3e-8),
        (variance_kernel(), student_t(5.0), 1e-7),
        (variance_kernel(), pareto(3.0, 1.0), 1e-6),
    ])
    def test_numeric_matches_analytic_values(self, kernel, model, rtol):
        pa = project(kernel, model)
        pn = project(kernel, model, force_numeric=True)
        assert pa.analytic and not pn.analytic
        scale = np.maximum(1.0, np.abs(pa.g1.values))
        err = np.max(np.abs(pn.g1.values - pa.g1.values) / scale)
        assert err <= rtol

    @pytest.mark.parametrize("kernel, model", [
        (gini_kernel(), normal(0.0, 1.0)),
        (gini_kernel(), exponential(1.0)),
        (variance_kernel(), normal(0.0, 1.0)),
    ])
    def test_derived_measure_cell_masses(self, kernel, model):
        # the measure rebuilt from the numeric projection must agree with the
        # analytic density in per-cell masses wherever the piecewise-linear
        # density resolves the curvature (the central quantile band)
        pa = project(kernel, model)
        pn = project(kernel, model, force_numeric=True)
        grid = pa.g1.x
        u = model.cdf(grid)
        band = (u >= 0.02) & (u <= 0.95)
        cell = band[:-1] & band[1:]
        h = np.diff(grid)
        trap = 0.5 * (pa.dg1.dens_l + pa.dg1.dens_r) * h
        rebuilt = measure_from(pn.g1)
        num = rebuilt.dens_l * h  # piecewise-constant slopes: exact masses
        assert np.max(np.abs(num - trap)[cell]) <= 1e-8

    def test_uniform_cell_masses_exact_everywhere(self):
        pa = project(gini_kernel(), uniform(0.0, 1.0))
        pn = project(gini_kernel(), uniform(0.0, 1.0), force_numeric=True)
        h = np.diff(pa.g1.x)
        trap = 0.5 * (pa.dg1.dens_l + pa.dg1.dens_r) * h
        num = measure_from(pn.g1).dens_l * h
        assert np.max(np.abs(num - trap)) <= 1e-13
        # spot-check the measure interface on a handful of cells
        for i in (0, 1000, 2000, 3999):
            a, b = pa.g1.x[i], pa.g1.x[i + 1]
            assert pa.dg1.interval_mass(a, b) == pytest.approx(
                trap[i], abs=1e-15)

    def test_heavy_tail_beyond_kernel_growth_rejected(self):
        with pytest.raises(PreconditionError):
            project(variance_kernel(), pareto(1.5, 1.0), force_numeric=True)
        with pytest.raises(PreconditionError):
            project(variance_kernel(), pareto(1.5, 1.0))


class TestTabulatedKernel:
    def _write_table(self, path, xs, ys, fn):
        rows = []
        for x in xs:
            for y in ys:
                rows.append("%r %r %r" % (float(x), float(y),
                                          float(fn(x, y))))
        path.write_text("# x y g\n" + "\n".join(rows) + "\n")

    def test_bilinear_reproduction(self, tmp_path):
        path = tmp_path / "kernel.txt"
        xs = np.linspace(-2.0, 2.0, 21)
        self._write_table(path, xs, xs, lambda x, y: 0.5 * (x - y) ** 2)
        k = kernel_from_table(path, lambda_prime=2.0)
        assert k.symmetric and k.lambda_prime == 2.0
        # exact on lattice nodes
        assert k(1.0, -1.0) == pytest.approx(2.0, abs=1e-12)
        # bilinear between nodes: average of cell corners at the centre
        x0, x1 = xs[0], xs[1]
        mid = 0.5 * (x0 + x1)
        corners = [0.5 * (a - b) ** 2 for a in (x0, x1) for b in (x0, x1)]
        assert k(mid, mid) == pytest.approx(np.mean(corners), abs=1e-12)

    def test_asymmetric_detected(self, tmp_path):
        path = tmp_path / "kernel.txt"
        xs = np.linspace(0.0, 1.0, 5)
        self._write_table(path, xs, xs, lambda x, y: x - y)
        assert not kernel_from_table(path, lambda_prime=1.0).symmetric

    def test_malformed_table(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1.0 2.0\n3.0 4.0\n")
        with pytest.raises(ConfigError):
            kernel_from_table(path, lambda_prime=1.0)

    def test_projection_of_tabulated_variance_kernel(self, tmp_path):
        path = tmp_path / "kernel.txt"
        xs = np.linspace(-8.0, 8.0, 321)
        self._write_table(path, xs, xs, lambda x, y: 0.5 * (x - y) ** 2)
        k = kernel_from_table(path, lambda_prime=2.0)
        proj = project(k, uniform(-1.0, 1.0), grid_points=801)
        # oracle: (x - 0)^2 / 2 + (1/3) / 2; bilinear tabulation on a 0.05
        # lattice carries O(h^2) interpolation error
        x = proj.g1.x
        oracle = 0.5 * x * x + 1.0 / 6.0
        assert np.max(np.abs(proj.g1.values - oracle)) < 1e-3


class TestKernelRegistry:
    def test_known_names(self):
        assert kernel_from_name("gini").lambda_prime == 1.0
        assert kernel_from_name("variance").lambda_prime == 2.0

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            kernel_from_name("hoelder")

    def test_diagonal(self):
        assert kernel_from_name("gini").diagonal(np.array([3.0]))[0] == 0.0
        v = kernel_from_name("variance")
        assert v(np.array([1.0]), np.array([4.0]))[0] == pytest.approx(4.5)


class TestAssumptionChecks:
    def test_gini_uniform_passes(self):
        rep = check_assumptions(gini_kernel(), uniform(0.0, 1.0), lam=1.5)
        assert rep.passed, [e.name for e in rep.failures()]
        names = {e.name for e in rep.entries}
        assert {"section_bv_norm", "section_weighted_variation",
                "projection_variation_1", "projection_abs_bounded_1",
                "marginal_continuous", "moment_phi"} <= names

    def test_variance_normal_passes(self):
        rep = check_assumptions(variance_kernel(), normal(0.0, 1.0), lam=2.5)
        assert rep.passed

    def test_gini_heavy_pareto_fails_moment(self):
        rep = check_assumptions(gini_kernel(), pareto(1.5, 1.0), lam=1.2)
        assert not rep.passed
        assert "moment_phi" in {e.name for e in rep.failures()}

    def test_variance_without_second_moment_fails(self):
        rep = check_assumptions(variance_kernel(), pareto(1.5, 1.0), lam=2.5)
        assert not rep.passed

    def test_student_moments_are_checked(self):
        # gamma_sup = 4 for t(4): lam = 2.1 needs a 4.2-th moment: fail
        rep = check_assumptions(variance_kernel(), student_t(4.0), lam=2.1)
        assert "moment_phi" in {e.name for e in rep.failures()}
        # t(9) has every moment up to 9: 2*lam = 4.2 < 9: pass
        rep = check_assumptions(variance_kernel(), student_t(9.0), lam=2.1)
        assert rep.passed

    def test_weight_order_validation(self):
        with pytest.raises(PreconditionError):
            check_assumptions(gini_kernel(), uniform(0.0, 1.0), lam=0.5)

    def test_report_carries_values(self):
        rep = check_assumptions(gini_kernel(), uniform(0.0, 1.0), lam=1.5)
        by_name = {e.name: e for e in rep.entries}
        assert math.isfinite(by_name["section_bv_norm"].value)
        assert by_name["moment_phi"].value == math.inf
