"""Tests for the stationary sequence generators and declared mixing profiles.

Oracles: the latent AR(1) autocorrelation phi^k; the ARMA(1,1)
autocorrelation rho_1 = (1 + phi theta)(phi + theta) / (1 + 2 phi theta +
theta^2), rho_k = phi^{k-1} rho_1; Dvoretzky-type Kolmogorov bands at
n = 1e5 (the 0.006 band has i.i.d. exceedance probability below 2e-3, and
the draws here are seed-pinned).
"""

import numpy as np
import pytest
from scipy.stats import ks_2samp, kstest

from uvstats.asymptotics import admissibility
from uvstats.datagen import (
    DependentProcess,
    MixingProfile,
    ar1_process,
    arma_process,
    associated_process,
    declared_profile,
    generate,
    iid_process,
)
from uvstats.errors import ConfigError
from uvstats.models import exponential, normal, pareto, uniform

SEED = 20260814


class TestGenerate:
    def test_phi_zero_is_independent(self):
        x = generate(ar1_process(normal(), 0.0, seed=3), 100_000)
        lag1 = np.corrcoef(x[:-1], x[1:])[0, 1]
        assert abs(lag1) < 3.0 / np.sqrt(100_000)

    def test_ar1_latent_autocorrelation(self):
        x = generate(ar1_process(normal(), 0.5, seed=SEED), 100_000)
        for k in (1, 2, 3, 5):
            emp = np.corrcoef(x[:-k], x[k:])[0, 1]
            assert emp == pytest.approx(0.5 ** k, abs=0.02)

    @pytest.mark.parametrize("model", [uniform(0.0, 1.0), normal(),
                                       exponential(1.0), pareto(2.5, 1.0)],
                             ids=["uniform", "normal", "exponential",
                                  "pareto"])
    def test_marginal_kolmogorov_band(self, model):
        x = generate(iid_process(model, seed=SEED), 100_000)
        assert kstest(x, model.cdf).statistic < 0.006

    def test_dependent_marginal_still_exact(self):
        m = uniform(0.0, 1.0)
        x = generate(ar1_process(m, 0.5, seed=SEED), 100_000)
        assert kstest(x, m.cdf).statistic < 0.006
        assert x.min() >= 0.0 and x.max() <= 1.0

    def test_support_respected(self):
        x = generate(ar1_process(pareto(2.5, 1.0), 0.8, seed=1), 50_000)
        assert np.all(np.isfinite(x))
        assert x.min() >= 1.0

    def test_reproducible_and_seed_override(self):
        p = ar1_process(normal(), 0.3, seed=9)
        a = generate(p, 1000)
        b = generate(p, 1000)
        np.testing.assert_array_equal(a, b)
        c = generate(p, 1000, seed=10)
        assert not np.array_equal(a, c)
        np.testing.assert_array_equal(c, generate(p, 1000, seed=10))

    @pytest.mark.parametrize("proc", [
        iid_process(normal(), seed=2),
        ar1_process(exponential(1.0), 0.6, seed=2),
        arma_process(normal(), ar=(0.4,), ma=(0.25,), seed=2),
    ], ids=["iid", "ar1", "arma"])
    def test_prefix_property(self, proc):
        short = generate(proc, 500)
        long = generate(proc, 2000)
        np.testing.assert_array_equal(short, long[:500])

    def test_stationary_windows(self):
        x = generate(ar1_process(exponential(1.0), 0.5, seed=SEED), 80_000)
        a, b = x[:40_000], x[40_000:]
        # both coordinates of the lag pair, first window vs second
        assert ks_2samp(a[:-1], b[:-1]).statistic < 0.02
        assert ks_2samp(a[1:], b[1:]).statistic < 0.02

    def test_arma_matches_declared_acf(self):
        p = arma_process(normal(), ar=(0.5,), ma=(0.3,), seed=SEED)
        x = generate(p, 200_000)
        want = p.latent_correlation(np.arange(1, 4))
        got = [np.corrcoef(x[:-k], x[k:])[0, 1] for k in (1, 2, 3)]
        np.testing.assert_allclose(got, want, atol=0.02)
        # latent sequence is normalized to unit variance
        assert x.var() == pytest.approx(1.0, abs=0.02)

    def test_length_validation(self):
        with pytest.raises(ConfigError):
            generate(iid_process(normal()), 0)


class TestProcessConstruction:
    def test_phi_bounds(self):
        with pytest.raises(ConfigError):
            ar1_process(normal(), 1.0)
        with pytest.raises(ConfigError):
            ar1_process(normal(), -1.2)

    def test_associated_needs_nonnegative_phi(self):
        associated_process(normal(), 0.0)
        associated_process(normal(), 0.7)
        with pytest.raises(ConfigError):
            associated_process(normal(), -0.1)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            DependentProcess(kind="markov_chain", marginal=normal())

    def test_arma_needs_coefficients(self):
        with pytest.raises(ConfigError):
            arma_process(normal())

    def test_arma_stability(self):
        with pytest.raises(ConfigError):
            arma_process(normal(), ar=(1.01,))
        arma_process(normal(), ar=(0.99,))

    def test_latent_correlation_closed_forms(self):
        p = ar1_process(normal(), -0.4)
        np.testing.assert_allclose(p.latent_correlation(np.array([1, 2, 3])),
                                   [-0.4, 0.16, -0.064], atol=1e-15)
        q = arma_process(normal(), ar=(0.5,), ma=(0.3,))
        rho1 = (1 + 0.15) * 0.8 / (1 + 0.3 + 0.09)
        np.testing.assert_allclose(q.latent_correlation(np.array([1, 2, 3])),
                                   [rho1, 0.5 * rho1, 0.25 * rho1],
                                   atol=1e-9)
        z = iid_process(normal())
        np.testing.assert_array_equal(z.latent_correlation(np.array([0, 1])),
                                      [1.0, 0.0])


class TestDeclaredProfiles:
    def test_iid_trivial(self):
        (prof,) = declared_profile(iid_process(normal()))
        assert prof.kind == "none"

    def test_ar1_regimes(self):
        kinds = [p.kind for p in declared_profile(ar1_process(normal(), 0.5))]
        assert kinds == ["alpha", "beta", "rho", "associated"]
        assert all(p.geometric for p in
                   declared_profile(ar1_process(normal(), 0.5)))

    def test_negative_phi_drops_association(self):
        kinds = [p.kind for p in
                 declared_profile(ar1_process(normal(), -0.5))]
        assert "associated" not in kinds
        assert kinds == ["alpha", "beta", "rho"]

    def test_arma_association_needs_nonnegative_weights(self):
        pos = arma_process(normal(), ar=(0.5,), ma=(0.3,))
        neg = arma_process(normal(), ma=(-0.5,))
        assert "associated" in [p.kind for p in declared_profile(pos)]
        assert "associated" not in [p.kind for p in declared_profile(neg)]

    def test_dyadic_rho_summability(self):
        # geometric rho(2^n) sums: the rho profile must be declared geometric
        profs = {p.kind: p for p in declared_profile(ar1_process(normal(), 0.5))}
        assert profs["rho"].geometric

    def test_profiles_feed_admissibility(self):
        for prof in declared_profile(ar1_process(normal(), 0.5)):
            rep = admissibility(prof, gamma=5.0, lambda_prime=2.0)
            assert rep.passes, prof.kind
            assert rep.interval == (2.0, 2.5)

    def test_profile_parameter_validation(self):
        with pytest.raises(ConfigError):
            MixingProfile(kind="rho", epsilon=0.0)
        with pytest.raises(ConfigError):
            MixingProfile(kind="associated", nu=-2.0)
