"""End-to-end acceptance gates, one test per shipped guarantee.

Run ``pytest tests/test_acceptance.py -v`` to get one pass/fail line per
guarantee.  Deterministic gates (integration by parts, centre invariance,
closed-form densities, threshold arithmetic, fast-path equivalence) assert
tight tolerances; Monte Carlo gates pin seeded experiment runs inside the
documented tolerance bands.  Oracles are worked out independently of the
library: hand-derived projection formulas, scipy quadrature of the
one-argument projection variance, and moment identities.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from test_gridfun import random_bv_function
from uvstats.asymptotics import (
    admissibility,
    asymptotic_variance,
    brownian_bridge_cov,
    sample_limit,
)
from uvstats.datagen import MixingProfile
from uvstats.gridfun import integration_by_parts, jordan_decompose, measure_of
from uvstats.harness import (
    ExperimentConfig,
    csv_text,
    report_text,
    run_clt_experiment,
    run_smoothed_experiment,
    run_uv_equivalence,
)
from uvstats.kernels import gini_kernel, project, variance_kernel
from uvstats.models import exponential, normal, uniform
from uvstats.vstat import v_statistic_edf

SEED = 20260814

# the flagship i.i.d. experiment; shared between the CLT band gate and the
# zero-bandwidth byte-identity gate below
GINI_UNIFORM_CLT = ExperimentConfig(
    kernel="gini", marginal="uniform",
    marginal_params=(("a", 0.0), ("b", 1.0)),
    n_schedule=(2000,), replications=5000,
    lam=1.5, lam_prime=1.0, seed=SEED)

# (kernel, marginal, closed-form projection g1, quadrature support)
SIGMA2_CASES = (
    (gini_kernel(), uniform(0.0, 1.0),
     lambda x: x * x - x + 0.5, (0.0, 1.0)),
    (gini_kernel(), exponential(1.0),
     lambda x: x - 1.0 + 2.0 * np.exp(-x), (0.0, np.inf)),
    (variance_kernel(), normal(),
     lambda x: 0.5 * (x * x + 1.0), (-np.inf, np.inf)),
)


@pytest.fixture(scope="module")
def gini_uniform_report():
    return run_clt_experiment(GINI_UNIFORM_CLT)


def _section(report, name):
    for sec, pairs in report.sections:
        if sec == name:
            return dict(pairs)
    raise KeyError(name)


def _oracle_sigma2(model, g1, support):
    """Var(g1(X) + g2(X)) = Var(2 g1(X)) by scalar quadrature (symmetric
    kernels), independent of the double-integral machinery under test."""
    lo, hi = support

    def moment(p):
        f = lambda x: (2.0 * g1(x)) ** p * float(model.pdf(np.float64(x)))
        return quad(f, lo, hi, limit=200)[0]

    m1 = moment(1)
    return moment(2) - m1 * m1


def test_integration_by_parts_identity_on_random_pairs():
    # both orders of iterated Stieltjes integration agree across mixtures of
    # compactly supported and power-tailed functions
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for i in range(1000):
        f = random_bv_function(rng, compact=(i % 3 != 0))
        g = random_bv_function(rng, compact=(i % 3 != 1))
        lhs, rhs = integration_by_parts(f, g)
        worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-10


def test_induced_measures_do_not_depend_on_the_centre():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        f = random_bv_function(rng)
        a, b = f.span
        plus0, minus0 = jordan_decompose(f, a)
        ref_p, ref_m = measure_of(plus0), measure_of(minus0)
        probes = np.linspace(a - 0.5, b + 0.5, 9)
        for c in rng.uniform(a, b, size=5):
            plus, minus = jordan_decompose(f, float(c))
            mp, mm = measure_of(plus), measure_of(minus)
            for lo, hi in zip(probes[:-1], probes[1:]):
                worst = max(
                    worst,
                    abs(mp.interval_mass(lo, hi) - ref_p.interval_mass(lo, hi)),
                    abs(mm.interval_mass(lo, hi) - ref_m.interval_mass(lo, hi)))
    assert worst < 1e-12


def test_projection_densities_match_closed_forms():
    # absolute-difference kernel: density of dg1 is 2 F(x) - 1;
    # squared-difference kernel: density is x - E[X]
    worst = 0.0
    for model, mean in ((uniform(0.0, 1.0), 0.5), (normal(), 0.0)):
        pg = project(gini_kernel(), model)
        xs = pg.g1.x
        got = pg.dg1.density_at(xs)
        worst = max(worst, float(np.max(np.abs(
            got - (2.0 * np.asarray(model.cdf(xs)) - 1.0)))))
        pv = project(variance_kernel(), model)
        xs = pv.g1.x
        got = pv.dg1.density_at(xs)
        worst = max(worst, float(np.max(np.abs(got - (xs - mean)))))
    assert worst < 1e-8


def test_sigma2_quadrature_matches_one_dimensional_oracle():
    for kern, model, g1, support in SIGMA2_CASES:
        rep = asymptotic_variance(project(kern, model),
                                  brownian_bridge_cov(model))
        oracle = _oracle_sigma2(model, g1, support)
        assert rep.sigma2 == pytest.approx(oracle, rel=1e-6), \
            (kern.name, model.name)
    # squared-difference kernel, standard normal: the moment value mu4 - 1
    rep = asymptotic_variance(project(variance_kernel(), normal()),
                              brownian_bridge_cov(normal()))
    assert rep.sigma2 == pytest.approx(2.0, rel=1e-6)


def test_limit_sampler_variance_matches_sigma2():
    for kern, model, _, _ in SIGMA2_CASES:
        proj = project(kern, model)
        gamma = brownian_bridge_cov(model)
        sigma2 = asymptotic_variance(proj, gamma).sigma2
        draws = sample_limit(proj, gamma, seed=SEED, replications=100_000)
        assert draws.var() == pytest.approx(sigma2, rel=0.02), \
            (kern.name, model.name)


def test_clt_iid_variance_ratio_and_normality(gini_uniform_report):
    block = _section(gini_uniform_report, "n 2000")
    assert 0.9 <= block["variance_ratio"] <= 1.1
    assert block["ks_standardized"] < 0.025
    var_cfg = ExperimentConfig(
        kernel="variance", marginal="normal", marginal_params=(),
        n_schedule=(2000,), replications=5000,
        lam=2.5, lam_prime=2.0, seed=SEED)
    block = _section(run_clt_experiment(var_cfg), "n 2000")
    assert 0.9 <= block["variance_ratio"] <= 1.1
    assert block["ks_standardized"] < 0.025


def test_clt_dependent_ar1_longrun_variance():
    cfg = ExperimentConfig(
        kernel="variance", marginal="normal", marginal_params=(),
        process_kind="gaussian_copula_ar1", phi=0.5,
        gamma_mode="analytic", truncation=50,
        n_schedule=(5000,), replications=3000,
        lam=2.5, lam_prime=2.0, seed=SEED)
    rep = run_clt_experiment(cfg)
    # latent AR(1) at phi = 1/2: sigma^2 = 2 + 4 phi^2 / (1 - phi^2) = 10/3
    assert _section(rep, "limit")["sigma2"] == pytest.approx(10.0 / 3.0,
                                                             rel=1e-6)
    block = _section(rep, "n 5000")
    assert abs(block["variance_ratio"] - 1.0) <= 0.15
    assert block["ks_standardized"] < 0.04


def test_uv_gap_decays_at_root_n_rate():
    cfg = ExperimentConfig(
        kernel="gini", marginal="uniform",
        marginal_params=(("a", 0.0), ("b", 1.0)),
        n_schedule=(500, 1000, 2000, 4000, 8000), replications=200,
        lam=1.5, lam_prime=1.0, seed=SEED)
    rep = run_uv_equivalence(cfg)
    assert _section(rep, "decay")["median_gap_slope"] == \
        pytest.approx(-0.5, abs=0.1)
    # the two-term split reproduces the gap to rounding, per replicate
    for n in cfg.n_schedule:
        assert _section(rep, "n %d" % n)["max_identity_residual"] < 1e-10


def test_linear_part_carries_the_fluctuations():
    cfg = ExperimentConfig(
        kernel="gini", marginal="uniform",
        marginal_params=(("a", 0.0), ("b", 1.0)),
        n_schedule=(2000,), replications=500,
        lam=1.5, lam_prime=1.0, seed=SEED, linear_part=True)
    rep = run_clt_experiment(cfg)
    assert _section(rep, "n 2000")["linear_part_correlation"] > 0.99


def test_smoothed_plugin_keeps_bands_and_degenerates_cleanly(
        gini_uniform_report):
    cfg = ExperimentConfig(
        kernel="gini", marginal="uniform",
        marginal_params=(("a", 0.0), ("b", 1.0)),
        n_schedule=(2000,), replications=5000,
        lam=1.5, lam_prime=1.0, seed=SEED, epsilon="n^-2")
    block = _section(run_smoothed_experiment(cfg), "n 2000")
    assert 0.9 <= block["variance_ratio"] <= 1.1
    assert block["ks_standardized"] < 0.025
    # an identically-zero bandwidth schedule is the identity smoother
    rep0 = run_smoothed_experiment(GINI_UNIFORM_CLT)
    assert report_text(rep0) == report_text(gini_uniform_report)
    assert csv_text(rep0) == csv_text(gini_uniform_report)


def test_mixing_threshold_arithmetic():
    # polynomial alpha decay: (3g - 1)/(2g - 8) dominates g/(g - 4) on all
    # of (4, 50], so the binding moment threshold is g/(g - 4)
    prof = MixingProfile(kind="alpha", theta=10.0)
    for g in np.linspace(4.001, 50.0, 101):
        cmp = admissibility(prof, gamma=float(g), lambda_prime=0.0).comparison
        assert cmp["(3g-1)/(2g-8)"] > cmp["g/(g-4)"]
        assert cmp["smaller"] == "g/(g-4)"
    # geometric beta decay at gamma = 4 pinches the admissible weight
    # interval shut at lambda' = 2: exactly (2, 2), nothing passes
    boundary = admissibility(MixingProfile(kind="beta", geometric=True),
                             gamma=4.0, lambda_prime=2.0)
    assert boundary.passes is False
    assert boundary.interval == (2.0, 2.0)


def test_fast_statistic_paths_match_definitional_sums():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(10, 2001))
        x = rng.normal(size=n) if i % 2 else 4.0 * rng.random(n) - 1.0
        for kern in (gini_kernel(), variance_kernel()):
            fast = v_statistic_edf(kern, x)
            slow = v_statistic_edf(kern, x, force_generic=True)
            assert fast.path in ("fast-sorted", "moment-form")
            assert slow.path == "generic-quadratic"
            worst = max(worst, abs(fast.value - slow.value)
                        / max(abs(slow.value), 1e-300))
    assert worst <= 1e-10
