"""Config-driven Monte Carlo experiments for the plug-in limit theorems.

Each experiment draws replicated samples from a declared stationary process,
recomputes a statistic per replicate, and compares the scaled estimation
error against the limit law.  Every replicate uses the derived seed
(seed, n index, replicate), and aggregation runs in fixed replicate order,
so reports are byte-identical across runs and worker counts.  The serialized
report carries no timing data; runtimes live on the in-memory report only.
"""

import configparser
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .asymptotics import (
    admissibility,
    asymptotic_variance,
    brownian_bridge_cov,
    longrun_cov,
)
from .datagen import (
    ar1_process,
    arma_process,
    associated_process,
    declared_profile,
    generate,
    iid_process,
)
from .empirical import (
    bandwidth_admissible,
    smoothed_cdf,
    weighted_empirical_process,
)
from .errors import ConfigError, HypothesisError, NumericError
from .gridfun import weighted_norm
from .kernels import check_assumptions, kernel_from_name, project
from .models import model_from_name
from .vstat import (
    hoeffding_linear_part,
    u_statistic,
    uv_gap,
    v_statistic_edf,
    v_statistic_plugin,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "config_from_file",
    "report_text",
    "csv_text",
    "write_outputs",
    "run_clt_experiment",
    "run_uv_equivalence",
    "run_weighted_process_experiment",
    "run_smoothed_experiment",
]

_ESTIMATORS = ("edf", "ustat")
_GAMMA_MODES = ("analytic", "path")
_QUANTS = (0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class ExperimentConfig:
    """Primitive experiment description, buildable from an INI file.

    Holds only plain values (strings, numbers, tuples) so worker processes
    can rebuild kernels, marginals, and generators from it deterministically.
    """

    kernel: str = None
    marginal: str = None
    marginal_params: tuple = ()
    process_kind: str = "iid"
    phi: float = 0.0
    ar: tuple = ()
    ma: tuple = ()
    estimator: str = "edf"
    epsilon: str = "0"
    n_schedule: tuple = (500, 2000, 5000)
    replications: int = 1000
    lam: float = 1.5
    lam_prime: float = 1.0
    gamma_mode: str = "analytic"
    truncation: int = None
    window: str = None
    path_length: int = 200_000
    linear_part: bool = False
    seed: int = 0
    report_path: str = None
    csv_path: str = None

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1, got %r"
                              % (self.replications,))
        ns = tuple(int(n) for n in self.n_schedule)
        if not ns or any(n < 2 for n in ns):
            raise ConfigError("n schedule needs entries >= 2")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n schedule must be strictly increasing: %r"
                              % (ns,))
        object.__setattr__(self, "n_schedule", ns)
        if not (self.lam > self.lam_prime >= 0.0
                or self.lam == self.lam_prime == 0.0):
            raise ConfigError("need lambda > lambda_prime >= 0 (lambda = "
                              "lambda_prime = 0 is the unweighted corner), "
                              "got %r, %r" % (self.lam, self.lam_prime))
        if self.estimator not in _ESTIMATORS:
            raise ConfigError("estimator must be one of %s, got %r"
                              % ("/".join(_ESTIMATORS), self.estimator))
        if self.gamma_mode not in _GAMMA_MODES:
            raise ConfigError("gamma_mode must be one of %s, got %r"
                              % ("/".join(_GAMMA_MODES), self.gamma_mode))
        _epsilon_fn(self.epsilon)  # fail fast on malformed schedules

    def key(self):
        """Hashable identity of everything a worker needs to rebuild."""
        return (self.kernel, self.marginal, self.marginal_params,
                self.process_kind, self.phi, self.ar, self.ma, self.lam)


@dataclass(frozen=True)
class ExperimentReport:
    """Ordered sections plus the replicate-level dump.

    ``sections`` is a tuple of (name, ((key, value), ...)) pairs rendered
    verbatim by ``report_text``; ``csv_rows`` holds every replicate value
    that any summary statistic was computed from.
    """

    kind: str
    sections: tuple
    csv_rows: tuple
    runtime_seconds: float = field(default=0.0, compare=False)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "seed", "replications", "n_schedule", "lambda", "lambda_prime",
    "estimator", "epsilon", "gamma_mode", "truncation", "window",
    "path_length", "linear_part", "report", "csv",
}


def _parse_floats(text):
    return tuple(float(tok) for tok in re.split(r"[,\s]+", text.strip())
                 if tok)


def config_from_file(path):
    """Build an ExperimentConfig from an INI file.

    Sections: [kernel] name; [marginal] name plus numeric parameters;
    [process] kind / phi / ar / ma (defaults to iid); [experiment] seed,
    replications, n_schedule, lambda, lambda_prime, estimator, epsilon,
    gamma_mode, truncation, window, path_length, linear_part, report, csv.
    """
    if not os.path.isfile(path):
        raise ConfigError("config file %r does not exist" % (path,))
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError("malformed config %r: %s" % (path, exc)) from None
    for sec in parser.sections():
        if sec not in ("kernel", "marginal", "process", "experiment"):
            raise ConfigError("unknown config section [%s]" % sec)

    kw = {}
    if parser.has_section("kernel"):
        kw["kernel"] = parser.get("kernel", "name", fallback=None)
        extra = set(parser.options("kernel")) - {"name"}
        if extra:
            raise ConfigError("unknown [kernel] keys: %s" % sorted(extra))
    if parser.has_section("marginal"):
        opts = dict(parser.items("marginal"))
        kw["marginal"] = opts.pop("name", None)
        try:
            kw["marginal_params"] = tuple(sorted(
                (k, float(v)) for k, v in opts.items()))
        except ValueError as exc:
            raise ConfigError("marginal parameters must be numeric: %s"
                              % exc) from None
    if parser.has_section("process"):
        opts = dict(parser.items("process"))
        kw["process_kind"] = opts.pop("kind", "iid")
        if "phi" in opts:
            kw["phi"] = float(opts.pop("phi"))
        if "ar" in opts:
            kw["ar"] = _parse_floats(opts.pop("ar"))
        if "ma" in opts:
            kw["ma"] = _parse_floats(opts.pop("ma"))
        if opts:
            raise ConfigError("unknown [process] keys: %s" % sorted(opts))
    if parser.has_section("experiment"):
        opts = dict(parser.items("experiment"))
        unknown = set(opts) - _EXPERIMENT_KEYS
        if unknown:
            raise ConfigError("unknown [experiment] keys: %s"
                              % sorted(unknown))
        try:
            if "seed" in opts:
                kw["seed"] = int(opts["seed"])
            if "replications" in opts:
                kw["replications"] = int(opts["replications"])
            if "n_schedule" in opts:
                kw["n_schedule"] = tuple(
                    int(v) for v in _parse_floats(opts["n_schedule"]))
            if "lambda" in opts:
                kw["lam"] = float(opts["lambda"])
            if "lambda_prime" in opts:
                kw["lam_prime"] = float(opts["lambda_prime"])
            if "truncation" in opts:
                kw["truncation"] = int(opts["truncation"])
            if "path_length" in opts:
                kw["path_length"] = int(opts["path_length"])
        except ValueError as exc:
            raise ConfigError("bad numeric value in [experiment]: %s"
                              % exc) from None
        for src, dst in (("estimator", "estimator"), ("epsilon", "epsilon"),
                         ("gamma_mode", "gamma_mode"), ("window", "window"),
                         ("report", "report_path"), ("csv", "csv_path")):
            if src in opts:
                kw[dst] = opts[src]
        if "linear_part" in opts:
            kw["linear_part"] = opts["linear_part"].strip().lower() in \
                ("1", "yes", "true", "on")
    return ExperimentConfig(**kw)


def _epsilon_fn(spec):
    """Bandwidth schedule from its config string: '0', a fixed float, or a
    power 'n^-2' / 'n**-2'."""
    s = str(spec).strip().lower()
    if s in ("", "0", "0.0", "zero", "none"):
        return lambda n: 0.0
    m = re.fullmatch(r"n\s*(?:\^|\*\*)\s*\(?(-?\d+(?:\.\d+)?)\)?", s)
    if m:
        expo = float(m.group(1))
        return lambda n: float(n) ** expo
    try:
        c = float(s)
    except ValueError:
        raise ConfigError("cannot parse epsilon schedule %r (use 0, a "
                          "fixed value, or n^-k)" % (spec,)) from None
    if c < 0.0:
        raise ConfigError("epsilon must be nonnegative, got %r" % (spec,))
    return lambda n: c


# ---------------------------------------------------------------------------
# object builders (shared with worker processes)
# ---------------------------------------------------------------------------

_WORKER_CACHE = {}


def _built(key):
    """Kernel/marginal/process objects for a config key, cached per process."""
    got = _WORKER_CACHE.get(key)
    if got is None:
        (kernel_name, marginal_name, params, kind, phi, ar, ma, lam) = key
        if kernel_name is None:
            kernel = None
        else:
            kernel = kernel_from_name(kernel_name)
        if marginal_name is None:
            raise ConfigError("experiment needs a [marginal] section")
        model = model_from_name(marginal_name, **dict(params))
        if kind == "iid":
            process = iid_process(model)
        elif kind == "gaussian_copula_ar1":
            process = ar1_process(model, phi)
        elif kind == "gaussian_copula_arma":
            process = arma_process(model, ar=ar, ma=ma)
        elif kind == "associated_gaussian":
            process = associated_process(model, phi)
        else:
            raise ConfigError("unknown process kind %r" % (kind,))
        got = {"kernel": kernel, "model": model, "process": process,
               "lam": lam}
        _WORKER_CACHE[key] = got
    return got


def _projection(built):
    if "projection" not in built:
        built["projection"] = project(built["kernel"], built["model"])
    return built["projection"]


def _replicate_worker(task):
    """One replicate -> tuple of (statistic name, value) pairs.

    Top-level so process pools can pickle it; everything object-like is
    rebuilt from the primitive config key and cached per process.
    """
    key, job, ni, n, rep, theta, eps, seed = task
    built = _built(key)
    x = generate(built["process"], n, seed=(seed, ni, rep))
    rn = math.sqrt(n)
    if job == "clt":
        value = v_statistic_edf(built["kernel"], x).value
        return (("scaled_error", rn * (value - theta)),)
    if job == "clt-ustat":
        value = u_statistic(built["kernel"], x).value
        return (("scaled_error", rn * (value - theta)),)
    if job == "clt-linear":
        value = v_statistic_edf(built["kernel"], x).value
        lp = hoeffding_linear_part(built["kernel"], built["model"], x,
                                   projection=_projection(built))
        return (("scaled_error", rn * (value - theta)),
                ("linear_part", lp))
    if job == "smoothed":
        plain = v_statistic_edf(built["kernel"], x).value
        sm = v_statistic_plugin(built["kernel"], smoothed_cdf(x, eps)).value
        return (("scaled_error", rn * (sm - theta)),
                ("smoothing_gap", rn * abs(sm - plain)))
    if job == "uv":
        rec = uv_gap(built["kernel"], x)
        return (("uv_gap", rec.gap), ("u_statistic", rec.u_value),
                ("v_statistic", rec.v_value),
                ("identity_residual", rec.identity_residual))
    if job == "wep":
        psi = weighted_empirical_process(x, built["model"])
        return (("weighted_norm", weighted_norm(psi, built["lam"])),)
    raise ConfigError("unknown replicate job %r" % (job,))


def _worker_count():
    raw = os.environ.get("UVSTATS_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError("UVSTATS_WORKERS must be an integer, got %r"
                          % (raw,)) from None
    return max(1, workers)


def _map_replicates(tasks):
    workers = _worker_count()
    if workers == 1 or len(tasks) < 2 * workers:
        return [_replicate_worker(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate_worker, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# gates and shared assembly
# ---------------------------------------------------------------------------

def _gate_assumptions(cfg, built):
    report = check_assumptions(built["kernel"], built["model"],
                               cfg.lam, cfg.lam_prime)
    if not report.passed:
        bad = ", ".join(e.name for e in report.failures())
        raise HypothesisError("assumption check failed before simulation: %s"
                              % bad)
    return report


def _gate_admissibility(cfg, built):
    process = built["process"]
    if process.kind == "iid":
        return ()
    gamma = built["model"].gamma_sup
    reports = tuple(admissibility(p, gamma, cfg.lam_prime)
                    for p in declared_profile(process))
    if not any(r.passes for r in reports):
        raise HypothesisError(
            "no declared mixing regime is admissible for gamma = %s, "
            "lambda_prime = %s" % (gamma, cfg.lam_prime))
    return reports


def _gamma_model(cfg, built):
    process = built["process"]
    if process.kind == "iid":
        return brownian_bridge_cov(built["model"])
    if cfg.gamma_mode == "analytic":
        return longrun_cov(built["model"], process,
                           truncation=cfg.truncation, window=cfg.window)
    # two-element seed tuple so the pilot path never collides with the
    # three-element (seed, n, replicate) streams
    path = generate(process, cfg.path_length, seed=(cfg.seed, 1))
    return longrun_cov(built["model"], path,
                       truncation=cfg.truncation, window=cfg.window)


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (tuple, list)):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def _config_section(cfg):
    pairs = [
        ("kernel", cfg.kernel if cfg.kernel is not None else "(none)"),
        ("marginal", cfg.marginal),
    ]
    for name, val in cfg.marginal_params:
        pairs.append(("marginal.%s" % name, val))
    pairs += [
        ("process", cfg.process_kind),
        ("phi", cfg.phi),
        ("ar", cfg.ar if cfg.ar else "(none)"),
        ("ma", cfg.ma if cfg.ma else "(none)"),
        ("estimator", cfg.estimator),
        ("epsilon", cfg.epsilon),
        ("n_schedule", cfg.n_schedule),
        ("replications", cfg.replications),
        ("lambda", cfg.lam),
        ("lambda_prime", cfg.lam_prime),
        ("gamma_mode", cfg.gamma_mode),
        ("truncation", "(auto)" if cfg.truncation is None else cfg.truncation),
        ("window", "(default)" if cfg.window is None else cfg.window),
        ("seed", cfg.seed),
    ]
    return ("config", tuple(pairs))


def _assumption_section(report):
    pairs = [("passed", report.passed)]
    for entry in report.entries:
        pairs.append((entry.name.replace(" ", "_"),
                      "pass" if entry.passed else "FAIL"))
    return ("assumptions", tuple(pairs))


def _admissibility_sections(reports):
    out = []
    for rep in reports:
        pairs = [("passes", rep.passes),
                 ("gamma", rep.gamma),
                 ("lambda_prime", rep.lambda_prime),
                 ("interval_low", rep.interval[0]),
                 ("interval_high", rep.interval[1])]
        out.append(("admissibility %s" % rep.kind, tuple(pairs)))
    return out


def _collect(cfg, job, theta=0.0, eps_fn=None):
    """Run the replicate grid and return {n: {stat: np.array}} plus rows."""
    tasks = []
    for ni, n in enumerate(cfg.n_schedule):
        eps = eps_fn(n) if eps_fn is not None else 0.0
        for rep in range(cfg.replications):
            tasks.append((cfg.key(), job, ni, n, rep, theta, eps, cfg.seed))
    results = _map_replicates(tasks)
    per_n = {n: {} for n in cfg.n_schedule}
    rows = []
    idx = 0
    for ni, n in enumerate(cfg.n_schedule):
        for rep in range(cfg.replications):
            for stat, value in results[idx]:
                per_n[n].setdefault(stat, []).append(value)
                rows.append((rep, n, stat, float(value)))
            idx += 1
    for n in per_n:
        for stat in per_n[n]:
            per_n[n][stat] = np.asarray(per_n[n][stat])
    return per_n, tuple(rows)


def _mean_var(values):
    r = values.size
    mean = math.fsum(values) / r
    if r < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (r - 1.0)
    return mean, var


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_clt_experiment(config):
    """Replicated scaled estimation errors against the limit normal law.

    For each n in the schedule: replications of sqrt(n) (V_n - theta) with
    theta the plug-in value at the model; the report carries the empirical
    mean and variance, the ratio to the quadrature variance, and the
    Kolmogorov distance of the replicates standardized by the theoretical
    sigma (plus a self-normalized variant when Gamma is path-estimated).
    """
    built = _built(config.key())
    if built["kernel"] is None:
        raise ConfigError("clt experiment needs a [kernel] section")
    assumptions = _gate_assumptions(config, built)
    adm = _gate_admissibility(config, built)

    theta = v_statistic_plugin(built["kernel"], built["model"]).value
    gamma = _gamma_model(config, built)
    vrep = asymptotic_variance(_projection(built), gamma)
    sigma2 = vrep.sigma2
    if not sigma2 > 0.0:
        raise NumericError("theoretical variance is not positive: %r"
                           % (sigma2,))
    sigma = math.sqrt(sigma2)

    job = {"edf": "clt", "ustat": "clt-ustat"}[config.estimator]
    if config.linear_part:
        if config.estimator != "edf":
            raise ConfigError("linear_part tracking needs the edf estimator")
        job = "clt-linear"
    per_n, rows = _collect(config, job, theta=theta)

    sections = [_config_section(config), _assumption_section(assumptions)]
    sections.extend(_admissibility_sections(adm))
    sections.append(("limit", (
        ("theta", theta),
        ("sigma2", sigma2),
        ("gamma", gamma.kind if gamma.kind == "brownian_bridge"
         else "%s-%s" % (gamma.kind, gamma.mode)),
        ("gamma_truncation", gamma.truncation),
        ("quadrature_cells", vrep.resolution),
    )))
    for n in config.n_schedule:
        vals = per_n[n]["scaled_error"]
        mean, var = _mean_var(vals)
        ratio = var / sigma2
        ks = stats.kstest(vals / sigma, "norm").statistic
        if not 0.0 <= ks <= 1.0 or ratio <= 0.0:
            raise NumericError("report invariant violated at n = %d" % n)
        pairs = [
            ("replications", config.replications),
            ("mean", mean),
            ("variance", var),
            ("variance_ratio", ratio),
            ("ks_standardized", ks),
        ]
        if gamma.mode == "path":
            self_ks = stats.kstest(vals / math.sqrt(var), "norm").statistic
            pairs.append(("ks_self_normalized", self_ks))
        if config.linear_part:
            lp = per_n[n]["linear_part"]
            corr = float(np.corrcoef(vals, lp)[0, 1])
            pairs.append(("linear_part_correlation", corr))
        sections.append(("n %d" % n, tuple(pairs)))
    return ExperimentReport(kind="clt", sections=tuple(sections),
                            csv_rows=rows)


def run_uv_equivalence(config):
    """Distribution of the scaled U-vs-V gap across the n schedule.

    Reports quantiles of |sqrt(n) (U_n - V_n)| per n, the replicate-wise
    correlation of the two statistics, the worst identity residual
    gap - (S1 - S2), and the fitted log-log decay slope of the median gap.
    """
    built = _built(config.key())
    if built["kernel"] is None:
        raise ConfigError("uv experiment needs a [kernel] section")
    assumptions = _gate_assumptions(config, built)
    adm = _gate_admissibility(config, built)
    per_n, rows = _collect(config, "uv")

    sections = [_config_section(config), _assumption_section(assumptions)]
    sections.extend(_admissibility_sections(adm))
    medians = []
    for n in config.n_schedule:
        gaps = np.abs(per_n[n]["uv_gap"])
        u = per_n[n]["u_statistic"]
        v = per_n[n]["v_statistic"]
        resid = np.abs(per_n[n]["identity_residual"]).max()
        pairs = [("replications", config.replications)]
        for q in _QUANTS:
            pairs.append(("abs_gap_q%02d" % int(q * 100),
                          float(np.quantile(gaps, q))))
        if config.replications >= 2 and u.std() > 0.0 and v.std() > 0.0:
            pairs.append(("uv_correlation", float(np.corrcoef(u, v)[0, 1])))
        pairs.append(("max_identity_residual", float(resid)))
        sections.append(("n %d" % n, tuple(pairs)))
        medians.append(float(np.quantile(gaps, 0.5)))
    slope = float("nan")
    if len(config.n_schedule) >= 2 and all(m > 0.0 for m in medians):
        slope = float(np.polyfit(np.log(np.asarray(config.n_schedule, float)),
                                 np.log(medians), 1)[0])
    sections.append(("decay", (("median_gap_slope", slope),)))
    return ExperimentReport(kind="uv-gap", sections=tuple(sections),
                            csv_rows=rows)


def run_weighted_process_experiment(config):
    """Quantile stability of the weighted empirical-process norm.

    Replicates the lambda-weighted sup-norm of sqrt(n) (F_hat - F) across
    the n schedule; tight quantiles across n indicate the weak limit is
    doing its job, while gamma < 2 lambda flags the divergence regime (a
    diagnostic, not a theorem test).
    """
    built = _built(config.key())
    gamma = built["model"].gamma_sup
    adm = _gate_admissibility(config, built)
    per_n, rows = _collect(config, "wep")

    sections = [_config_section(config)]
    sections.extend(_admissibility_sections(adm))
    divergent = gamma < 2.0 * config.lam
    medians = []
    for n in config.n_schedule:
        norms = per_n[n]["weighted_norm"]
        pairs = [("replications", config.replications)]
        for q in _QUANTS:
            pairs.append(("norm_q%02d" % int(q * 100),
                          float(np.quantile(norms, q))))
        sections.append(("n %d" % n, tuple(pairs)))
        medians.append(float(np.quantile(norms, 0.5)))
    growth = medians[-1] / medians[0] if medians[0] > 0.0 else float("inf")
    sections.append(("regime", (
        ("gamma", gamma),
        ("two_lambda", 2.0 * config.lam),
        ("divergence_expected", divergent),
        ("median_growth_ratio", growth),
    )))
    return ExperimentReport(kind="wep", sections=tuple(sections),
                            csv_rows=rows)


def run_smoothed_experiment(config):
    """CLT metrics for the heat-smoothed plug-in estimator.

    The bandwidth schedule must pass the admissibility condition at every n
    before any simulation; a schedule that is identically zero makes the
    smoothing operator the identity, so the run delegates to
    ``run_clt_experiment`` and reproduces its report byte for byte.
    """
    built = _built(config.key())
    if built["kernel"] is None:
        raise ConfigError("smoothed experiment needs a [kernel] section")
    eps_fn = _epsilon_fn(config.epsilon)
    if all(eps_fn(n) == 0.0 for n in config.n_schedule):
        return run_clt_experiment(config)
    model = built["model"]
    if not model.is_continuous or model.lipschitz_cdf is None:
        raise HypothesisError("smoothed estimation needs a Lipschitz "
                              "continuous marginal cdf")
    checks = [bandwidth_admissible(n, eps_fn(n), model.gamma_sup, config.lam)
              for n in config.n_schedule]
    if not all(c.passes for c in checks):
        bad = next(c for c in checks if not c.passes)
        raise HypothesisError(
            "bandwidth schedule inadmissible: sqrt(n) eps^((gamma - lambda)"
            "/(2 gamma)) = %g at n = %d exceeds %g"
            % (bad.value, bad.n, bad.threshold))
    assumptions = _gate_assumptions(config, built)
    adm = _gate_admissibility(config, built)

    theta = v_statistic_plugin(built["kernel"], built["model"]).value
    gamma = _gamma_model(config, built)
    vrep = asymptotic_variance(_projection(built), gamma)
    sigma2 = vrep.sigma2
    sigma = math.sqrt(sigma2)
    per_n, rows = _collect(config, "smoothed", theta=theta, eps_fn=eps_fn)

    sections = [_config_section(config), _assumption_section(assumptions)]
    sections.extend(_admissibility_sections(adm))
    sections.append(("limit", (
        ("theta", theta),
        ("sigma2", sigma2),
        ("gamma", gamma.kind if gamma.kind == "brownian_bridge"
         else "%s-%s" % (gamma.kind, gamma.mode)),
        ("gamma_truncation", gamma.truncation),
        ("quadrature_cells", vrep.resolution),
    )))
    for n in config.n_schedule:
        vals = per_n[n]["scaled_error"]
        gaps = per_n[n]["smoothing_gap"]
        mean, var = _mean_var(vals)
        pairs = [
            ("replications", config.replications),
            ("epsilon", eps_fn(n)),
            ("mean", mean),
            ("variance", var),
            ("variance_ratio", var / sigma2),
            ("ks_standardized", stats.kstest(vals / sigma, "norm").statistic),
            ("smoothing_gap_q50", float(np.quantile(gaps, 0.5))),
            ("smoothing_gap_q90", float(np.quantile(gaps, 0.9))),
        ]
        sections.append(("n %d" % n, tuple(pairs)))
    return ExperimentReport(kind="smoothed", sections=tuple(sections),
                            csv_rows=rows)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def report_text(report):
    """Deterministic structured text: fixed section and key order, floats
    in shortest round-trip form, no timing data."""
    lines = ["[uvstats %s report]" % report.kind]
    for name, pairs in report.sections:
        lines.append("")
        lines.append("[%s]" % name)
        for key, value in pairs:
            lines.append("%s = %s" % (key, _fmt(value)))
    return "\n".join(lines) + "\n"


def csv_text(report):
    lines = ["replicate,n,statistic,value"]
    for rep, n, stat, value in report.csv_rows:
        lines.append("%d,%d,%s,%s" % (rep, n, stat, repr(value)))
    return "\n".join(lines) + "\n"


def write_outputs(report, config, stream):
    """Write the report (file or stream) and the CSV dump when a path is
    configured; returns the report path or None."""
    text = report_text(report)
    if config.report_path:
        with open(config.report_path, "w") as fh:
            fh.write(text)
    else:
        stream.write(text)
    csv_path = config.csv_path
    if csv_path is None and config.report_path:
        csv_path = config.report_path + ".csv"
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write(csv_text(report))
    return config.report_path
