"""Command-line front end.

Subcommands: estimate, variance, simulate, verify-assumptions, clt, uv-gap,
wep, smoothed, limit-sample.  Exit codes: 0 success, 2 configuration error
(including argparse usage errors), 3 hypothesis failure, 4 numeric failure.
"""

import argparse
import dataclasses
import sys
import time

import numpy as np

from .asymptotics import (
    asymptotic_variance,
    brownian_bridge_cov,
    longrun_cov,
    sample_limit,
)
from .datagen import ar1_process, arma_process, generate, iid_process
from .empirical import sample_from_file, smoothed_cdf
from .errors import (
    ConfigError,
    HypothesisError,
    NumericError,
    PreconditionError,
)
from .harness import (
    config_from_file,
    run_clt_experiment,
    run_smoothed_experiment,
    run_uv_equivalence,
    run_weighted_process_experiment,
    write_outputs,
)
from .kernels import check_assumptions, kernel_from_name, project
from .models import model_from_name
from .vstat import u_statistic, v_statistic_edf, v_statistic_plugin

_EXPERIMENTS = {
    "clt": run_clt_experiment,
    "uv-gap": run_uv_equivalence,
    "wep": run_weighted_process_experiment,
    "smoothed": run_smoothed_experiment,
}


def _parse_params(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError("--param expects name=value, got %r" % item)
        name, _, raw = item.partition("=")
        try:
            out[name.strip()] = float(raw)
        except ValueError:
            raise ConfigError("--param %s: %r is not numeric"
                              % (name, raw)) from None
    return out


def _marginal(args):
    return model_from_name(args.marginal, **_parse_params(args.param))


def _process(args, model):
    kind = getattr(args, "kind", "iid")
    if kind == "iid":
        return iid_process(model, seed=args.seed)
    if kind == "gaussian_copula_ar1":
        return ar1_process(model, args.phi, seed=args.seed)
    if kind == "gaussian_copula_arma":
        return arma_process(model, ar=tuple(args.ar or ()),
                            ma=tuple(args.ma or ()), seed=args.seed)
    raise ConfigError("unknown process kind %r" % (kind,))


def _gamma(args, model):
    phi = getattr(args, "phi", 0.0)
    if phi == 0.0:
        return brownian_bridge_cov(model)
    return longrun_cov(model, ar1_process(model, phi),
                       truncation=getattr(args, "truncation", None),
                       window=getattr(args, "window", None))


def _cmd_estimate(args, out):
    sample = sample_from_file(args.data)
    kernel = kernel_from_name(args.kernel)
    if args.estimator == "edf":
        rec = v_statistic_edf(kernel, sample)
    elif args.estimator == "ustat":
        rec = u_statistic(kernel, sample)
    else:
        rec = v_statistic_plugin(kernel, smoothed_cdf(sample, args.epsilon))
    out.write("kernel = %s\n" % rec.kernel)
    out.write("estimator = %s\n" % rec.estimator_kind)
    out.write("n = %d\n" % rec.n)
    out.write("path = %s\n" % rec.path)
    out.write("value = %s\n" % repr(rec.value))
    return 0


def _cmd_variance(args, out):
    kernel = kernel_from_name(args.kernel)
    model = _marginal(args)
    proj = project(kernel, model)
    gamma = _gamma(args, model)
    rep = asymptotic_variance(proj, gamma)
    out.write("kernel = %s\n" % args.kernel)
    out.write("marginal = %s\n" % model.name)
    out.write("gamma = %s\n" % rep.gamma_kind)
    out.write("sigma2 = %s\n" % repr(rep.sigma2))
    for i in range(2):
        for j in range(2):
            out.write("component_%d%d = %s\n"
                      % (i + 1, j + 1, repr(float(rep.components[i, j]))))
    out.write("quadrature_cells = %d\n" % rep.resolution)
    return 0


def _cmd_simulate(args, out):
    model = _marginal(args)
    process = _process(args, model)
    sample = generate(process, args.n, seed=args.seed)
    lines = "".join(repr(float(v)) + "\n" for v in sample)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines)
        out.write("wrote %d values to %s\n" % (sample.size, args.out))
    else:
        out.write(lines)
    return 0


def _cmd_verify(args, out):
    kernel = kernel_from_name(args.kernel)
    model = _marginal(args)
    report = check_assumptions(kernel, model, args.lam, args.lam_prime)
    out.write("kernel = %s\nmarginal = %s\n" % (report.kernel,
                                                report.marginal))
    out.write("lambda = %s\nlambda_prime = %s\n" % (repr(report.lam),
                                                    repr(report.lam_prime)))
    for entry in report.entries:
        out.write("%s = %s  # %s\n"
                  % (entry.name.replace(" ", "_"),
                     "pass" if entry.passed else "FAIL", entry.detail))
    out.write("passed = %s\n" % ("yes" if report.passed else "no"))
    return 0 if report.passed else 3


def _cmd_limit_sample(args, out):
    kernel = kernel_from_name(args.kernel)
    model = _marginal(args)
    proj = project(kernel, model)
    gamma = _gamma(args, model)
    draws = sample_limit(proj, gamma, seed=args.seed,
                         replications=args.replications)
    for v in draws:
        out.write(repr(float(v)) + "\n")
    return 0


def _cmd_experiment(args, out):
    config = config_from_file(args.config)
    if args.report:
        config = dataclasses.replace(config, report_path=args.report)
    if args.csv:
        config = dataclasses.replace(config, csv_path=args.csv)
    start = time.perf_counter()
    report = _EXPERIMENTS[args.experiment](config)
    elapsed = time.perf_counter() - start
    path = write_outputs(report, config, out)
    if path:
        out.write("report written to %s\n" % path)
    sys.stderr.write("runtime_seconds = %.3f\n" % elapsed)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="uvstats",
        description="U/V-statistic estimation, asymptotic variance, and "
                    "Monte Carlo verification of the limit theory.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_marginal(p):
        p.add_argument("--marginal", required=True,
                       help="marginal family name")
        p.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="marginal parameter, repeatable")

    p = sub.add_parser("estimate", help="point estimate from a sample file")
    p.add_argument("--kernel", required=True)
    p.add_argument("--data", required=True, help="one value per line")
    p.add_argument("--estimator", default="edf",
                   choices=["edf", "ustat", "smoothed"])
    p.add_argument("--epsilon", type=float, default=0.0,
                   help="bandwidth for the smoothed estimator")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("variance", help="asymptotic variance report")
    p.add_argument("--kernel", required=True)
    add_marginal(p)
    p.add_argument("--phi", type=float, default=0.0,
                   help="latent AR(1) coefficient for long-run Gamma")
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--window", default=None)
    p.set_defaults(func=_cmd_variance)

    p = sub.add_parser("simulate", help="write a generated sample")
    add_marginal(p)
    p.add_argument("--kind", default="iid",
                   choices=["iid", "gaussian_copula_ar1",
                            "gaussian_copula_arma"])
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--ar", type=float, action="append")
    p.add_argument("--ma", type=float, action="append")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify-assumptions",
                       help="kernel/marginal hypothesis battery")
    p.add_argument("--kernel", required=True)
    add_marginal(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--lambda-prime", dest="lam_prime", type=float,
                   default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("limit-sample",
                       help="draws of the limit functional, one per line")
    p.add_argument("--kernel", required=True)
    add_marginal(p)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--window", default=None)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_limit_sample)

    for name, help_text in (
            ("clt", "replicated CLT experiment"),
            ("uv-gap", "U- vs V-statistic equivalence experiment"),
            ("wep", "weighted empirical-process norm experiment"),
            ("smoothed", "smoothed plug-in CLT experiment")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--report", default=None,
                       help="override the report output path")
        p.add_argument("--csv", default=None,
                       help="override the replicate CSV path")
        p.set_defaults(func=_cmd_experiment, experiment=name)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except (ConfigError, PreconditionError) as exc:
        sys.stderr.write("uvstats: config error: %s\n" % exc)
        return 2
    except HypothesisError as exc:
        sys.stderr.write("uvstats: hypothesis failure: %s\n" % exc)
        return 3
    except NumericError as exc:
        sys.stderr.write("uvstats: numeric failure: %s\n" % exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
