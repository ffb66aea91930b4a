"""V- and U-statistics and the diagnostic decompositions relating them.

The V-statistic is the full double sum (diagonal included, normalized by
n^2); the U-statistic drops the diagonal and normalizes by n(n-1).  The
plug-in form accepts any probability input: empirical cdfs use exact weighted
double sums, gaussian-smoothed empirical cdfs use mixture closed forms where
the kernel admits them, continuous models integrate the analytic projection
against the model's own measure, and raw measures fall back to weighted
2D quadrature over atoms, density segments, and power tails.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .empirical import EmpiricalCdf, SmoothedCdf, weighted_empirical_process
from .errors import ConfigError, PreconditionError
from .gridfun import stieltjes
from .kernels import Kernel, _numeric_projection_values, project
from .models import DistributionModel
from .quadrature import gauss_rule

_CHUNK = 2 ** 21  # target elements per kernel-evaluation block


@dataclass
class EstimateRecord:
    """A point estimate plus the bookkeeping the harness serializes."""

    value: float
    estimator_kind: str  # V-plugin-EDF | V-plugin-smoothed | U-statistic | V-plugin-generic
    n: int
    kernel: str
    path: str            # generic-quadratic | fast-sorted | moment-form
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise PreconditionError("estimate is not finite")


@dataclass
class GapRecord:
    """The two-term split of the root-n gap between U- and V-statistics."""

    s1: float
    s2: float
    gap: float
    u_value: float
    v_value: float
    n: int
    kernel: str
    identity_residual: float  # gap - (s1 - s2); pure rounding


def _double_sum(func, x, y=None, wx=None, wy=None):
    """Weighted double sum of kernel values, compensated accumulation."""
    x = np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    wx = np.ones(x.size) if wx is None else np.asarray(wx, dtype=float)
    wy = wx if y is x else (np.ones(y.size) if wy is None
                            else np.asarray(wy, dtype=float))
    parts = []
    rows = max(1, _CHUNK // max(y.size, 1))
    for i0 in range(0, x.size, rows):
        block = np.asarray(func(x[i0:i0 + rows, None], y[None, :]),
                           dtype=float)
        parts.append(float((wx[i0:i0 + rows] @ block) @ wy))
    return math.fsum(parts)


def v_statistic_edf(kernel, sample, force_generic=False):
    """V-statistic of the sample: the full double sum over n^2 pairs.

    Built-in kernels take closed-form shortcuts: sorted prefix form for the
    absolute difference, moment form for the squared difference.  Anything
    else pays the O(n^2) double sum in compensated summation.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n == 0:
        raise PreconditionError("empty sample")
    if kernel.name == "gini" and not force_generic:
        s = np.sort(x)
        k = np.arange(1, n + 1, dtype=float)
        value = 2.0 * math.fsum((2.0 * k - n - 1.0) * s) / (n * n)
        path = "fast-sorted"
    elif kernel.name == "variance" and not force_generic:
        m1 = math.fsum(x) / n
        value = math.fsum((x - m1) ** 2) / n
        path = "moment-form"
    else:
        value = _double_sum(kernel, x) / (n * n)
        path = "generic-quadratic"
    return EstimateRecord(value, "V-plugin-EDF", n, kernel.name, path)


def u_statistic(kernel, sample):
    """U-statistic: diagonal removed, normalized by n(n-1)."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise PreconditionError("u-statistic needs at least two observations")
    rec = v_statistic_edf(kernel, sample)
    diag = math.fsum(np.asarray(kernel.diagonal(x), dtype=float))
    value = (n * n * rec.value - diag) / (n * (n - 1.0))
    return EstimateRecord(value, "U-statistic", n, kernel.name, rec.path,
                          extras={"v_value": rec.value,
                                  "diagonal_mean": diag / n})


def uv_gap(kernel, sample):
    """Split root-n (U_n - V_n) into S1 - S2.

    S1 = root-n V_n / (n-1), S2 = root-n mean-diagonal / (n-1); the equality
    gap = S1 - S2 is algebraic, so the recorded residual is pure rounding.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise PreconditionError("gap needs at least two observations")
    rn = math.sqrt(n)
    v = v_statistic_edf(kernel, sample).value
    u = u_statistic(kernel, sample).value
    diag_mean = math.fsum(np.asarray(kernel.diagonal(x), dtype=float)) / n
    s1 = rn * v / (n - 1.0)
    s2 = rn * diag_mean / (n - 1.0)
    gap = rn * (u - v)
    return GapRecord(s1, s2, gap, u, v, n, kernel.name,
                     identity_residual=gap - (s1 - s2))


# ---------------------------------------------------------------------------
# plug-in statistics
# ---------------------------------------------------------------------------

def _smoothed_closed_form(kernel, sm):
    """V against a gaussian-smoothed empirical cdf, in closed form."""
    pts, masses = sm.base.points, sm.base.masses
    tau = math.sqrt(2.0) * sm.scale  # sd of the difference of two draws
    if kernel.name == "variance":
        base = v_statistic_edf(kernel, sm.base.sample).value
        return base + tau * tau / 2.0, "moment-form"
    if kernel.name == "gini":
        # E|N(mu, tau^2)| = mu (2 Phi(mu/tau) - 1) + 2 tau phi(mu/tau)
        def smoothed_abs(mu):
            z = mu / tau
            return (mu * (2.0 * ndtr(z) - 1.0)
                    + 2.0 * tau * np.exp(-0.5 * z * z)
                    / math.sqrt(2.0 * math.pi))

        # beyond 8 tau the smoothed value equals |mu| to double precision,
        # so only near-diagonal pairs need the correction; with the small
        # bandwidths the CLT requires this is O(n) work on sorted points
        cut = 8.0 * tau
        hi = np.searchsorted(pts, pts + cut, side="right")
        npts = pts.size
        extra = int(np.sum(hi - np.arange(1, npts + 1)))
        if extra <= max(4 * npts, 0.05 * npts * npts):
            cw = np.concatenate([[0.0], np.cumsum(masses)])
            cs = np.concatenate([[0.0], np.cumsum(masses * pts)])
            base = 2.0 * math.fsum(masses * (pts * cw[:-1] - cs[:-1]))
            parts = [base, math.fsum(masses * masses) * smoothed_abs(0.0)]
            for j in range(npts):
                k = hi[j]
                if k > j + 1:
                    mu = pts[j + 1:k] - pts[j]
                    corr = smoothed_abs(mu) - mu
                    parts.append(2.0 * masses[j]
                                 * float(masses[j + 1:k] @ corr))
            return math.fsum(parts), "fast-sorted"
        return _double_sum(lambda a, b: smoothed_abs(a - b), pts,
                           wx=masses), "generic-quadratic"
    return None, None


def _smoothed_hermite(kernel, sm, order=16):
    """Generic kernel against the smoothed cdf by Gauss-Hermite pairs."""
    t, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / math.sqrt(2.0 * math.pi)
    pts, masses = sm.base.points, sm.base.masses
    shift = sm.scale * t
    parts = []
    for a, wa in zip(shift, w):
        for b, wb in zip(shift, w):
            parts.append(wa * wb * _double_sum(
                kernel, pts + a, pts + b, wx=masses, wy=masses))
    return math.fsum(parts)


def _measure_nodes(mu, lambda_prime, decades=9, cells_per_decade=6):
    """Weighted nodes (points, weights) carrying a measure's full mass.

    Atoms keep their masses; density segments contribute Gauss-Legendre
    nodes weighted by the linearized density; power tails continue on a
    geometric lattice. Divergence against the declared kernel growth raises.
    """
    nodes, wts = gauss_rule(4)
    pts = [mu.atom_x]
    wgt = [mu.atom_m]
    a, b = mu.breaks[:-1], mu.breaks[1:]
    if a.size:
        xq = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * nodes
        t = (xq - a[:, None]) / (b - a)[:, None]
        rho = mu.dens_l[:, None] * (1.0 - t) + mu.dens_r[:, None] * t
        wq = 0.5 * (b - a)[:, None] * wts[None, :]
        pts.append(xq.ravel())
        wgt.append((rho * wq).ravel())
    for side, tail, cut in (("left", mu.tail_left, mu.breaks[0]),
                            ("right", mu.tail_right, mu.breaks[-1])):
        if tail is None or tail.is_zero() or not math.isfinite(tail.exponent):
            continue
        if tail.exponent + lambda_prime >= -1.0:
            raise PreconditionError(
                "measure tail too heavy for kernel growth order %g"
                % lambda_prime)
        span = np.geomspace(1.0 + abs(cut),
                            (1.0 + abs(cut)) * 10.0 ** decades,
                            decades * cells_per_decade + 1)
        y = span - 1.0 if side == "right" else 1.0 - span
        ya, yb = y[:-1], y[1:]
        xq = (0.5 * (ya + yb)[:, None] + 0.5 * (yb - ya)[:, None] * nodes)
        wq = 0.5 * np.abs(yb - ya)[:, None] * wts[None, :]
        pts.append(xq.ravel())
        wgt.append((np.asarray(tail(xq.ravel()), dtype=float) * wq.ravel()))
    return np.concatenate(pts), np.concatenate(wgt)


def _plugin_measure(kernel, mu):
    """Double integral of g against a nonnegative measure of mass <= 1."""
    tol = 1e-12
    dens_min = min(mu.dens_l.min(initial=0.0), mu.dens_r.min(initial=0.0))
    atom_min = mu.atom_m.min(initial=0.0)
    if dens_min < -tol or atom_min < -tol:
        raise PreconditionError("plug-in input must be a nonnegative measure")
    total = mu.total_mass()
    if total > 1.0 + 1e-9:
        raise PreconditionError("plug-in input has mass %.6f > 1" % total)
    pts, wgt = _measure_nodes(mu, kernel.lambda_prime)
    return _double_sum(kernel, pts, wx=wgt)


def _plugin_model(kernel, model, grid_points, qlo):
    """integral of g1 dF in probability space.

    The outer integral of the projection reuses the kink-aware quantile
    quadrature by wrapping g1 as a one-argument kernel, so bulk, endpoint
    refinement, and power-tail continuation all come along.
    """
    if kernel.analytic_g1 is not None:
        values_fn, _ = kernel.analytic_g1(model)
    else:
        proj = project(kernel, model, grid_points=grid_points, qlo=qlo)
        values_fn = proj.g1
    probe = Kernel(name="_projection_integral",
                   func=lambda x, y: np.asarray(x, dtype=float) * 0.0
                   + np.asarray(values_fn(np.asarray(y, dtype=float)),
                                dtype=float),
                   lambda_prime=kernel.lambda_prime)
    lattice = model.quantile_grid(grid_points, qlo)
    return float(_numeric_projection_values(probe, model, np.zeros(1),
                                            lattice=lattice)[0])


def v_statistic_plugin(kernel, target, grid_points=4001, qlo=1e-10):
    """V-statistic of a cdf-like object: the double integral of g.

    Dispatch: EmpiricalCdf (exact weighted double sum), SmoothedCdf (closed
    forms for built-in kernels, Gauss-Hermite otherwise; epsilon = 0 routes
    through the empirical path unchanged), DistributionModel (projection
    integrated against the model measure), SignedMeasure (weighted 2D
    quadrature).
    """
    if isinstance(target, EmpiricalCdf):
        value = _double_sum(kernel, target.points, wx=target.masses)
        return EstimateRecord(value, "V-plugin-EDF", target.n, kernel.name,
                              "generic-quadratic")
    if isinstance(target, SmoothedCdf):
        if target.epsilon == 0.0:
            rec = v_statistic_plugin(kernel, target.base)
            return EstimateRecord(rec.value, "V-plugin-smoothed", rec.n,
                                  kernel.name, rec.path,
                                  extras={"epsilon": 0.0})
        value, path = _smoothed_closed_form(kernel, target)
        if value is None:
            value, path = _smoothed_hermite(kernel, target), \
                "generic-quadratic"
        return EstimateRecord(value, "V-plugin-smoothed", target.base.n,
                              kernel.name, path,
                              extras={"epsilon": target.epsilon})
    if isinstance(target, DistributionModel):
        if target.support[0] == target.support[1]:
            c = np.array([target.support[0]])
            value = float(np.asarray(kernel(c, c))[0])
        else:
            value = _plugin_model(kernel, target, grid_points, qlo)
        return EstimateRecord(value, "V-plugin-generic", 0, kernel.name,
                              "generic-quadratic",
                              extras={"target": target.name})
    if hasattr(target, "positive_part") and hasattr(target, "breaks"):
        value = _plugin_measure(kernel, target)
        return EstimateRecord(value, "V-plugin-generic", 0, kernel.name,
                              "generic-quadratic")
    raise ConfigError("cannot compute a plug-in statistic against %r"
                      % type(target).__name__)


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------

def hoeffding_linear_part(kernel, model, sample, projection=None,
                          grid_points=4001, background_points=16385):
    """First-order term of the plug-in expansion at the model.

    Returns minus the sum of the integrals of the scaled empirical
    discrepancy root-n (EDF - F) against the two projection measures.  By
    the integration-by-parts duality this equals root-n times the centered
    sample mean of g1 + g2 (which tests cross-check by direct summation);
    the dense clustered background keeps the linearized-process error well
    below the statistic's own scale.
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise PreconditionError("empty sample")
    proj = projection if projection is not None else \
        project(kernel, model, grid_points=grid_points)
    proc = weighted_empirical_process(x, model,
                                      background_points=background_points)
    return -(stieltjes(proc, proj.dg1, label="linear part 1")
             + stieltjes(proc, proj.dg2, label="linear part 2"))
