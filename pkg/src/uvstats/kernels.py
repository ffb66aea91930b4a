"""Symmetric kernels of two arguments and their projections onto one argument.

The projection of a kernel g against a marginal F is
``g1(x) = integral of g(x, y) dF(y)`` (and ``g2`` with the roles swapped);
the induced Lebesgue-Stieltjes measures d(g1), d(g2) drive every asymptotic
quantity downstream.  Built-in kernels carry closed forms (projection values,
projection-measure densities, growth order lambda'); the generic numeric path
integrates in probability space on the same quantile lattice so that the
kernel's diagonal kink always lands on a lattice node.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PreconditionError
from .gridfun import (
    GridFunction,
    SignedMeasure,
    Tail,
    abs_measure,
    measure_from,
    stieltjes,
    weight_function,
    weighted_norm,
)
from .quadrature import gauss_rule


def _anchored_power_tail(value_at_cut, coef, exponent, cut):
    """Tail with the given leading power term, continuous at the cut."""
    lam = (1.0 + abs(cut)) ** exponent if math.isfinite(exponent) else 0.0
    return Tail(value_at_cut - coef * lam, coef, exponent)


@dataclass(frozen=True)
class Kernel:
    """A measurable kernel of two real arguments.

    ``func`` broadcasts over numpy arrays.  ``lambda_prime`` is the declared
    growth order: |g(x, y)| <= C (1+|x|)^lambda' (1+|y|)^lambda'.  Optional
    analytic callables supply the projection value function, the projection
    measure density, and their tails for a given marginal model.
    """

    name: str
    func: callable
    lambda_prime: float
    symmetric: bool = True
    analytic_g1: callable = None
    analytic_density: callable = None
    growth_constant: float = 1.0

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def diagonal(self, x):
        x = np.asarray(x, dtype=float)
        return self.func(x, x)


def gini_kernel():
    """g(x1, x2) = |x1 - x2| (Gini mean difference), growth order 1."""

    def g1(model):
        if model.mean is None or model.integrated_survival is None:
            raise PreconditionError("gini projection needs a finite mean")
        mu = model.mean
        isf = model.integrated_survival

        def values(x):
            x = np.asarray(x, dtype=float)
            return x - mu + 2.0 * isf(x)

        def tails(lo, hi):
            left = _anchored_power_tail(float(values(lo)), 1.0, 1.0, lo)
            right = _anchored_power_tail(float(values(hi)), 1.0, 1.0, hi)
            return left, right

        return values, tails

    def density(model):
        cdf = model.cdf

        def rho(x):
            return 2.0 * cdf(np.asarray(x, dtype=float)) - 1.0

        def tails(lo, hi):
            tl, tr = model.cdf_tails(lo, hi)
            return (Tail(2.0 * tl.offset - 1.0, 2.0 * tl.coef, tl.exponent),
                    Tail(2.0 * tr.offset - 1.0, 2.0 * tr.coef, tr.exponent))

        return rho, tails

    return Kernel(name="gini",
                  func=lambda x, y: np.abs(x - y),
                  lambda_prime=1.0,
                  analytic_g1=g1,
                  analytic_density=density)


def variance_kernel():
    """g(x1, x2) = (x1 - x2)^2 / 2 (sample-variance kernel), growth order 2."""

    def g1(model):
        if model.mean is None or model.second_moment is None:
            raise PreconditionError("variance projection needs two moments")
        mu, m2 = model.mean, model.second_moment

        def values(x):
            x = np.asarray(x, dtype=float)
            return 0.5 * x * x - mu * x + 0.5 * m2

        def tails(lo, hi):
            left = _anchored_power_tail(float(values(lo)), 0.5, 2.0, lo)
            right = _anchored_power_tail(float(values(hi)), 0.5, 2.0, hi)
            return left, right

        return values, tails

    def density(model):
        mu = model.mean

        def rho(x):
            return np.asarray(x, dtype=float) - mu

        def tails(lo, hi):
            return (_anchored_power_tail(lo - mu, -1.0, 1.0, lo),
                    _anchored_power_tail(hi - mu, 1.0, 1.0, hi))

        return rho, tails

    return Kernel(name="variance",
                  func=lambda x, y: 0.5 * (x - y) ** 2,
                  lambda_prime=2.0,
                  analytic_g1=g1,
                  analytic_density=density)


def kernel_from_table(path, lambda_prime, symmetric=None, name="table"):
    """Kernel tabulated as rows ``x y g`` on a rectangular lattice.

    Bilinear interpolation inside the lattice, linear extrapolation outside;
    the growth order must be declared since it cannot be inferred.
    """
    from scipy.interpolate import RegularGridInterpolator

    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 3:
        raise ConfigError("kernel table needs rows 'x y g'")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise ConfigError("kernel table is not a full rectangular lattice")
    order = np.lexsort((data[:, 1], data[:, 0]))
    values = data[order, 2].reshape(xs.size, ys.size)
    if symmetric is None:
        symmetric = (xs.size == ys.size and np.allclose(xs, ys)
                     and np.allclose(values, values.T, atol=1e-12))
    interp = RegularGridInterpolator((xs, ys), values, method="linear",
                                     bounds_error=False, fill_value=None)

    def func(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float),
                                   np.asarray(y, dtype=float))
        pts = np.stack([x.ravel(), y.ravel()], axis=-1)
        return interp(pts).reshape(x.shape)

    return Kernel(name=name, func=func, lambda_prime=float(lambda_prime),
                  symmetric=bool(symmetric))


_KERNELS = {"gini": gini_kernel, "variance": variance_kernel}


def kernel_from_name(name):
    try:
        return _KERNELS[name]()
    except KeyError:
        raise ConfigError("unknown kernel %r (have: %s, or a table file)"
                          % (name, ", ".join(sorted(_KERNELS)))) from None


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

@dataclass
class Projection:
    """Projections g1, g2 of a kernel against a marginal, with measures."""

    kernel: Kernel
    model: object
    g1: GridFunction
    g2: GridFunction
    dg1: SignedMeasure
    dg2: SignedMeasure
    gbar1: GridFunction
    gbar2: GridFunction
    analytic: bool
    lambda_prime: float


def _numeric_projection_values(kernel, model, grid, swap=False,
                               absolute=False, lattice=None):
    """integral of g(x, Q(u)) du on the lattice of cdf values of the grid.

    Quadrature cells are the lattice cells themselves, so a kernel kink on
    the diagonal y = x never falls inside a cell when x is a lattice node.
    ``lattice`` overrides the integration lattice (defaults to the grid).
    """
    lattice = grid if lattice is None else lattice
    u = model.cdf(lattice)
    u = np.clip(u, 0.0, 1.0)
    # degenerate (point-mass) models: single quantile value
    if lattice.size < 2 or u[-1] <= u[0]:
        y = model.quantile(np.array([0.5]))
        vals = kernel(grid, y[0]) if not swap else kernel(y[0], grid)
        return np.abs(vals) if absolute else vals
    # subdivide the outermost cells geometrically: the quantile function's
    # derivatives blow up polynomially toward u = 0 and u = 1, which plain
    # fixed-order quadrature cannot absorb there (kinks of the kernel on the
    # diagonal still land on lattice nodes, never inside a cell)
    u_int = [u]
    if u[0] > 0.0:
        r = np.geomspace(u[0], u[1], 40)[1:-1]
        u_int.append(r)
    if u[-1] < 1.0:
        r = 1.0 - np.geomspace(1.0 - u[-1], 1.0 - u[-2], 40)[1:-1]
        u_int.append(r)
    u_all = np.unique(np.concatenate(u_int))
    nodes, wts = gauss_rule(4)
    du = np.diff(u_all)
    mid = 0.5 * (u_all[:-1] + u_all[1:])
    uq = mid[:, None] + 0.5 * du[:, None] * nodes[None, :]
    wq = (0.5 * du[:, None] * wts[None, :]).ravel()
    yq = model.quantile(uq.ravel())
    out = np.empty(grid.size)
    chunk = max(1, int(2e6 // max(yq.size, 1)))
    for i0 in range(0, grid.size, chunk):
        xs = grid[i0:i0 + chunk, None]
        vals = kernel(xs, yq[None, :]) if not swap else kernel(yq[None, :], xs)
        if absolute:
            vals = np.abs(vals)
        out[i0:i0 + chunk] = vals @ wq
    # mass outside the lattice: power tails get an explicit continuation
    # integral (they carry mass that matters when the kernel grows), light
    # tails a boundary lump of the leftover ~qlo mass, bounded tails nothing
    tl, tr = model.cdf_tails(lattice[0], lattice[-1])
    for side, mass, y0, tail in (("left", u[0], lattice[0], tl),
                                 ("right", 1.0 - u[-1], lattice[-1], tr)):
        if mass <= 0.0:
            continue
        dens = tail.derivative_density()
        if math.isfinite(dens.exponent) and not dens.is_zero():
            if dens.exponent + kernel.lambda_prime >= -1.0:
                raise PreconditionError(
                    "marginal tail too heavy for kernel growth order %g"
                    % kernel.lambda_prime)
            out += _tail_continuation(kernel, grid, y0, side, dens,
                                      swap=swap, absolute=absolute)
        else:
            vals = kernel(grid, y0) if not swap else kernel(y0, grid)
            if absolute:
                vals = np.abs(vals)
            out += mass * np.asarray(vals, dtype=float)
    return out


def _tail_continuation(kernel, grid, cut, side, dens, swap=False,
                       absolute=False, decades=9, cells_per_decade=6):
    """integral of g(x, y) rho(y) dy over a power tail beyond the cut."""
    nodes, wts = gauss_rule(4)
    span = np.geomspace(1.0 + abs(cut),
                        (1.0 + abs(cut)) * 10.0 ** decades,
                        decades * cells_per_decade + 1)
    y = span - 1.0 if side == "right" else 1.0 - span
    a, b = y[:-1], y[1:]
    yq = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * nodes).ravel()
    wq = (0.5 * np.abs(b - a)[:, None] * wts[None, :]).ravel()
    rho = np.abs(np.asarray(dens(yq), dtype=float))
    vals = kernel(grid[:, None], yq[None, :]) if not swap \
        else kernel(yq[None, :], grid[:, None])
    if absolute:
        vals = np.abs(vals)
    return np.asarray(vals, dtype=float) @ (rho * wq)


def _generic_tails(values, grid, lambda_prime):
    lo, hi = grid[0], grid[-1]
    cl = values[0] / (1.0 + abs(lo)) ** lambda_prime
    cr = values[-1] / (1.0 + abs(hi)) ** lambda_prime
    return (Tail(0.0, cl, lambda_prime), Tail(0.0, cr, lambda_prime))


def project(kernel, model, grid_points=4001, qlo=1e-10, force_numeric=False):
    """Project a kernel against a marginal model.

    Uses the kernel's analytic data when available (projection values and
    measure densities exact at the lattice nodes); otherwise integrates
    numerically in probability space and differentiates the result through
    the Jordan machinery.  Returns a :class:`Projection`.
    """
    grid = model.quantile_grid(grid_points, qlo)
    analytic = (kernel.analytic_g1 is not None
                and kernel.analytic_density is not None and not force_numeric)
    if analytic:
        values_fn, vtails = kernel.analytic_g1(model)
        rho_fn, rtails = kernel.analytic_density(model)
        vals = np.asarray(values_fn(grid), dtype=float)
        tl, tr = vtails(grid[0], grid[-1])
        g1 = GridFunction(grid, vals, tail_left=tl, tail_right=tr)
        rho = np.asarray(rho_fn(grid), dtype=float)
        dtl, dtr = rtails(grid[0], grid[-1])
        dg1 = SignedMeasure(grid, rho[:-1], rho[1:], tail_left=dtl,
                            tail_right=dtr)
        g2, dg2 = g1, dg1
        gbar1 = gbar2 = _absolute_projection(kernel, model, grid, g1)
    else:
        vals = _numeric_projection_values(kernel, model, grid)
        g1 = GridFunction(grid, vals,
                          tail_left=_generic_tails(vals, grid, kernel.lambda_prime)[0],
                          tail_right=_generic_tails(vals, grid, kernel.lambda_prime)[1])
        dg1 = measure_from(g1)
        if kernel.symmetric:
            g2, dg2 = g1, dg1
        else:
            vals2 = _numeric_projection_values(kernel, model, grid, swap=True)
            g2 = GridFunction(grid, vals2,
                              tail_left=_generic_tails(vals2, grid, kernel.lambda_prime)[0],
                              tail_right=_generic_tails(vals2, grid, kernel.lambda_prime)[1])
            dg2 = measure_from(g2)
        gbar1 = _absolute_projection(kernel, model, grid, g1)
        gbar2 = gbar1 if kernel.symmetric else \
            _absolute_projection(kernel, model, grid, g2, swap=True)
    return Projection(kernel, model, g1, g2, dg1, dg2, gbar1, gbar2,
                      analytic, kernel.lambda_prime)


def _absolute_projection(kernel, model, grid, g_signed, swap=False):
    """Projection of |g|; for nonnegative kernels it equals the projection."""
    probe = model.quantile(np.array([0.05, 0.35, 0.65, 0.95]))
    sample = kernel(probe[:, None], probe[None, :])
    if np.all(np.asarray(sample) >= 0.0):
        return g_signed
    vals = _numeric_projection_values(kernel, model, grid, swap=swap,
                                      absolute=True)
    tl, tr = _generic_tails(vals, grid, kernel.lambda_prime)
    return GridFunction(grid, vals, tail_left=tl, tail_right=tr)


# ---------------------------------------------------------------------------
# hypothesis checks
# ---------------------------------------------------------------------------

@dataclass
class AssumptionEntry:
    name: str
    passed: bool
    detail: str
    value: float = None


@dataclass
class AssumptionReport:
    """Outcome of the kernel/marginal hypothesis battery."""

    kernel: str
    marginal: str
    lam: float
    lam_prime: float
    entries: list = field(default_factory=list)

    def add(self, name, passed, detail, value=None):
        self.entries.append(AssumptionEntry(name, bool(passed), detail, value))

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e.passed]


def check_assumptions(kernel, model, lam, lam_prime=None, section_grid=801,
                      section_levels=11):
    """Verify the estimator hypotheses for a kernel/marginal pair.

    Checks, in order: (a) kernel sections are locally-BV with the declared
    growth order and uniformly integrable variation under the decaying
    weight; (b) the projections have weight-integrable variation measures and
    bounded weighted absolute projections; (c) the marginal is continuous
    with the moments the kernel and the weighted process require.  Only
    x2-sections are checked (symmetric kernels make the x1 check redundant;
    the report says so).  Requires lam > lam_prime >= 0.
    """
    if lam_prime is None:
        lam_prime = kernel.lambda_prime
    if not (lam > lam_prime >= 0.0):
        raise PreconditionError("need lam > lam_prime >= 0 (got %r, %r)"
                                % (lam, lam_prime))
    report = AssumptionReport(kernel.name, model.name, lam, lam_prime)

    # (a) sections g(., x2) on a lattice of x2 quantiles
    grid = model.quantile_grid(section_grid, qlo=1e-8)
    levels = np.linspace(0.05, 0.95, section_levels)
    x2s = np.asarray(model.quantile(levels), dtype=float)
    sec_norms = []
    sec_weighted_tv = []
    ok_norm = ok_tv = True
    for x2 in np.atleast_1d(x2s):
        vals = np.asarray(kernel(grid, x2), dtype=float)
        tl, tr = _generic_tails(vals, grid, kernel.lambda_prime)
        section = GridFunction(grid, vals, tail_left=tl, tail_right=tr)
        nrm = weighted_norm(section, -lam_prime)
        sec_norms.append(nrm)
        ok_norm = ok_norm and math.isfinite(nrm)
        try:
            tv = stieltjes(weight_function(grid, -lam), abs_measure(section),
                           label="section variation")
        except PreconditionError:
            ok_tv = False
            tv = math.inf
        sec_weighted_tv.append(tv * (1.0 + abs(float(x2))) ** (-lam_prime))
        ok_tv = ok_tv and math.isfinite(tv)
    report.add("section_bv_norm", ok_norm,
               "x2-sections bounded under (1+|x|)^(-lambda') "
               "(x1-sections identical by symmetry)" if kernel.symmetric else
               "x2-sections bounded under (1+|x|)^(-lambda')",
               max(sec_norms))
    report.add("section_weighted_variation", ok_tv,
               "weighted variation of sections, scaled by "
               "(1+|x2|)^(-lambda'), bounded over the lattice",
               max(sec_weighted_tv))

    # (b) projections: integrable variation and bounded absolute projections
    try:
        proj = project(kernel, model, grid_points=1601, qlo=1e-8)
        for tag, dg, gbar in (("1", proj.dg1, proj.gbar1),
                              ("2", proj.dg2, proj.gbar2)):
            try:
                tv = stieltjes(weight_function(dg.breaks, -lam), dg.abs(),
                               label="projection variation " + tag)
                report.add("projection_variation_" + tag, math.isfinite(tv),
                           "integral of (1+|x|)^(-lambda) |d g_%s| finite" % tag, tv)
            except PreconditionError as exc:
                report.add("projection_variation_" + tag, False, str(exc))
            nrm = weighted_norm(gbar, -lam_prime)
            report.add("projection_abs_bounded_" + tag, math.isfinite(nrm),
                       "absolute projection bounded under (1+|x|)^(-lambda')",
                       nrm)
    except PreconditionError as exc:
        report.add("projection", False, "projection unavailable: %s" % exc)

    # (c) marginal: continuity and moments
    report.add("marginal_continuous", model.is_continuous,
               "marginal distribution function is continuous")
    report.add("moment_phi", model.gamma_sup > 2.0 * lam,
               "declared moment order sup %g exceeds 2*lambda = %g "
               "(weighted-process moment requirement; also covers the "
               "(1+|x|)^lambda' moment since lambda > lambda')"
               % (model.gamma_sup, 2.0 * lam), model.gamma_sup)
    report.add("double_integral", model.gamma_sup > lam_prime,
               "E|g(X1, X2)| finite by growth order vs declared moments",
               model.gamma_sup)
    return report
