"""Limit covariance models, plug-in asymptotic variance, and limit sampling.

The limiting law of the centered plug-in statistic is driven by a Gaussian
process with covariance Gamma: the classical bridge covariance
F(min)(1 - F(max)) under independence, or the bridge plus a truncated series
of lagged indicator covariances under dependence.  This module builds both
covariance models, integrates them against the projection measures to get the
asymptotic variance, draws from the limit functional, and does the mixing-rate
admissibility arithmetic.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, DivergenceError, NumericError, PreconditionError
from .quadrature import gauss_rule, segment_nodes

__all__ = [
    "CovarianceModel", "VarianceReport", "GaussianPath", "AdmissibilityReport",
    "brownian_bridge_cov", "longrun_cov", "asymptotic_variance",
    "gaussian_paths", "gaussian_path", "sample_limit", "admissibility",
]

_BVN_ORDER = 48
# contribution threshold for the automatic lag cutoff: a lag with latent
# correlation r adds at most 2*arcsin(r)/(2 pi) at the median, the bridge
# contributes 1/4 there; r below this keeps the ratio under 1e-4
_LAG_CORR_FLOOR = 7.85e-5


def _bvn_excess(a, b, rho):
    """Phi2(a, b; rho) - Phi(a)Phi(b) via the correlation-path integral.

    The integrand is analytic in the correlation parameter, so one fixed
    Gauss rule on [0, rho] reaches ~1e-14 for |rho| <= 0.95; `a`, `b`
    broadcast.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    if rho == 0.0:
        return out
    t, w = gauss_rule(_BVN_ORDER)
    for ti, wi in zip(t, w):
        r = 0.5 * rho * (ti + 1.0)
        q = 1.0 - r * r
        out = out + wi * np.exp(-(a * a - 2.0 * r * a * b + b * b)
                                / (2.0 * q)) / np.sqrt(q)
    return out * (0.5 * rho / (2.0 * math.pi))


def _latent_coordinates(F, S):
    """Standard-normal coordinates Phi^{-1}(F) computed from whichever of the
    cdf/survival values keeps relative accuracy."""
    F = np.clip(np.asarray(F, dtype=float), 1e-300, 1.0)
    S = np.clip(np.asarray(S, dtype=float), 1e-300, 1.0)
    return np.where(F < 0.5, ndtri(F), -ndtri(S))


@dataclass
class CovarianceModel:
    """Covariance of the limiting Gaussian process of the empirical cdf.

    ``kind`` is "brownian_bridge" (evaluates F(min)(1-F(max))) or "longrun"
    (bridge plus the lag-window sum of lagged indicator covariances, analytic
    through latent Gaussian correlations or estimated from a sample path).

    ``psd_repair`` records the Frobenius norm of the most recent eigenvalue
    clipping; it stays 0.0 except for indefinite path-estimated Gram matrices.
    """

    kind: str
    marginal: object
    truncation: int = 0
    window: str = "rectangular"
    mode: str = "exact"
    lag_corr: np.ndarray = None
    lag_weights: np.ndarray = None
    path: np.ndarray = None
    psd_repair: float = field(default=0.0, compare=False)

    def _bridge(self, s, t):
        F = np.minimum(self.marginal.cdf(s), self.marginal.cdf(t))
        S = np.minimum(self.marginal.survival(s), self.marginal.survival(t))
        return np.clip(F, 0.0, 1.0) * np.clip(S, 0.0, 1.0)

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        out = self._bridge(s, t)
        if self.kind == "brownian_bridge" or self.truncation == 0:
            return out
        if self.mode == "analytic":
            a = _latent_coordinates(self.marginal.cdf(s), self.marginal.survival(s))
            b = _latent_coordinates(self.marginal.cdf(t), self.marginal.survival(t))
            for w, r in zip(self.lag_weights, self.lag_corr):
                if r != 0.0:
                    # the latent pair is exchangeable, so C_k(s,t) = C_k(t,s)
                    out = out + 2.0 * w * _bvn_excess(a, b, r)
            return out
        pts, inv = np.unique(np.concatenate([np.atleast_1d(s).ravel(),
                                             np.atleast_1d(t).ravel()]),
                             return_inverse=True)
        gram = self.gram(pts) - self._bridge(pts[:, None], pts[None, :])
        ns = np.atleast_1d(s).size
        si = inv[:ns].reshape(np.atleast_1d(s).shape)
        ti = inv[ns:].reshape(np.atleast_1d(t).shape)
        si, ti = np.broadcast_arrays(si, ti)
        return out + gram[si, ti]

    def gram(self, grid):
        """Gamma evaluated on a grid x grid lattice."""
        grid = np.asarray(grid, dtype=float)
        F = np.clip(self.marginal.cdf(grid), 0.0, 1.0)
        S = np.clip(self.marginal.survival(grid), 0.0, 1.0)
        out = np.minimum.outer(F, F) * np.minimum.outer(S, S)
        if self.kind == "brownian_bridge" or self.truncation == 0:
            return out
        if self.mode == "analytic":
            a = _latent_coordinates(F, S)
            for w, r in zip(self.lag_weights, self.lag_corr):
                if r != 0.0:
                    out = out + 2.0 * w * _bvn_excess(a[:, None], a[None, :], r)
            return out
        return out + _path_lag_gram(self.path, grid,
                                    self.lag_weights, self.truncation)


def _path_lag_gram(path, grid, lag_weights, K, chunk=8192):
    """Lag-window sum of empirical indicator covariances on grid x grid."""
    M = path.size
    order = np.sort(path)
    fhat = np.searchsorted(order, grid, side="right") / M
    out = np.zeros((grid.size, grid.size))
    for d in range(1, K + 1):
        m = M - d
        S = np.zeros_like(out)
        sa = np.zeros(grid.size)
        sb = np.zeros(grid.size)
        for lo in range(0, m, chunk):
            hi = min(lo + chunk, m)
            A = (path[lo:hi, None] <= grid[None, :]).astype(float)
            B = (path[lo + d:hi + d, None] <= grid[None, :]).astype(float)
            S += A.T @ B
            sa += A.sum(axis=0)
            sb += B.sum(axis=0)
        C = (S - np.outer(fhat, sb) - np.outer(sa, fhat)
             + m * np.outer(fhat, fhat)) / m
        out += lag_weights[d - 1] * (C + C.T)
    return out


def brownian_bridge_cov(model):
    """Bridge covariance F(s ^ t)(1 - F(s v t)) of the i.i.d. limit."""
    return CovarianceModel(kind="brownian_bridge", marginal=model)


def _window_weights(window, K):
    if window == "rectangular":
        return np.ones(K)
    if window == "bartlett":
        return 1.0 - np.arange(1, K + 1) / (K + 1.0)
    raise ConfigError("unknown lag window %r (have: rectangular, bartlett)"
                      % (window,))


def longrun_cov(model, source, truncation=None, window=None):
    """Long-run covariance: bridge plus truncated lagged indicator covariances.

    Parameters
    ----------
    model : DistributionModel
        Declared marginal; supplies the bridge term and the quantile frame.
    source : process or array
        Either a stationary process exposing ``latent_correlation`` (analytic
        lag covariances through the latent Gaussian copula) or a long sample
        path from which the lag covariances are estimated.
    truncation : int, optional
        Number of extra lags K.  Default: smallest K whose last included lag
        contributes less than 1e-4 of the bridge term at the median
        (analytic), or the cube-root-of-length rule for paths.
    window : str, optional
        "rectangular" or "bartlett" lag weights; defaults to rectangular for
        analytic lag covariances and Bartlett for path estimates (the usual
        guard against indefinite finite-sample estimates).
    """
    lat = getattr(source, "latent_correlation", None)
    if callable(lat):
        if not getattr(source, "strictly_stationary", True):
            raise PreconditionError("long-run covariance needs a strictly "
                                    "stationary source process")
        probe = np.asarray(lat(np.arange(1, 513)), dtype=float)
        if np.any(np.abs(probe) >= 1.0):
            raise PreconditionError("latent correlations must stay below 1")
        if truncation is None:
            big = np.nonzero(np.abs(probe) >= _LAG_CORR_FLOOR)[0]
            truncation = int(big[-1]) + 1 if big.size else 0
        truncation = int(truncation)
        if truncation < 0:
            raise PreconditionError("lag truncation must be nonnegative")
        window = window or "rectangular"
        corr = probe[:truncation] if truncation <= probe.size else \
            np.asarray(lat(np.arange(1, truncation + 1)), dtype=float)
        return CovarianceModel(kind="longrun", marginal=model,
                               truncation=truncation, window=window,
                               mode="analytic", lag_corr=corr,
                               lag_weights=_window_weights(window, truncation))
    path = np.asarray(source, dtype=float)
    if path.ndim != 1 or path.size < 16:
        raise PreconditionError("path source must be a 1-d sample of some length")
    if truncation is None:
        truncation = int(min(math.ceil(path.size ** (1.0 / 3.0)), 200))
    truncation = int(truncation)
    if truncation < 0:
        raise PreconditionError("lag truncation must be nonnegative")
    if truncation >= path.size:
        raise PreconditionError("lag truncation %d needs a path longer than %d"
                                % (truncation, path.size))
    window = window or "bartlett"
    return CovarianceModel(kind="longrun", marginal=model,
                           truncation=truncation, window=window,
                           mode="path", path=path,
                           lag_weights=_window_weights(window, truncation))


# ---------------------------------------------------------------------------
# asymptotic variance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarianceReport:
    """sigma^2 with its four projection-pair components.

    ``components[i, j]`` is the double integral of Gamma against
    dg_{i+1} x dg_{j+1}; their sum is ``sigma2``.
    """

    sigma2: float
    components: np.ndarray
    resolution: int
    gamma_kind: str

    def __post_init__(self):
        total = float(np.sum(self.components))
        if not math.isfinite(self.sigma2):
            raise NumericError("asymptotic variance is not finite")
        if abs(total - self.sigma2) > 1e-10 * (1.0 + abs(total)):
            raise NumericError("variance components do not sum to sigma2")
        if self.sigma2 < -1e-8:
            raise NumericError("asymptotic variance came out negative (%g)"
                               % self.sigma2)


def _growth_exponent(tail):
    """Dominant polynomial growth exponent of a tail density, -inf if the
    tail vanishes."""
    cands = []
    if tail.offset != 0.0:
        cands.append(0.0)
    if tail.coef != 0.0 and tail.exponent != -math.inf:
        cands.append(tail.exponent)
    return max(cands) if cands else -math.inf


def _check_integrability(model, mus):
    """Tail-exponent existence test for all four Gamma double integrals.

    Gamma(s, t) is bounded by sqrt(Gamma(s,s) Gamma(t,t)), so every component
    exists once each projection measure integrates sqrt(F (1-F)); for a
    marginal with survival exponent gamma that needs the measure's tail
    growth e to satisfy e + 1 < gamma / 2.
    """
    if model.tail_kind != "power":
        return
    half = model.tail_index / 2.0
    sides = [s for s, b in (("left", model.support[0]),
                            ("right", model.support[1]))
             if not math.isfinite(b)]
    for i, mu in enumerate(mus):
        for side in sides:
            tail = mu.tail_left if side == "left" else mu.tail_right
            e = _growth_exponent(tail)
            if e + 1.0 >= half:
                raise DivergenceError(
                    "component (%d,%d) diverges on the %s tail: projection "
                    "measure grows like power %g against marginal survival "
                    "exponent %g" % (i + 1, i + 1, side, e, model.tail_index),
                    component=(i + 1, i + 1), side=side)


def _thin_edges(breaks, resolution):
    if resolution is None or breaks.size - 1 <= resolution:
        return breaks
    idx = np.unique(np.round(np.linspace(0, breaks.size - 1,
                                         int(resolution) + 1)).astype(int))
    return breaks[idx]


# per-cell log-scale budget: the fixed Gauss rule resolves exp(-x)-type decay
# to ~1e-10 of local mass when F and 1-F move at most this many e-folds
_CELL_EFOLDS = 0.4


def _refine_cells(model, edges, floor_ratio=1e-12, cap=48, efolds=_CELL_EFOLDS):
    """Subdivide cells where the cdf or survival function decays through
    many e-folds (quantile lattices leave huge end cells in x).

    New points sit at geometric cdf/survival levels, so each subcell spans a
    bounded number of e-folds; a residual stub holds only a floor_ratio
    fraction of the decaying factor and integrates to noise.
    """
    F = np.clip(np.asarray(model.cdf(edges), dtype=float), 0.0, 1.0)
    S = np.clip(np.asarray(model.survival(edges), dtype=float), 0.0, 1.0)
    inserts = []
    for k in range(edges.size - 1):
        a, b = edges[k], edges[k + 1]
        pts = None
        if S[k] > 0.0:
            target = max(S[k + 1], S[k] * floor_ratio)
            span = math.log(S[k] / target)
            if span > efolds:
                n = min(int(math.ceil(span / efolds)), cap)
                lev = np.geomspace(S[k], target, n + 1)[1:-1]
                pts = model.quantile(1.0 - lev)
        if pts is None and F[k + 1] > 0.0:
            target = max(F[k], F[k + 1] * floor_ratio)
            span = math.log(F[k + 1] / target)
            if span > efolds:
                n = min(int(math.ceil(span / efolds)), cap)
                lev = np.geomspace(target, F[k + 1], n + 1)[1:-1]
                pts = model.quantile(lev)
        if pts is not None:
            pts = np.asarray(pts, dtype=float)
            inserts.append(pts[(pts > a) & (pts < b)])
    if not inserts:
        return edges
    out = np.union1d(edges, np.concatenate(inserts))
    return out[np.concatenate([[True], np.diff(out) > 0.0])]


def _tail_extension(model, dens_fns, side, start, max_cells=2000):
    """Lattice extending the core grid into one tail, paced by the hazard
    rate so each cell spans few e-folds of decay, until the remaining
    sqrt(Gamma)-weighted measure mass is negligible."""
    start = float(start)

    def decaying(x):
        v = model.cdf(np.asarray(x, dtype=float)) if side == "left" \
            else model.survival(np.asarray(x, dtype=float))
        return float(np.clip(v, 0.0, 1.0))

    if decaying(start) <= 0.0:
        return np.empty(0)
    edges = [start]
    x = start
    accum = 0.0
    quiet = 0
    for _ in range(max_cells):
        dens_here = float(model.pdf(np.asarray(x))) if model.pdf is not None else 0.0
        tail_val = decaying(x)
        if tail_val <= 0.0:
            break
        step = _CELL_EFOLDS * tail_val / dens_here if dens_here > 0.0 else math.inf
        step = min(step, 0.468 * (1.0 + abs(x)))
        step = max(step, 1e-6 * (1.0 + abs(x)))
        nxt = x - step if side == "left" else x + step
        a, b = (nxt, x) if side == "left" else (x, nxt)
        xq, wq = segment_nodes(np.array([a]), np.array([b]), 4)
        flat = xq.ravel()
        envelope = np.sqrt(np.clip(model.cdf(flat), 0.0, 1.0)
                           * np.clip(model.survival(flat), 0.0, 1.0))
        dens = np.max([np.abs(fn(flat)) for fn in dens_fns], axis=0)
        mass = float(np.sum(wq.ravel() * envelope * dens))
        edges.append(nxt)
        x = nxt
        accum += abs(mass)
        if abs(mass) < 1e-13 * (1.0 + accum):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    out = np.asarray(edges[1:], dtype=float)
    return out[::-1] if side == "left" else out


def _density_evaluators(proj):
    """Pointwise densities of (dg1, dg2): the exact closed forms when the
    projection is analytic, the measures' piecewise-linear data otherwise."""
    mus = (proj.dg1, proj.dg2)
    if proj.analytic and proj.kernel.analytic_density is not None \
            and (mus[1] is mus[0] or proj.kernel.symmetric):
        rho, _ = proj.kernel.analytic_density(proj.model)
        return rho, rho
    return mus[0].density_at, mus[1].density_at


def _mehler_lag_component(a, w1, w2, lag_corr, lag_weights, max_terms=2000):
    """Lag-part double integrals through the separable Hermite expansion.

    The bivariate-normal excess at correlation r expands as
    sum_m r^m/m! He_{m-1}(a) phi(a) He_{m-1}(b) phi(b); each term separates,
    so every lagged component reduces to squares of one-dimensional
    Hermite-function integrals.  Returns the (i, j) lag contributions as a
    2x2-able dict keyed by (0,0),(0,1),(1,1).
    """
    rmax = float(np.max(np.abs(lag_corr))) if lag_corr.size else 0.0
    out = {(0, 0): 0.0, (0, 1): 0.0, (1, 1): 0.0}
    if rmax == 0.0:
        return out
    f_prev = np.zeros_like(a)                      # f_{m-2}
    f_cur = np.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)   # f_{m-1}, m=1
    wsum = float(np.sum(lag_weights))
    bound1 = float(np.sum(np.abs(w1))) * 0.9
    bound2 = float(np.sum(np.abs(w2))) * 0.9
    rpow = np.ones_like(lag_corr)
    for m in range(1, max_terms + 1):
        rpow = rpow * lag_corr
        cm = float(np.sum(lag_weights * rpow))
        i1 = float(np.sum(w1 * f_cur))
        i2 = float(np.sum(w2 * f_cur))
        out[(0, 0)] += 2.0 * cm / m * i1 * i1
        out[(0, 1)] += 2.0 * cm / m * i1 * i2
        out[(1, 1)] += 2.0 * cm / m * i2 * i2
        if wsum * rmax ** (m + 1) / (m + 1) * max(bound1 * bound1,
                                                  bound2 * bound2,
                                                  abs(bound1 * bound2)) \
                < 1e-16 * (1.0 + abs(out[(0, 0)]) + abs(out[(1, 1)])):
            break
        # normalized Hermite-function recurrence keeps values O(1)
        f_next = (a * f_cur - math.sqrt(m - 1) * f_prev) / math.sqrt(m) \
            if m > 1 else a * f_cur
        f_prev, f_cur = f_cur, f_next
    return out


def _indicator_projection(pts, weights, path_sorted, M):
    """l(z) = integral of (1{z <= s} - Fhat(s)) dg(s) tabulated for lookups."""
    fhat = np.searchsorted(path_sorted, pts, side="right") / M
    const = float(np.sum(weights * fhat))
    suffix = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])
    return suffix, const


def _path_lag_component(pts, w1, w2, path, lag_weights, K):
    """Lag-part double integrals from a sample path.

    Each empirical lag covariance of indicator pairs factorizes over the
    path index, so the double integral collapses to lagged products of the
    one-dimensional projections l_i evaluated along the path.
    """
    M = path.size
    path_sorted = np.sort(path)
    out = {}
    lvals = []
    for w in (w1, w2):
        suffix, const = _indicator_projection(pts, w, path_sorted, M)
        idx = np.searchsorted(pts, path, side="left")
        lvals.append(suffix[idx] - const)
    l1, l2 = lvals
    for (i, j), (u, v) in {(0, 0): (l1, l1), (0, 1): (l1, l2),
                           (1, 1): (l2, l2)}.items():
        total = 0.0
        for d in range(1, K + 1):
            m = M - d
            total += lag_weights[d - 1] * (float(u[:m] @ v[d:])
                                           + float(v[:m] @ u[d:])) / m
        out[(i, j)] = total
    return out


def asymptotic_variance(proj, gamma, resolution=None):
    """sigma^2 = sum over i, j of the double integral of Gamma against
    dg_i x dg_j, with the four components reported separately.

    The bridge part is assembled in one sweep: F(s ^ t)(1 - F(s v t)) is
    separable off the diagonal, so ordered cell pairs reduce to prefix sums
    of per-cell integrals of F dg and (1-F) dg, and only the diagonal cells,
    where Gamma has its edge, need the two-triangle map.  Long-run lag terms
    are smooth and handled by the separable Hermite route (analytic mode) or
    by lagged products of indicator projections (path mode).

    Parameters
    ----------
    proj : Projection
        Projection bundle; its measures dg1, dg2 drive the integrals.
    gamma : CovarianceModel
    resolution : int, optional
        Cap on the number of core lattice cells (default: the projection's
        own grid).

    Raises
    ------
    DivergenceError
        When the tail-exponent test shows a component integral diverges.
    """
    model = gamma.marginal
    mus = (proj.dg1, proj.dg2)
    for mu in mus:
        if mu.atom_x.size:
            raise PreconditionError("projection measures with atoms are not "
                                    "supported by the variance quadrature")
    _check_integrability(model, mus)

    dens = _density_evaluators(proj)
    core = mus[0].breaks if np.array_equal(mus[0].breaks, mus[1].breaks) \
        else np.union1d(mus[0].breaks, mus[1].breaks)
    core = _refine_cells(model, _thin_edges(core, resolution))
    left = _tail_extension(model, dens, "left", core[0])
    right = _tail_extension(model, dens, "right", core[-1])
    E = np.concatenate([left, core, right])

    xq, wq = segment_nodes(E[:-1], E[1:], 4)
    flat = xq.ravel()
    F = np.clip(model.cdf(flat), 0.0, 1.0).reshape(xq.shape)
    S = np.clip(model.survival(flat), 0.0, 1.0).reshape(xq.shape)
    same_measure = dens[1] is dens[0] or mus[1] is mus[0]
    rho = [np.asarray(dens[0](flat), dtype=float).reshape(xq.shape)]
    rho.append(rho[0] if same_measure
               else np.asarray(dens[1](flat), dtype=float).reshape(xq.shape))

    P = [np.sum(wq * F * r, axis=1) for r in rho]
    Q = [np.sum(wq * S * r, axis=1) for r in rho]

    # diagonal cells: map Gauss nodes into the lower triangle {s < t}
    t01, w01 = gauss_rule(4)
    g01 = 0.5 * (t01 + 1.0)
    ww01 = 0.5 * w01
    depth = xq - E[:-1, None]                                   # t - a
    s_nodes = E[:-1, None, None] + depth[:, :, None] * g01[None, None, :]
    ws = depth[:, :, None] * ww01[None, None, :]
    sflat = s_nodes.ravel()
    Fs = np.clip(model.cdf(sflat), 0.0, 1.0).reshape(s_nodes.shape)
    rho_s = [np.asarray(dens[0](sflat), dtype=float).reshape(s_nodes.shape)]
    rho_s.append(rho_s[0] if same_measure
                 else np.asarray(dens[1](sflat), dtype=float).reshape(s_nodes.shape))

    def lower_triangle(i, j):
        inner = np.sum(ws * Fs * rho_s[i], axis=2)
        return np.sum(wq * S * rho[j] * inner, axis=1)

    def bridge_component(i, j):
        cum_p = np.cumsum(P[i])
        cross_low = float(np.dot(Q[j], cum_p - P[i]))
        cum_q = np.cumsum(Q[i])
        cross_up = float(np.dot(P[j], cum_q[-1] - cum_q))
        diag = math.fsum(lower_triangle(i, j) + lower_triangle(j, i))
        return cross_low + cross_up + diag

    comp = np.empty((2, 2))
    comp[0, 0] = bridge_component(0, 0)
    if same_measure:
        comp[:] = comp[0, 0]
    else:
        comp[1, 1] = bridge_component(1, 1)
        comp[0, 1] = comp[1, 0] = bridge_component(0, 1)

    if gamma.kind == "longrun" and gamma.truncation > 0:
        wmeas = [(wq * r).ravel() for r in rho]
        if gamma.mode == "analytic":
            a = _latent_coordinates(F.ravel(), S.ravel())
            lag = _mehler_lag_component(a, wmeas[0], wmeas[1],
                                        gamma.lag_corr, gamma.lag_weights)
        else:
            lag = _path_lag_component(flat, wmeas[0], wmeas[1], gamma.path,
                                      gamma.lag_weights, gamma.truncation)
        comp[0, 0] += lag[(0, 0)]
        comp[0, 1] += lag[(0, 1)]
        comp[1, 0] += lag[(0, 1)]
        comp[1, 1] += lag[(1, 1)]

    kind = gamma.kind if gamma.kind == "brownian_bridge" \
        else "%s-%s" % (gamma.kind, gamma.mode)
    return VarianceReport(sigma2=float(comp.sum()), components=comp,
                          resolution=E.size - 1, gamma_kind=kind)


# ---------------------------------------------------------------------------
# sampling the limit functional
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianPath:
    """One draw of the limit process restricted to a finite grid."""

    grid: np.ndarray
    values: np.ndarray
    seed: object


def _gram_factor(gamma, grid):
    """Symmetric factor L with L L^T = Gram(Gamma) + jitter.

    Indefinite Gram matrices are clipped to PSD only for path-estimated
    covariances (the perturbation norm is recorded on the model); analytic
    models failing the PSD tolerance raise instead.
    """
    G = gamma.gram(grid)
    G = 0.5 * (G + G.T)
    tr = float(np.trace(G))
    vals, vecs = np.linalg.eigh(G + (1e-12 * max(tr, 1.0)) * np.eye(G.shape[0]))
    floor = -1e-8 * max(tr, 1e-30)
    if vals.min() < floor:
        if gamma.mode != "path":
            raise NumericError(
                "covariance Gram matrix is not positive semidefinite: "
                "min eigenvalue %g, trace %g" % (vals.min(), tr))
        gamma.psd_repair = float(np.sqrt(np.sum(vals[vals < 0.0] ** 2)))
    clipped = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(clipped)[None, :]


def _default_grid(model):
    # The piecewise-linear path interpolant treats the process as fully
    # correlated within a cell; cells spanning many e-folds of cdf or
    # survival decay would inflate the variance of integrated functionals.
    return _refine_cells(model, model.quantile_grid(257, qlo=1e-5), efolds=0.2)


def gaussian_paths(gamma, grid=None, seed=0, replications=1):
    """Matrix of limit-process draws, one row per replication.

    Row r uses the derived seed (seed, r), so any prefix of the replication
    range reproduces identically regardless of batching.
    """
    if grid is None:
        grid = _default_grid(gamma.marginal)
    grid = np.asarray(grid, dtype=float)
    L = _gram_factor(gamma, grid)
    out = np.empty((int(replications), grid.size))
    for r in range(int(replications)):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        out[r] = L @ rng.standard_normal(grid.size)
    return out


def gaussian_path(gamma, grid=None, seed=0):
    """Single draw wrapped with its grid and seed."""
    if grid is None:
        grid = _default_grid(gamma.marginal)
    grid = np.asarray(grid, dtype=float)
    values = gaussian_paths(gamma, grid, seed, 1)[0]
    return GaussianPath(grid=grid, values=values, seed=seed)


def _hat_weights(grid, mu):
    """Masses of the tent basis on `grid` under `mu`: integrating the
    piecewise-linear interpolant against the measure is the dot product with
    these weights."""
    inside = mu.breaks[(mu.breaks > grid[0]) & (mu.breaks < grid[-1])]
    E = np.union1d(grid, inside)
    xq, wq = segment_nodes(E[:-1], E[1:], 2)
    flat = xq.ravel()
    wr = wq.ravel() * mu.density_at(flat)
    idx = np.clip(np.searchsorted(grid, flat, side="right") - 1,
                  0, grid.size - 2)
    tau = (flat - grid[idx]) / (grid[idx + 1] - grid[idx])
    w = np.zeros(grid.size)
    np.add.at(w, idx, wr * (1.0 - tau))
    np.add.at(w, idx + 1, wr * tau)
    if mu.atom_x.size:
        ax, am = mu.atom_x, mu.atom_m
        keep = (ax >= grid[0]) & (ax <= grid[-1])
        ai = np.clip(np.searchsorted(grid, ax[keep], side="right") - 1,
                     0, grid.size - 2)
        at = (ax[keep] - grid[ai]) / (grid[ai + 1] - grid[ai])
        np.add.at(w, ai, am[keep] * (1.0 - at))
        np.add.at(w, ai + 1, am[keep] * at)
    return w


def sample_limit(proj, gamma, grid=None, seed=0, replications=1):
    """Draws of the limit functional: minus the path integrated against both
    projection measures.

    The path enters through its piecewise-linear interpolant on the grid, so
    each draw is a fixed linear functional of the Gaussian vector; draws use
    per-replication derived seeds (seed, r) and a fixed reduction order.
    """
    if grid is None:
        grid = _default_grid(gamma.marginal)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0.0):
        raise PreconditionError("sampling grid must be strictly increasing "
                                "with at least two points")
    L = _gram_factor(gamma, grid)
    w = _hat_weights(grid, proj.dg1)
    w = w + (w if proj.dg2 is proj.dg1 else _hat_weights(grid, proj.dg2))
    v = -(L.T @ w)
    out = np.empty(int(replications))
    for r in range(int(replications)):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        out[r] = v @ rng.standard_normal(grid.size)
    return out


# ---------------------------------------------------------------------------
# mixing-rate admissibility arithmetic
# ---------------------------------------------------------------------------

_ALPHA_THETA_MIN = 1.0 + math.sqrt(2.0)
_ASSOCIATED_NU_MIN = (3.0 + math.sqrt(33.0)) / 2.0


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the mixing-rate arithmetic for one dependence regime.

    ``interval`` is the open interval of admissible weight exponents; it is
    empty when its upper end does not exceed ``lambda_prime``.  ``comparison``
    carries the two threshold expressions compared in the polynomially
    alpha-mixing regime when both are defined.
    """

    kind: str
    gamma: float
    lambda_prime: float
    passes: bool
    interval: tuple
    conditions: tuple
    comparison: dict = None


def _interval_upper_alpha(gamma, profile, conditions):
    if profile.geometric:
        conditions.append(("mixing rate", True,
                           "geometric decay dominates every polynomial rate"))
        return gamma / 2.0
    theta = profile.theta
    conditions.append(("theta > 1 + sqrt(2)", theta > _ALPHA_THETA_MIN,
                       "theta = %g, threshold %.6f" % (theta, _ALPHA_THETA_MIN)))
    return gamma * (theta - 1.0) / (2.0 * theta) if theta > 1.0 else -math.inf


def _interval_upper_beta(gamma, profile, conditions):
    if profile.geometric:
        conditions.append(("mixing rate", True,
                           "geometric decay admits every kappa > 1"))
        return gamma / 2.0
    theta = profile.theta
    kappa = profile.kappa
    if kappa is not None:
        ok = kappa > 1.0 and theta > kappa / (kappa - 1.0)
        conditions.append(("theta > kappa/(kappa-1) with kappa > 1", ok,
                           "theta = %g, kappa = %g" % (theta, kappa)))
        return gamma / (2.0 * kappa)
    conditions.append(("some kappa in (theta/(theta-1), inf)", theta > 1.0,
                       "theta = %g" % theta))
    return gamma * (theta - 1.0) / (2.0 * theta) if theta > 1.0 else -math.inf


def _interval_upper_rho(gamma, profile, conditions):
    summable = profile.geometric or (profile.theta is not None
                                     and profile.theta > 0.0)
    conditions.append(("sum of rho over dyadic lags finite", summable,
                       "geometric" if profile.geometric
                       else "polynomial theta = %s" % (profile.theta,)))
    if profile.epsilon is not None:
        conditions.append(("epsilon > 0", profile.epsilon > 0.0,
                           "epsilon = %g" % profile.epsilon))
        return gamma / (2.0 + profile.epsilon)
    return gamma / 2.0


def _interval_upper_associated(gamma, profile, conditions):
    if profile.geometric and profile.nu is None:
        conditions.append(("covariance decay", True,
                           "geometric decay admits every nu"))
        return gamma / 2.0
    nu = profile.nu
    conditions.append(("nu >= (3 + sqrt(33))/2", nu >= _ASSOCIATED_NU_MIN,
                       "nu = %g, threshold %.6f" % (nu, _ASSOCIATED_NU_MIN)))
    return gamma * (nu - 3.0) / (2.0 * nu) if nu > 3.0 else -math.inf


def admissibility(profile, gamma, lambda_prime):
    """Mixing-regime arithmetic: does a weight exponent lambda exist in
    (lambda_prime, upper(gamma, profile))?

    Pure arithmetic on the declared rates; reports every inequality checked,
    the open admissible interval (empty when inadmissible), and, for the
    polynomial alpha regime with gamma > 4, the two threshold expressions
    (3 gamma - 1)/(2 gamma - 8) and gamma/(gamma - 4) with the smaller side
    flagged.
    """
    gamma = float(gamma)
    lambda_prime = float(lambda_prime)
    if gamma <= 0.0 or lambda_prime < 0.0:
        raise ConfigError("admissibility needs gamma > 0 and lambda_prime >= 0")
    conditions = []
    kind = profile.kind
    if kind == "none":
        conditions.append(("mixing coefficients vanish beyond lag zero",
                           True, "independent coordinates"))
        hi = gamma / 2.0
    elif kind == "alpha":
        hi = _interval_upper_alpha(gamma, profile, conditions)
    elif kind == "beta":
        hi = _interval_upper_beta(gamma, profile, conditions)
    elif kind == "rho":
        hi = _interval_upper_rho(gamma, profile, conditions)
    elif kind == "associated":
        hi = _interval_upper_associated(gamma, profile, conditions)
    else:
        raise ConfigError("unknown mixing profile kind %r" % (kind,))
    nonempty = hi > lambda_prime
    detail = "upper endpoint %s vs lambda_prime %g" % (hi, lambda_prime)
    if kind == "alpha" and not profile.geometric and gamma > 2.0 * lambda_prime:
        detail += "; needs theta > gamma/(gamma - 2 lambda_prime) = %g" \
            % (gamma / (gamma - 2.0 * lambda_prime))
    conditions.append(("admissible interval nonempty", nonempty, detail))
    comparison = None
    if kind == "alpha" and math.isfinite(gamma) and gamma > 4.0:
        lhs = (3.0 * gamma - 1.0) / (2.0 * gamma - 8.0)
        rhs = gamma / (gamma - 4.0)
        comparison = {"(3g-1)/(2g-8)": lhs, "g/(g-4)": rhs,
                      "smaller": "g/(g-4)" if rhs < lhs else "(3g-1)/(2g-8)"}
    passes = nonempty and all(ok for _, ok, _ in conditions)
    return AdmissibilityReport(kind=kind, gamma=gamma,
                               lambda_prime=lambda_prime, passes=passes,
                               interval=(lambda_prime, hi),
                               conditions=tuple(conditions),
                               comparison=comparison)
