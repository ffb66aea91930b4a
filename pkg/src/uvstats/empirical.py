"""Empirical and smoothed empirical distribution functions, and the weighted
empirical process built from them.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import PreconditionError
from .gridfun import GridFunction, SignedMeasure, Tail


class EmpiricalCdf:
    """Right-continuous empirical distribution function of a sample.

    Ties are merged into single jump points with proportional masses.
    """

    def __init__(self, sample):
        sample = np.asarray(sample, dtype=float).ravel()
        if sample.size == 0:
            raise ValueError("empty sample")
        if not np.all(np.isfinite(sample)):
            raise ValueError("sample must be finite")
        self.sample = np.sort(sample)
        self.n = sample.size
        self.points, counts = np.unique(self.sample, return_counts=True)
        self.masses = counts / self.n
        self._cum = np.cumsum(self.masses)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="right")
        out = np.where(idx > 0, self._cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def to_gridfunction(self):
        vals = self._cum
        lefts = np.concatenate([[0.0], self._cum[:-1]])
        return GridFunction(self.points, vals, lefts,
                            tail_left=Tail.constant(0.0),
                            tail_right=Tail.constant(1.0),
                            nondecreasing=True)

    def to_measure(self):
        pts = self.points
        breaks = pts if pts.size > 1 else np.array([pts[0] - 0.5, pts[0] + 0.5])
        nseg = breaks.size - 1
        return SignedMeasure(breaks, np.zeros(nseg), np.zeros(nseg),
                             atom_x=pts, atom_m=self.masses)


class SmoothedCdf:
    """Heat-semigroup smoothing of an empirical cdf.

    The smoother at bandwidth epsilon convolves with a centred gaussian of
    standard deviation sqrt(2 * epsilon); epsilon = 0 reproduces the
    empirical cdf exactly (same object semantics, no gaussian evaluation).
    """

    def __init__(self, base, epsilon):
        if not isinstance(base, EmpiricalCdf):
            base = EmpiricalCdf(base)
        epsilon = float(epsilon)
        if epsilon < 0.0 or not math.isfinite(epsilon):
            raise PreconditionError("bandwidth must be finite and >= 0")
        self.base = base
        self.epsilon = epsilon
        self.scale = math.sqrt(2.0 * epsilon)

    @property
    def n(self):
        return self.base.n

    def __call__(self, x):
        if self.epsilon == 0.0:
            return self.base(x)
        x = np.asarray(x, dtype=float)
        z = (np.atleast_1d(x)[:, None] - self.base.points[None, :]) / self.scale
        out = ndtr(z) @ self.base.masses
        return float(out[0]) if x.ndim == 0 else out

    def density(self, x):
        if self.epsilon == 0.0:
            raise PreconditionError("epsilon = 0 has no density")
        x = np.asarray(x, dtype=float)
        z = (np.atleast_1d(x)[:, None] - self.base.points[None, :]) / self.scale
        dens = np.exp(-0.5 * z * z) / (self.scale * math.sqrt(2.0 * math.pi))
        out = dens @ self.base.masses
        return float(out[0]) if x.ndim == 0 else out

    def to_gridfunction(self, pad_sds=8.0, points_per_atom=8, max_points=4097):
        """Piecewise-linear sampling on a grid covering all gaussians."""
        if self.epsilon == 0.0:
            return self.base.to_gridfunction()
        lo = self.base.points[0] - pad_sds * self.scale
        hi = self.base.points[-1] + pad_sds * self.scale
        n = min(max(self.base.points.size * points_per_atom, 257), max_points)
        grid = np.union1d(np.linspace(lo, hi, n), self.base.points)
        return GridFunction(grid, self(grid),
                            tail_left=Tail(0.0, 1e-300, -math.inf),
                            tail_right=Tail(1.0, -1e-300, -math.inf),
                            nondecreasing=True)


def empirical_cdf(sample):
    return EmpiricalCdf(sample)


def smoothed_cdf(sample, epsilon):
    return SmoothedCdf(EmpiricalCdf(sample), epsilon)


def sample_from_file(path):
    """One value per line; blank lines and '#' comments ignored."""
    data = np.loadtxt(path, comments="#", ndmin=1)
    if data.ndim != 1:
        raise ValueError("sample file must contain one value per line")
    return data


@dataclass(frozen=True)
class BandwidthCheck:
    """The smoothing admissibility quantity sqrt(n) * eps^((gamma-lam)/(2 gamma))."""

    n: int
    epsilon: float
    gamma: float
    lam: float
    value: float
    threshold: float
    passes: bool


def bandwidth_admissible(n, epsilon, gamma, lam, threshold=1.0):
    """Evaluate the smoothed-estimator bandwidth condition at one n.

    The CLT for the smoothed plug-in estimator needs
    sqrt(n) * epsilon_n ** ((gamma - lam) / (2 gamma)) -> 0 along the
    schedule; this evaluates the quantity (gamma = +inf gives exponent 1/2)
    and compares against the threshold.  Requires gamma > lam > 0.
    """
    n = int(n)
    epsilon = float(epsilon)
    if n <= 0:
        raise PreconditionError("n must be positive")
    if epsilon < 0.0:
        raise PreconditionError("epsilon must be >= 0")
    if not (gamma > lam > 0.0):
        raise PreconditionError("need gamma > lam > 0 (got gamma=%r, lam=%r)"
                                % (gamma, lam))
    expo = 0.5 if math.isinf(gamma) else (gamma - lam) / (2.0 * gamma)
    value = math.sqrt(n) * epsilon ** expo if epsilon > 0.0 else 0.0
    return BandwidthCheck(n, epsilon, gamma, lam, value, threshold,
                          value <= threshold)


def _clustered_background(model, n, qlo=1e-10):
    """Quantile background grid with cubic clustering toward both ends.

    Piecewise-linear interpolation of the scaled empirical discrepancy has
    chord error proportional to cell_width^3 * F''; clustering the grid like
    t^3 near the probability endpoints roughly equidistributes that error
    for light and power tails alike.  Bounded support sides reach the
    support endpoint exactly.
    """
    a = 0.0 if math.isfinite(model.support[0]) else qlo ** (1.0 / 3.0)
    b = 1.0 if math.isfinite(model.support[1]) else 1.0 - qlo ** (1.0 / 3.0)
    s = np.linspace(a, b, int(n))
    s3 = s ** 3
    u = s3 / (s3 + (1.0 - s) ** 3)
    grid = np.asarray(model.quantile(u), dtype=float)
    grid = np.maximum.accumulate(grid)
    keep = np.concatenate([[True], np.diff(grid) > 0.0])
    return grid[keep]


def weighted_empirical_process(sample, model, lam=0.0,
                               background_points=4097):
    """sqrt(n) (F_hat_n - F) as a GridFunction.

    The grid is the union of the sample's jump points and a clustered
    quantile background grid of the model, so the weighted sup-norm is exact
    at every jump (value and left limit) and the function is well sampled
    between jumps and into the tails.  The object does not depend on
    ``lam``; feed it to ``weighted_norm`` at any exponent.
    """
    if lam < 0.0:
        raise PreconditionError("lam must be >= 0")
    edf = EmpiricalCdf(sample)
    n = edf.n
    root_n = math.sqrt(n)
    background = _clustered_background(model, background_points)
    grid = np.union1d(edf.points, background)
    F = model.cdf(grid)
    Fn = edf(grid)
    values = root_n * (Fn - F)
    lefts = values.copy()
    jump_pos = np.searchsorted(grid, edf.points)
    prev = np.concatenate([[0.0], edf._cum[:-1]])
    lefts[jump_pos] = root_n * (prev - F[jump_pos])
    tl_F, tr_F = model.cdf_tails(grid[0], grid[-1])
    # left tail: sqrt(n) (0 - F(x)); right tail: sqrt(n) (1 - F(x))
    tail_left = Tail(-root_n * tl_F.offset, -root_n * tl_F.coef, tl_F.exponent)
    tail_right = Tail(root_n * (1.0 - tr_F.offset), -root_n * tr_F.coef,
                      tr_F.exponent)
    return GridFunction(grid, values, lefts, tail_left, tail_right)
