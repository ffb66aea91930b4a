"""Analytic marginal distribution models.

Each model bundles the cdf/quantile/pdf with the declared data the hypothesis
checks need: the supremum moment exponent (``gamma_sup`` = sup of p with
E|X|^p finite, +inf when every moment exists, and *not attained* for power
tails), the tail family, continuity, and closed-form helpers used by the
kernel projections (mean, second moment, integrated survival function).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri, stdtr, stdtrit

from .errors import ConfigError, PreconditionError
from .gridfun import SignedMeasure, Tail


@dataclass(frozen=True)
class DistributionModel:
    """A univariate marginal with declared integrability data.

    ``tail_kind`` is "bounded" (compact support), "light" (decay faster than
    any power: gaussian/exponential families), or "power" with ``tail_index``
    the survival exponent a in P(|X| > x) ~ x^-a.
    """

    name: str
    cdf: callable
    quantile: callable
    pdf: callable = None
    sf: callable = None
    mean: float = None
    second_moment: float = None
    gamma_sup: float = math.inf
    tail_kind: str = "light"
    tail_index: float = math.inf
    is_continuous: bool = True
    lipschitz_cdf: float = None
    support: tuple = (-math.inf, math.inf)
    integrated_survival: callable = None
    params: dict = field(default_factory=dict)

    def sample_quantiles(self, u):
        return self.quantile(np.asarray(u, dtype=float))

    def survival(self, x):
        """P(X > x); keeps relative accuracy in the right tail when the
        family supplies an exact form instead of 1 - cdf."""
        if self.sf is not None:
            return self.sf(x)
        return 1.0 - np.asarray(self.cdf(x), dtype=float)

    @property
    def variance(self):
        if self.mean is None or self.second_moment is None:
            return None
        return self.second_moment - self.mean ** 2

    def quantile_grid(self, n, qlo=1e-7, qhi=None):
        """n quantile-spaced points; bounded support sides reach the support
        endpoint exactly instead of stopping at the quantile cut."""
        if qhi is None:
            qhi = 1.0 - qlo
        lo_q = 0.0 if math.isfinite(self.support[0]) else qlo
        hi_q = 1.0 if math.isfinite(self.support[1]) else qhi
        u = np.linspace(lo_q, hi_q, int(n))
        grid = self.quantile(u)
        # quantile maps may collapse in flat regions; enforce strict increase
        grid = np.maximum.accumulate(grid)
        keep = np.concatenate([[True], np.diff(grid) > 0.0])
        return grid[keep]

    def to_measure(self, grid_points=4001, qlo=1e-10):
        """The distribution as a measure: linearized density plus exact
        tail continuations beyond the grid."""
        if self.pdf is None:
            raise PreconditionError("model %r has no density" % self.name)
        grid = self.quantile_grid(grid_points, qlo)
        if grid.size < 2:
            c = float(grid[0])
            return SignedMeasure(np.array([c - 0.5, c + 0.5]),
                                 np.zeros(1), np.zeros(1),
                                 atom_x=np.array([c]), atom_m=np.array([1.0]))
        rho = np.asarray(self.pdf(grid), dtype=float)
        tl, tr = self.cdf_tails(grid[0], grid[-1])
        return SignedMeasure(grid, rho[:-1], rho[1:],
                             tail_left=tl.derivative_density(),
                             tail_right=tr.derivative_density())

    def cdf_tails(self, lo, hi):
        """Tail descriptors of the cdf beyond [lo, hi]."""
        if self.tail_kind == "bounded":
            left = Tail.constant(float(self.cdf(np.asarray(lo)))) \
                if lo > self.support[0] else Tail.constant(0.0)
            right = Tail.constant(float(self.cdf(np.asarray(hi)))) \
                if hi < self.support[1] else Tail.constant(1.0)
            # grids for bounded models span the support, so these are exact
            return left, right
        fl = float(self.cdf(np.asarray(lo, dtype=float)))
        fr = float(self.cdf(np.asarray(hi, dtype=float)))
        if self.tail_kind == "power":
            a = self.tail_index
            left = Tail(0.0, fl * (1.0 + abs(lo)) ** a, -a) \
                if not math.isfinite(self.support[0]) else Tail.constant(0.0)
            right = Tail(1.0, -(1.0 - fr) * (1.0 + abs(hi)) ** a, -a) \
                if not math.isfinite(self.support[1]) else Tail.constant(1.0)
            return left, right
        left = Tail(0.0, max(fl, 1e-300), -math.inf) \
            if not math.isfinite(self.support[0]) else Tail.constant(0.0)
        right = Tail(1.0, -max(1.0 - fr, 1e-300), -math.inf) \
            if not math.isfinite(self.support[1]) else Tail.constant(1.0)
        return left, right


def uniform(a=0.0, b=1.0):
    a, b = float(a), float(b)
    if not b > a:
        raise ConfigError("uniform needs b > a")
    width = b - a

    def isf(x):
        # integral_x^inf (1 - F): (b-x)^2 / (2 width) inside the support,
        # mean - x below it, zero above
        x = np.asarray(x, dtype=float)
        inside = (b - np.clip(x, a, b)) ** 2 / (2.0 * width)
        return np.where(x <= a, 0.5 * (a + b) - x,
                        np.where(x >= b, 0.0, inside))

    return DistributionModel(
        name="uniform",
        cdf=lambda x: np.clip((np.asarray(x, dtype=float) - a) / width, 0.0, 1.0),
        sf=lambda x: np.clip((b - np.asarray(x, dtype=float)) / width, 0.0, 1.0),
        quantile=lambda u: a + width * np.asarray(u, dtype=float),
        pdf=lambda x: np.where((np.asarray(x, dtype=float) >= a)
                               & (np.asarray(x, dtype=float) <= b), 1.0 / width, 0.0),
        mean=0.5 * (a + b),
        second_moment=(a * a + a * b + b * b) / 3.0,
        gamma_sup=math.inf,
        tail_kind="bounded",
        lipschitz_cdf=1.0 / width,
        support=(a, b),
        integrated_survival=isf,
        params={"a": a, "b": b},
    )


def normal(mu=0.0, sigma=1.0):
    mu, sigma = float(mu), float(sigma)
    if sigma <= 0.0:
        raise ConfigError("normal needs sigma > 0")

    def phi(x):
        z = (np.asarray(x, dtype=float) - mu) / sigma
        return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))

    def isf(x):
        z = (np.asarray(x, dtype=float) - mu) / sigma
        dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return sigma * (dens - z * (1.0 - ndtr(z)))

    return DistributionModel(
        name="normal",
        cdf=lambda x: ndtr((np.asarray(x, dtype=float) - mu) / sigma),
        sf=lambda x: ndtr(-(np.asarray(x, dtype=float) - mu) / sigma),
        quantile=lambda u: mu + sigma * ndtri(np.asarray(u, dtype=float)),
        pdf=phi,
        mean=mu,
        second_moment=mu * mu + sigma * sigma,
        gamma_sup=math.inf,
        tail_kind="light",
        lipschitz_cdf=1.0 / (sigma * math.sqrt(2.0 * math.pi)),
        support=(-math.inf, math.inf),
        integrated_survival=isf,
        params={"mu": mu, "sigma": sigma},
    )


def exponential(rate=1.0):
    rate = float(rate)
    if rate <= 0.0:
        raise ConfigError("exponential needs rate > 0")

    def isf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0.0, 1.0 / rate - x, np.exp(-rate * np.maximum(x, 0.0)) / rate)

    return DistributionModel(
        name="exponential",
        cdf=lambda x: np.where(np.asarray(x, dtype=float) <= 0.0, 0.0,
                               -np.expm1(-rate * np.maximum(np.asarray(x, dtype=float), 0.0))),
        sf=lambda x: np.exp(-rate * np.maximum(np.asarray(x, dtype=float), 0.0)),
        quantile=lambda u: -np.log1p(-np.asarray(u, dtype=float)) / rate,
        pdf=lambda x: np.where(np.asarray(x, dtype=float) < 0.0, 0.0,
                               rate * np.exp(-rate * np.maximum(np.asarray(x, dtype=float), 0.0))),
        mean=1.0 / rate,
        second_moment=2.0 / rate ** 2,
        gamma_sup=math.inf,
        tail_kind="light",
        lipschitz_cdf=rate,
        support=(0.0, math.inf),
        integrated_survival=isf,
        params={"rate": rate},
    )


def pareto(index, scale=1.0):
    """Survival (scale/x)^index for x >= scale; gamma_sup = index, not attained."""
    index, scale = float(index), float(scale)
    if index <= 0.0 or scale <= 0.0:
        raise ConfigError("pareto needs index > 0 and scale > 0")
    mean = index * scale / (index - 1.0) if index > 1.0 else None
    second = index * scale ** 2 / (index - 2.0) if index > 2.0 else None

    def isf(x):
        x = np.asarray(x, dtype=float)
        if mean is None:
            raise PreconditionError("pareto index <= 1 has no mean")
        above = scale ** index * np.maximum(x, scale) ** (1.0 - index) / (index - 1.0)
        return np.where(x < scale, mean - x, above)

    return DistributionModel(
        name="pareto",
        cdf=lambda x: np.where(np.asarray(x, dtype=float) < scale, 0.0,
                               1.0 - (scale / np.maximum(np.asarray(x, dtype=float), scale)) ** index),
        sf=lambda x: (scale / np.maximum(np.asarray(x, dtype=float), scale)) ** index,
        quantile=lambda u: scale * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / index),
        pdf=lambda x: np.where(np.asarray(x, dtype=float) < scale, 0.0,
                               index * scale ** index
                               * np.maximum(np.asarray(x, dtype=float), scale) ** (-index - 1.0)),
        mean=mean,
        second_moment=second,
        gamma_sup=index,
        tail_kind="power",
        tail_index=index,
        support=(scale, math.inf),
        integrated_survival=isf,
        params={"index": index, "scale": scale},
    )


def student_t(df):
    df = float(df)
    if df <= 0.0:
        raise ConfigError("student_t needs df > 0")
    mean = 0.0 if df > 1.0 else None
    second = df / (df - 2.0) if df > 2.0 else None

    def pdf(x):
        x = np.asarray(x, dtype=float)
        c = math.gamma((df + 1.0) / 2.0) / (math.sqrt(df * math.pi)
                                            * math.gamma(df / 2.0))
        return c * (1.0 + x * x / df) ** (-(df + 1.0) / 2.0)

    def isf(x):
        if df <= 1.0:
            raise PreconditionError("student_t df <= 1 has no mean")
        x = np.asarray(x, dtype=float)
        return (df + x * x) / (df - 1.0) * pdf(x) - x * (1.0 - stdtr(df, x))

    return DistributionModel(
        name="student_t",
        cdf=lambda x: stdtr(df, np.asarray(x, dtype=float)),
        sf=lambda x: stdtr(df, -np.asarray(x, dtype=float)),
        quantile=lambda u: stdtrit(df, np.asarray(u, dtype=float)),
        pdf=pdf,
        mean=mean,
        second_moment=second,
        gamma_sup=df,
        tail_kind="power",
        tail_index=df,
        support=(-math.inf, math.inf),
        integrated_survival=isf if mean is not None else None,
        params={"df": df},
    )


def point_mass(c=0.0):
    """Degenerate distribution at c; projections stay well defined."""
    c = float(c)
    return DistributionModel(
        name="point_mass",
        cdf=lambda x: np.where(np.asarray(x, dtype=float) >= c, 1.0, 0.0),
        quantile=lambda u: np.full_like(np.asarray(u, dtype=float), c),
        mean=c,
        second_moment=c * c,
        gamma_sup=math.inf,
        tail_kind="bounded",
        is_continuous=False,
        support=(c, c),
        integrated_survival=lambda x: np.maximum(c - np.asarray(x, dtype=float), 0.0),
        params={"c": c},
    )


_BUILDERS = {
    "uniform": uniform,
    "normal": normal,
    "exponential": exponential,
    "pareto": pareto,
    "student_t": student_t,
    "point_mass": point_mass,
}


def model_from_name(name, **params):
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError("unknown marginal %r (have: %s)"
                          % (name, ", ".join(sorted(_BUILDERS)))) from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ConfigError("bad parameters for marginal %r: %s" % (name, exc)) from None
