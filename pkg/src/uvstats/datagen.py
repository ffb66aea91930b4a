"""Strictly stationary sequence generators with declared marginals and
declared mixing profiles.

Every generator runs a stationary standard-Gaussian latent sequence through
the probability integral transform, so the coordinates carry the declared
marginal exactly and the dependence structure is inherited from the latent
correlations.  The latent families here (AR(1), stable ARMA) are
geometrically mixing, which dominates every polynomial rate the admissibility
arithmetic can ask for.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtr

from .errors import ConfigError

__all__ = [
    "MixingProfile",
    "DependentProcess",
    "iid_process",
    "ar1_process",
    "arma_process",
    "associated_process",
    "generate",
    "declared_profile",
]

_PROFILE_KINDS = ("alpha", "beta", "rho", "associated", "none")
_PROCESS_KINDS = ("iid", "gaussian_copula_ar1", "gaussian_copula_arma",
                  "associated_gaussian")

# smallest double in (0, 1) on both ends of the uniform before the quantile
# transform; keeps quantile() off the boundary where it may return +-inf
_U_LO = np.finfo(float).tiny
_U_HI = 1.0 - 2.0 ** -53


@dataclass(frozen=True)
class MixingProfile:
    """Declared decay of one dependence coefficient.

    ``geometric=True`` means the coefficient decays at a geometric rate, in
    which case the polynomial parameters are free (any exponent is
    dominated).  Otherwise ``theta`` is the polynomial decay exponent of the
    alpha/beta coefficient, ``kappa`` the moment-balance exponent of the
    beta regime, ``epsilon`` the slack in the rho regime, and ``nu`` the
    covariance decay exponent of the associated regime.
    """

    kind: str
    geometric: bool = False
    theta: float = None
    kappa: float = None
    epsilon: float = None
    nu: float = None

    def __post_init__(self):
        if self.kind not in _PROFILE_KINDS:
            raise ConfigError("unknown mixing profile kind %r (have: %s)"
                              % (self.kind, ", ".join(_PROFILE_KINDS)))
        for name in ("theta", "kappa", "epsilon", "nu"):
            value = getattr(self, name)
            if value is not None and not (value > 0.0):
                raise ConfigError("mixing profile parameter %s must be "
                                  "strictly positive, got %r" % (name, value))


def _psi_weights(ar, ma, tol=1e-14, max_len=100_000):
    """Causal moving-average weights of a stable ARMA recursion."""
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    if ar.size:
        roots = np.roots(np.concatenate([[1.0], -ar]))
        if roots.size and np.max(np.abs(roots)) >= 1.0 - 1e-10:
            raise ConfigError("latent ARMA recursion is not stable: "
                              "characteristic root of modulus %.6f"
                              % float(np.max(np.abs(roots))))
    num = np.concatenate([[1.0], ma])
    den = np.concatenate([[1.0], -ar])
    n = 64
    while True:
        impulse = np.zeros(n)
        impulse[0] = 1.0
        psi = lfilter(num, den, impulse)
        tail = np.abs(psi[-8:]).max()
        if tail <= tol * max(1.0, np.abs(psi).max()) or n >= max_len:
            break
        n *= 2
    keep = np.nonzero(np.abs(psi) > tol * max(1.0, np.abs(psi).max()))[0]
    return psi[: keep[-1] + 1] if keep.size else psi[:1]


@dataclass(frozen=True)
class DependentProcess:
    """A strictly stationary sequence: latent Gaussian dependence plus a
    quantile-transform marginal.

    Parameters
    ----------
    kind : str
        "iid", "gaussian_copula_ar1", "gaussian_copula_arma", or
        "associated_gaussian" (an AR(1) restricted to phi >= 0, whose
        nonnegative latent correlations make the sequence associated).
    marginal : DistributionModel
        Declared marginal of every coordinate.
    phi : float
        AR(1) latent coefficient, |phi| < 1.
    ar, ma : sequences of float
        Latent ARMA coefficients for the "gaussian_copula_arma" kind.
    seed : int
        Default seed used when ``generate`` is not given one.
    """

    kind: str
    marginal: object
    phi: float = 0.0
    ar: tuple = ()
    ma: tuple = ()
    seed: int = 0
    mixing_profile: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in _PROCESS_KINDS:
            raise ConfigError("unknown process kind %r (have: %s)"
                              % (self.kind, ", ".join(_PROCESS_KINDS)))
        object.__setattr__(self, "ar", tuple(float(a) for a in self.ar))
        object.__setattr__(self, "ma", tuple(float(m) for m in self.ma))
        if self.kind in ("gaussian_copula_ar1", "associated_gaussian"):
            if not abs(self.phi) < 1.0:
                raise ConfigError("AR(1) coefficient must satisfy |phi| < 1, "
                                  "got %r" % (self.phi,))
            if self.kind == "associated_gaussian" and self.phi < 0.0:
                raise ConfigError("associated sequences need nonnegative "
                                  "latent correlations: phi >= 0")
        if self.kind == "gaussian_copula_arma":
            if not (self.ar or self.ma):
                raise ConfigError("gaussian_copula_arma needs ar and/or ma "
                                  "coefficients")
            object.__setattr__(self, "_psi", _psi_weights(self.ar, self.ma))
        if self.mixing_profile is None:
            object.__setattr__(self, "mixing_profile", declared_profile(self))

    @property
    def strictly_stationary(self):
        """The generators initialize from the stationary law (AR(1)) or burn
        past the transient (ARMA), so the output law is shift-invariant."""
        return True

    def latent_correlation(self, lags):
        """Autocorrelation of the latent Gaussian sequence at integer lags."""
        lags = np.asarray(lags)
        if self.kind == "iid":
            return np.where(lags == 0, 1.0, 0.0).astype(float)
        if self.kind in ("gaussian_copula_ar1", "associated_gaussian"):
            return self.phi ** np.abs(lags).astype(float)
        psi = self._psi
        denom = float(psi @ psi)
        out = np.zeros(lags.shape, dtype=float)
        for i, k in np.ndenumerate(np.abs(lags)):
            k = int(k)
            if k < psi.size:
                out[i] = float(psi[: psi.size - k] @ psi[k:]) / denom
        return out


def iid_process(marginal, seed=0):
    return DependentProcess(kind="iid", marginal=marginal, seed=seed)


def ar1_process(marginal, phi, seed=0):
    return DependentProcess(kind="gaussian_copula_ar1", marginal=marginal,
                            phi=float(phi), seed=seed)


def arma_process(marginal, ar=(), ma=(), seed=0):
    return DependentProcess(kind="gaussian_copula_arma", marginal=marginal,
                            ar=tuple(ar), ma=tuple(ma), seed=seed)


def associated_process(marginal, phi, seed=0):
    return DependentProcess(kind="associated_gaussian", marginal=marginal,
                            phi=float(phi), seed=seed)


def _latent_sample(process, n, rng):
    if process.kind == "iid":
        return rng.standard_normal(n)
    if process.kind in ("gaussian_copula_ar1", "associated_gaussian"):
        phi = process.phi
        # z[0] drawn from the stationary law, then the exact recursion;
        # the same rng stream makes any shorter run a prefix of a longer one
        e = np.empty(n)
        e[0] = rng.standard_normal()
        if n > 1:
            e[1:] = math.sqrt(1.0 - phi * phi) * rng.standard_normal(n - 1)
        return lfilter([1.0], [1.0, -phi], e)
    psi = process._psi
    burn = psi.size + 64
    eta = rng.standard_normal(burn + n)
    z = lfilter(np.concatenate([[1.0], process.ma]),
                np.concatenate([[1.0], -np.asarray(process.ar)]), eta)
    return z[burn:] / math.sqrt(float(psi @ psi))


def generate(process, n, seed=None):
    """Sample of length n with the declared marginal and dependence.

    Deterministic given (process, seed); ``generate(p, n, s)`` is a prefix of
    ``generate(p, m, s)`` for m > n because the latent innovations are drawn
    in sequence order from one stream.  ``seed`` may be an int or a tuple of
    ints (derived replicate seeds); default is the process's own seed.
    """
    n = int(n)
    if n < 1:
        raise ConfigError("sample length must be at least 1, got %d" % n)
    if seed is None:
        seed = process.seed
    entropy = int(seed) if np.ndim(seed) == 0 else tuple(int(s) for s in seed)
    rng = np.random.default_rng(np.random.SeedSequence(entropy))
    z = _latent_sample(process, n, rng)
    u = np.clip(ndtr(z), _U_LO, _U_HI)
    return np.asarray(process.marginal.quantile(u), dtype=float)


def _geometric(kind, **extra):
    return MixingProfile(kind=kind, geometric=True, **extra)


def declared_profile(process):
    """Mixing profiles the generator guarantees, one per regime.

    Geometrically ergodic latent Gaussian chains are alpha-, beta- and
    rho-mixing at geometric rates; when every latent correlation is
    nonnegative the Gaussian sequence is associated with geometrically
    decaying covariances.  An i.i.d. process declares the trivial profile.
    """
    if process.kind == "iid":
        return (MixingProfile(kind="none"),)
    profiles = [_geometric("alpha"), _geometric("beta"), _geometric("rho")]
    if process.kind in ("gaussian_copula_ar1", "associated_gaussian"):
        if process.phi >= 0.0:
            profiles.append(_geometric("associated"))
    elif np.all(np.asarray(process._psi) >= 0.0):
        # nonnegative MA weights give nonnegative latent correlations
        profiles.append(_geometric("associated"))
    return tuple(profiles)
