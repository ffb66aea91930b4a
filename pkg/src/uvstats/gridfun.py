"""Calculus for cadlag functions of locally bounded variation.

A :class:`GridFunction` is piecewise linear between grid points, with an
explicit left limit stored at every grid point (so jumps are first-class) and
parametric tails ``offset + coef * (1 + |x|)**exponent`` governing behaviour
beyond the grid span.  A :class:`SignedMeasure` pairs point masses with a
piecewise-linear density and tail densities of the same parametric form.

On these representations the classical identities of BV calculus -- Jordan
decomposition into monotone parts, Lebesgue-Stieltjes integration by parts
with left limits at shared jumps, weighted sup-norms -- hold exactly up to
floating-point roundoff, which is what the tests assert.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, PreconditionError
from .quadrature import segment_nodes

_MONOTONE_TOL = 1e-12


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tail:
    """Parametric tail ``f(x) = offset + coef * s(x) * (1 + |x|)**exponent``
    with ``s(x) = sign(x)`` when ``odd`` else 1.

    ``exponent = -inf`` encodes decay faster than any power (the term
    evaluates to zero beyond the grid and never obstructs a tail-exponent
    convergence test).  A constant tail is ``coef = 0``.  Odd tails arise by
    differentiating even ones (d/dx (1+|x|)**q carries a sign(x) factor);
    the flag keeps the formula valid when a tail region crosses zero.
    """

    offset: float = 0.0
    coef: float = 0.0
    exponent: float = 0.0
    odd: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.offset) and math.isfinite(self.coef)):
            raise ValueError("tail offset/coef must be finite")
        if math.isnan(self.exponent) or self.exponent == math.inf:
            raise ValueError("tail exponent must be real or -inf")
        # fold a zero-exponent even power term into the offset so that sign
        # tests on (offset, coef) are unambiguous
        if self.exponent == 0.0 and self.coef != 0.0 and not self.odd:
            object.__setattr__(self, "offset", self.offset + self.coef)
            object.__setattr__(self, "coef", 0.0)
        if self.coef == 0.0:
            object.__setattr__(self, "exponent", 0.0)
            object.__setattr__(self, "odd", False)

    @classmethod
    def constant(cls, value):
        return cls(offset=float(value))

    @classmethod
    def zero(cls):
        return cls()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.coef == 0.0:
            return np.full_like(x, self.offset)
        s = np.sign(x) if self.odd else 1.0
        if self.exponent == -math.inf:
            out = np.full_like(x, self.offset)
            out[np.abs(x) == 0.0] += self.coef if not self.odd else 0.0
            return out
        return self.offset + self.coef * s * (1.0 + np.abs(x)) ** self.exponent

    def limit(self, side="right"):
        """Limit as x -> +-infinity on the given side; +-inf when growing."""
        if self.coef == 0.0 or self.exponent < 0.0:
            return self.offset
        c = -self.coef if (self.odd and side == "left") else self.coef
        return math.copysign(math.inf, c)

    def derivative_density(self):
        """Tail of the induced density d f / dx, valid on both half-lines."""
        if self.odd:
            raise PreconditionError("cannot differentiate an odd tail")
        if self.coef == 0.0:
            return Tail.zero()
        if self.exponent == -math.inf:
            return Tail(0.0, self.coef, -math.inf, odd=True)
        return Tail(0.0, self.coef * self.exponent, self.exponent - 1.0,
                    odd=True)

    def is_zero(self):
        return self.offset == 0.0 and self.coef == 0.0


def _tail_power_terms(tail):
    """The tail as a list of (coef, exponent, odd) power terms in (1+|x|)."""
    terms = []
    if tail.offset != 0.0:
        terms.append((tail.offset, 0.0, False))
    if tail.coef != 0.0:
        terms.append((tail.coef, tail.exponent, tail.odd))
    return terms


def _power_halfline_integral(coef, exponent, cut, side, odd=False):
    """integral of one tail power term over (cut, inf) or (-inf, cut).

    Returns the signed value; raises DivergenceError when exponent >= -1 with
    a nonzero coefficient.  The cut may sit on either side of zero (the
    integrand is not monotone along the half-line then).
    """
    if coef == 0.0 or exponent == -math.inf:
        return 0.0
    if exponent >= -1.0:
        raise DivergenceError(
            "tail integral diverges (exponent %g >= -1)" % exponent)
    inner = 0.0
    if (side == "right" and cut < 0.0) or (side == "left" and cut > 0.0):
        inner = _power_segment_integral(coef, exponent,
                                        min(cut, 0.0), max(cut, 0.0), odd)
        cut = 0.0
    lam = 1.0 + abs(cut)
    outer = coef * lam ** (exponent + 1.0) / (-1.0 - exponent)
    if odd and side == "left":
        outer = -outer
    return inner + outer


def _power_segment_integral(coef, exponent, a, b, odd=False):
    """integral of one tail power term over the finite interval [a, b]."""
    if coef == 0.0 or a == b:
        return 0.0
    if exponent == -math.inf:
        return 0.0

    def anti(x):
        # continuous antiderivative on all of R, normalized to anti(0) = 0
        # (expm1/log1p keep precision when the interval is short or near 0);
        # an even integrand has an odd antiderivative and vice versa
        if exponent == -1.0:
            val = math.log1p(abs(x))
        else:
            val = math.expm1((exponent + 1.0) * math.log1p(abs(x))) \
                / (exponent + 1.0)
        return val if odd else math.copysign(val, x)

    return coef * (anti(b) - anti(a))


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------

class GridFunction:
    """Cadlag, piecewise-linear function with explicit left limits.

    Parameters
    ----------
    x : array
        Strictly increasing grid.
    values : array
        f(x_i), the right-continuous value at each grid point.
    left_limits : array, optional
        f(x_i-).  Defaults to a continuous function (left limit equals the
        incoming segment value, no jumps).
    tail_left, tail_right : Tail, optional
        Behaviour beyond the grid span; default constant continuation of the
        boundary values.
    nondecreasing : bool
        Declares (and validates) monotonicity; required by ``measure_of``.

    On the open segment (x_i, x_{i+1}) the function runs linearly from
    values[i] to left_limits[i+1], so the data determine the function
    everywhere and jumps live only at grid points.
    """

    def __init__(self, x, values, left_limits=None, tail_left=None,
                 tail_right=None, nondecreasing=False):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if x.ndim != 1 or x.shape != values.shape:
            raise ValueError("x and values must be 1-d arrays of equal length")
        if x.size == 0:
            raise ValueError("empty grid")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(values)):
            raise ValueError("grid and values must be finite")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if left_limits is None:
            left_limits = values.copy()
        else:
            left_limits = np.atleast_1d(np.asarray(left_limits, dtype=float))
            if left_limits.shape != values.shape:
                raise ValueError("left_limits shape mismatch")
            if not np.all(np.isfinite(left_limits)):
                raise ValueError("left_limits must be finite")
        self.x = x
        self.values = values
        self.left_limits = left_limits
        self.tail_left = Tail.constant(left_limits[0]) if tail_left is None else tail_left
        self.tail_right = Tail.constant(values[-1]) if tail_right is None else tail_right
        self.nondecreasing = bool(nondecreasing)
        if self.nondecreasing:
            scale = 1.0 + float(np.max(np.abs(values)))
            tol = _MONOTONE_TOL * scale
            bad = np.any(self.jumps() < -tol)
            if x.size > 1:
                bad = bad or np.any(left_limits[1:] - values[:-1] < -tol)
            if bad:
                raise PreconditionError("function declared nondecreasing is not")

    # -- basic structure ---------------------------------------------------

    @property
    def span(self):
        return float(self.x[0]), float(self.x[-1])

    def jumps(self):
        return self.values - self.left_limits

    def slopes(self):
        """Per-segment slope of the linear interior."""
        if self.x.size < 2:
            return np.empty(0)
        dx = np.diff(self.x)
        return (self.left_limits[1:] - self.values[:-1]) / dx

    @classmethod
    def step(cls, x, values, base=0.0, **kw):
        """Pure jump function: flat segments, left_limits shifted by one."""
        values = np.atleast_1d(np.asarray(values, dtype=float))
        left = np.concatenate([[base], values[:-1]])
        kw.setdefault("tail_left", Tail.constant(base))
        return cls(x, values, left_limits=left, **kw)

    @classmethod
    def from_samples(cls, x, f, **kw):
        """Continuous piecewise-linear interpolant of callable or values."""
        x = np.asarray(x, dtype=float)
        vals = f(x) if callable(f) else np.asarray(f, dtype=float)
        return cls(x, vals, **kw)

    # -- evaluation --------------------------------------------------------

    def _eval(self, x, left):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        below = x < self.x[0]
        above = x > self.x[-1]
        core = ~(below | above)
        if below.any():
            out[below] = self.tail_left(x[below])
        if above.any():
            out[above] = self.tail_right(x[above])
        if core.any():
            xc = x[core]
            idx = np.searchsorted(self.x, xc, side="right") - 1
            res = np.empty_like(xc)
            on_node = xc == self.x[idx]
            src = self.left_limits if left else self.values
            res[on_node] = src[idx[on_node]]
            seg = ~on_node
            if seg.any():
                i = idx[seg]
                t = (xc[seg] - self.x[i]) / (self.x[i + 1] - self.x[i])
                res[seg] = self.values[i] * (1.0 - t) + self.left_limits[i + 1] * t
            out[core] = res
        return float(out[0]) if scalar else out

    def __call__(self, x):
        return self._eval(x, left=False)

    def left(self, x):
        """Left limit f(x-); differs from f(x) only at jump points."""
        return self._eval(x, left=True)

    # -- algebra -----------------------------------------------------------

    def insert_points(self, points):
        """Refine the grid; values at inserted points are the interpolant's."""
        points = np.atleast_1d(np.asarray(points, dtype=float))
        lo, hi = self.span
        if np.any(points < lo) or np.any(points > hi):
            raise PreconditionError("inserted points must lie within the span")
        new = np.setdiff1d(points, self.x)
        if new.size == 0:
            return self
        grid = np.union1d(self.x, new)
        values = np.empty_like(grid)
        lefts = np.empty_like(grid)
        old = np.isin(grid, self.x)
        pos = np.searchsorted(self.x, grid[old])
        values[old] = self.values[pos]
        lefts[old] = self.left_limits[pos]
        values[~old] = self(grid[~old])
        lefts[~old] = values[~old]
        return GridFunction(grid, values, lefts, self.tail_left,
                            self.tail_right, self.nondecreasing)

    def _binary(self, other, op):
        if np.isscalar(other) or isinstance(other, float) or isinstance(other, int):
            c = float(other)
            tl, tr = self.tail_left, self.tail_right
            if op in ("add", "sub"):
                s = 1.0 if op == "add" else -1.0
                return GridFunction(self.x, self.values + s * c,
                                    self.left_limits + s * c,
                                    Tail(tl.offset + s * c, tl.coef, tl.exponent),
                                    Tail(tr.offset + s * c, tr.coef, tr.exponent))
            if op == "mul":
                return GridFunction(self.x, self.values * c, self.left_limits * c,
                                    Tail(tl.offset * c, tl.coef * c, tl.exponent),
                                    Tail(tr.offset * c, tr.coef * c, tr.exponent))
        if not isinstance(other, GridFunction):
            return NotImplemented
        if op == "mul":
            raise NotImplementedError("products of grid functions are not closed "
                                      "under the piecewise-linear representation")
        grid = np.union1d(self.x, other.x)
        s = 1.0 if op == "add" else -1.0
        va = _values_on(self, grid)
        vb = _values_on(other, grid)
        la = _lefts_on(self, grid)
        lb = _lefts_on(other, grid)
        tl = _combine_tails(self.tail_left, other.tail_left, s)
        tr = _combine_tails(self.tail_right, other.tail_right, s)
        return GridFunction(grid, va + s * vb, la + s * lb, tl, tr)

    def __add__(self, other):
        return self._binary(other, "add")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, "sub")

    def __mul__(self, other):
        return self._binary(other, "mul")

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


def _values_on(psi, grid):
    out = psi(grid)
    return out


def _lefts_on(psi, grid):
    return psi.left(grid)


def _combine_tails(a, b, s):
    offset = a.offset + s * b.offset
    terms = []
    if a.coef != 0.0:
        terms.append((a.coef, a.exponent, a.odd))
    if b.coef != 0.0:
        terms.append((s * b.coef, b.exponent, b.odd))
    if not terms:
        return Tail(offset)
    if len(terms) == 1:
        return Tail(offset, *terms[0])
    if terms[0][1:] == terms[1][1:]:
        return Tail(offset, terms[0][0] + terms[1][0], *terms[0][1:])
    raise PreconditionError("cannot combine tails with different exponents "
                            "exactly; refine or supply explicit tails")


def weight_function(grid, exponent):
    """The weight (1+|x|)**exponent as a GridFunction on the given grid."""
    grid = np.asarray(grid, dtype=float)
    vals = (1.0 + np.abs(grid)) ** exponent
    return GridFunction(grid, vals,
                        tail_left=Tail(0.0, 1.0, exponent),
                        tail_right=Tail(0.0, 1.0, exponent))


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedNorm:
    """Sup-norm weighted by (1+|x|)**exponent.

    Positive exponents penalize growth (the norm of an unbounded function can
    still be finite after multiplying by a decaying weight when exponent < 0,
    which is how membership in the weighted spaces is tested).
    """

    exponent: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.exponent):
            raise ValueError("norm exponent must be finite")

    def weight(self, x):
        return (1.0 + np.abs(np.asarray(x, dtype=float))) ** self.exponent


def _segment_critical_points(a, b, alpha, beta, lam):
    """Interior critical points of |alpha + beta*x| * (1+|x|)**lam on [a, b]."""
    pts = []
    if beta != 0.0:
        z = -alpha / beta
        if a < z < b:
            pts.append(z)
    if lam == 0.0 or beta == 0.0:
        return pts
    for s, lo, hi in (((-1.0), a, min(b, 0.0)), ((1.0), max(a, 0.0), b)):
        if lo >= hi:
            continue
        denom = s * beta * (1.0 + lam)
        if denom == 0.0:
            continue
        xstar = -(beta + lam * s * alpha) / denom
        if lo < xstar < hi:
            pts.append(xstar)
    return pts


def _tail_sup(tail, lam, cut):
    """sup of |tail(x)| * (1+|x|)**lam over one tail region |x| >= |cut|.

    Returns math.inf when the product diverges.  Boundary values are assumed
    already covered by the grid candidates, so only interior/limit candidates
    are returned.
    """
    o, c, q = tail.offset, tail.coef, tail.exponent
    if o == 0.0 and c == 0.0:
        return 0.0
    cands = [abs(tail(cut)) * (1.0 + abs(cut)) ** lam]
    e1 = lam if o != 0.0 else -math.inf
    e2 = (q + lam) if c != 0.0 else -math.inf
    if e1 > 0.0 or e2 > 0.0:
        return math.inf
    if e1 == 0.0 and e2 < 0.0:
        cands.append(abs(o))
    if e2 == 0.0 and e1 < 0.0:
        cands.append(abs(c))
    # interior critical point of o*L**lam + c*L**(q+lam) in L = 1+|x|
    if o != 0.0 and c != 0.0 and q != 0.0 and math.isfinite(q):
        ratio = -(o * lam) / (c * (q + lam)) if (q + lam) != 0.0 else 0.0
        if ratio > 0.0:
            lam_star = ratio ** (1.0 / q)
            if lam_star > 1.0 + abs(cut):
                xs = lam_star - 1.0
                cands.append(abs(o + c * lam_star ** q) * lam_star ** lam)
    return max(cands)


def weighted_norm(psi, norm):
    """``sup_x |psi(x)| * (1+|x|)**exponent`` over the whole line.

    Evaluates all grid values and left limits, interior critical points of
    each linear segment against the weight, and the parametric tails.
    Returns ``math.inf`` when a tail makes the product diverge (a legitimate
    return, not an error).
    """
    if isinstance(norm, (int, float)):
        norm = WeightedNorm(float(norm))
    lam = norm.exponent
    w = norm.weight(psi.x)
    best = float(np.max(np.abs(psi.values) * w))
    best = max(best, float(np.max(np.abs(psi.left_limits) * w)))
    if psi.x.size > 1:
        slopes = psi.slopes()
        for i in range(psi.x.size - 1):
            a, b = psi.x[i], psi.x[i + 1]
            beta = slopes[i]
            alpha = psi.values[i] - beta * a
            for xs in _segment_critical_points(a, b, alpha, beta, lam):
                best = max(best, abs(alpha + beta * xs) * (1.0 + abs(xs)) ** lam)
    for tail, cut in ((psi.tail_left, psi.x[0]), (psi.tail_right, psi.x[-1])):
        s = _tail_sup(tail, lam, cut)
        if s == math.inf:
            return math.inf
        best = max(best, s)
    return best


# ---------------------------------------------------------------------------
# Jordan decomposition
# ---------------------------------------------------------------------------

def jordan_decompose(psi, c):
    """Split psi into nondecreasing parts vanishing at ``c``.

    Returns ``(plus, minus)`` with ``psi(x) = psi(c) + plus(x) - minus(x)``,
    ``plus(c) = minus(c) = 0``, ``plus`` accumulating the positive variation
    of psi from ``c`` and ``minus`` the negative variation.  The centre must
    lie within the grid span.
    """
    lo, hi = psi.span
    if not (lo <= c <= hi):
        raise PreconditionError("centre %r outside grid span [%r, %r]"
                                % (c, lo, hi))
    psi = psi.insert_points([c])
    n = psi.x.size
    jumps = psi.jumps()
    seg = psi.left_limits[1:] - psi.values[:-1] if n > 1 else np.empty(0)

    # cumulative positive/negative variation before (ll) and after (v) the
    # jump at each node, walking the alternating jump/segment move sequence
    p_ll = np.empty(n)
    p_v = np.empty(n)
    m_ll = np.empty(n)
    m_v = np.empty(n)
    p_ll[0] = m_ll[0] = 0.0
    p_v[0] = max(jumps[0], 0.0)
    m_v[0] = max(-jumps[0], 0.0)
    for i in range(n - 1):
        p_ll[i + 1] = p_v[i] + max(seg[i], 0.0)
        m_ll[i + 1] = m_v[i] + max(-seg[i], 0.0)
        p_v[i + 1] = p_ll[i + 1] + max(jumps[i + 1], 0.0)
        m_v[i + 1] = m_ll[i + 1] + max(-jumps[i + 1], 0.0)

    ic = int(np.searchsorted(psi.x, c))
    plus_tails = _variation_tails(psi, p_v, p_ll, positive=True)
    minus_tails = _variation_tails(psi, m_v, m_ll, positive=False)
    plus = GridFunction(psi.x, p_v - p_v[ic], p_ll - p_v[ic],
                        tail_left=_shift_tail(plus_tails[0], -p_v[ic]),
                        tail_right=_shift_tail(plus_tails[1], -p_v[ic]),
                        nondecreasing=True)
    minus = GridFunction(psi.x, m_v - m_v[ic], m_ll - m_v[ic],
                         tail_left=_shift_tail(minus_tails[0], -m_v[ic]),
                         tail_right=_shift_tail(minus_tails[1], -m_v[ic]),
                         nondecreasing=True)
    return plus, minus


def _shift_tail(tail, delta):
    return Tail(tail.offset + delta, tail.coef, tail.exponent, tail.odd)


def _variation_tails(psi, v, ll, positive):
    """Tails of the cumulative positive (or negative) variation of psi."""
    out = []
    for side in ("left", "right"):
        tail = psi.tail_left if side == "left" else psi.tail_right
        o, c, q = tail.offset, tail.coef, tail.exponent
        if c == 0.0 or q == 0.0:
            rising = False
            varies = False
        else:
            slope_sign = c * q if side == "right" else -c * q
            if q == -math.inf:
                slope_sign = -c if side == "right" else c
                # (1+|x|)**q decreasing in |x|: on the right the tail value
                # moves from psi(x_N) toward offset, i.e. falls when c > 0
            rising = slope_sign > 0.0
            varies = True
        if side == "left":
            base = ll[0]
            anchor = psi.left_limits[0]
            # plus(x) = base - V+( [x, x0) ): rising tail contributes
            if varies and (rising == positive):
                out.append(Tail(base - anchor + o, c, q) if positive
                           else Tail(base + anchor - o, -c, q))
            else:
                out.append(Tail.constant(base))
        else:
            base = v[-1]
            anchor = psi.values[-1]
            if varies and (rising == positive):
                out.append(Tail(base - anchor + o, c, q) if positive
                           else Tail(base + anchor - o, -c, q))
            else:
                out.append(Tail.constant(base))
    return out


# ---------------------------------------------------------------------------
# signed measures
# ---------------------------------------------------------------------------

@dataclass
class MeasureComponent:
    """One nonnegative component: atoms plus piecewise-linear density.

    The density on segment (breaks[i], breaks[i+1]) interpolates linearly
    from dens_l[i] to dens_r[i]; discontinuities at breaks are allowed.
    """

    breaks: np.ndarray
    dens_l: np.ndarray
    dens_r: np.ndarray
    atom_x: np.ndarray
    atom_m: np.ndarray
    tail_left: Tail = field(default_factory=Tail.zero)
    tail_right: Tail = field(default_factory=Tail.zero)


class SignedMeasure:
    """Atoms plus piecewise-linear density with parametric tail densities.

    The positive and negative parts are split eagerly (zero crossings of the
    density become extra breakpoints) and stored; the signed data are kept as
    the primary representation for arithmetic.
    """

    def __init__(self, breaks, dens_l=None, dens_r=None, atom_x=None,
                 atom_m=None, tail_left=None, tail_right=None):
        breaks = np.atleast_1d(np.asarray(breaks, dtype=float))
        if breaks.size == 0:
            raise ValueError("measure needs at least one break point")
        if np.any(np.diff(breaks) <= 0.0):
            raise ValueError("breaks must be strictly increasing")
        nseg = breaks.size - 1
        dens_l = np.zeros(nseg) if dens_l is None else np.asarray(dens_l, dtype=float)
        dens_r = np.zeros(nseg) if dens_r is None else np.asarray(dens_r, dtype=float)
        if dens_l.shape != (nseg,) or dens_r.shape != (nseg,):
            raise ValueError("density arrays must have one entry per segment")
        atom_x = np.empty(0) if atom_x is None else np.atleast_1d(np.asarray(atom_x, dtype=float))
        atom_m = np.empty(0) if atom_m is None else np.atleast_1d(np.asarray(atom_m, dtype=float))
        if atom_x.shape != atom_m.shape:
            raise ValueError("atom arrays must match")
        keep = atom_m != 0.0
        atom_x, atom_m = atom_x[keep], atom_m[keep]
        order = np.argsort(atom_x, kind="stable")
        self.breaks = breaks
        self.dens_l = dens_l
        self.dens_r = dens_r
        self.atom_x = atom_x[order]
        self.atom_m = atom_m[order]
        if np.unique(self.atom_x).size != self.atom_x.size:
            raise ValueError("duplicate atom locations")
        self.tail_left = tail_left or Tail.zero()
        self.tail_right = tail_right or Tail.zero()
        if not (np.all(np.isfinite(dens_l)) and np.all(np.isfinite(dens_r))
                and np.all(np.isfinite(atom_m)) and np.all(np.isfinite(atom_x))):
            raise ValueError("measure data must be finite")

    # -- structure ---------------------------------------------------------

    @property
    def span(self):
        return float(self.breaks[0]), float(self.breaks[-1])

    def density_at(self, x, side="right"):
        """Density evaluated inside segments / tails; at a break the given
        side is taken ("right" = incoming segment to the right)."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        below = x < self.breaks[0]
        above = x > self.breaks[-1]
        out[below] = self.tail_left(x[below])
        out[above] = self.tail_right(x[above])
        core = ~(below | above)
        if core.any() and self.breaks.size > 1:
            xc = x[core]
            idx = np.searchsorted(self.breaks, xc,
                                  side="left" if side == "left" else "right") - 1
            idx = np.clip(idx, 0, self.breaks.size - 2)
            t = (xc - self.breaks[idx]) / (self.breaks[idx + 1] - self.breaks[idx])
            out[core] = self.dens_l[idx] * (1.0 - t) + self.dens_r[idx] * t
        return float(out[0]) if scalar else out

    def _split(self):
        pos, neg = _split_component(self)
        return pos, neg

    @property
    def positive_part(self):
        if not hasattr(self, "_pos"):
            self._pos, self._neg = self._split()
        return self._pos

    @property
    def negative_part(self):
        if not hasattr(self, "_neg"):
            self._pos, self._neg = self._split()
        return self._neg

    # -- mass --------------------------------------------------------------

    def _density_mass(self, a, b):
        """integral of the density over (a, b), tails included."""
        if a >= b:
            return 0.0
        total = 0.0
        lo, hi = self.span
        # left tail region
        if a < lo:
            ub = min(b, lo)
            for coef, expo, odd in _tail_power_terms(self.tail_left):
                total += _power_segment_integral(coef, expo, a, ub, odd)
        if b > hi:
            lb = max(a, hi)
            for coef, expo, odd in _tail_power_terms(self.tail_right):
                total += _power_segment_integral(coef, expo, lb, b, odd)
        if self.breaks.size > 1:
            aa = max(a, lo)
            bb = min(b, hi)
            if aa < bb:
                i0 = int(np.searchsorted(self.breaks, aa, side="right") - 1)
                i1 = int(np.searchsorted(self.breaks, bb, side="left"))
                i0 = max(i0, 0)
                for i in range(i0, min(i1, self.breaks.size - 1)):
                    sa = max(aa, self.breaks[i])
                    sb = min(bb, self.breaks[i + 1])
                    if sa >= sb:
                        continue
                    # exact trapezoid using the segment's linear density
                    width = self.breaks[i + 1] - self.breaks[i]
                    xa = (sa - self.breaks[i]) / width
                    xb = (sb - self.breaks[i]) / width
                    fa = self.dens_l[i] * (1.0 - xa) + self.dens_r[i] * xa
                    fb = self.dens_l[i] * (1.0 - xb) + self.dens_r[i] * xb
                    total += 0.5 * (fa + fb) * (sb - sa)
        return total

    def interval_mass(self, a, b):
        """mu((a, b]] -- half-open on the left, closed on the right."""
        if b < a:
            raise ValueError("need a <= b")
        mass = self._density_mass(a, b)
        if self.atom_x.size:
            sel = (self.atom_x > a) & (self.atom_x <= b)
            if sel.any():
                mass += math.fsum(self.atom_m[sel])
        return mass

    def total_mass(self):
        """mu(R) when the tails converge."""
        lo, hi = self.span
        total = self._density_mass(lo, hi)
        if self.atom_m.size:
            total += math.fsum(self.atom_m)
        for tail, cut, side in ((self.tail_left, lo, "left"),
                                (self.tail_right, hi, "right")):
            for coef, expo, odd in _tail_power_terms(tail):
                total += _power_halfline_integral(coef, expo, cut, side, odd)
        return total

    # -- arithmetic ---------------------------------------------------------

    def scaled(self, c):
        return SignedMeasure(self.breaks, self.dens_l * c, self.dens_r * c,
                             self.atom_x, self.atom_m * c,
                             Tail(self.tail_left.offset * c, self.tail_left.coef * c,
                                  self.tail_left.exponent, self.tail_left.odd),
                             Tail(self.tail_right.offset * c, self.tail_right.coef * c,
                                  self.tail_right.exponent, self.tail_right.odd))

    def __add__(self, other):
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        breaks = np.union1d(self.breaks, other.breaks)
        nseg = breaks.size - 1
        dens_l = np.zeros(nseg)
        dens_r = np.zeros(nseg)
        for mu in (self, other):
            mid_l = breaks[:-1]
            mid_r = breaks[1:]
            dens_l += _density_on_segments(mu, mid_l, "right")
            dens_r += _density_on_segments(mu, mid_r, "left")
        ax = np.union1d(self.atom_x, other.atom_x)
        am = np.zeros_like(ax)
        for mu in (self, other):
            if mu.atom_x.size:
                pos = np.searchsorted(ax, mu.atom_x)
                am[pos] += mu.atom_m
        tl = _combine_tails(self.tail_left, other.tail_left, 1.0)
        tr = _combine_tails(self.tail_right, other.tail_right, 1.0)
        return SignedMeasure(breaks, dens_l, dens_r, ax, am, tl, tr)

    def abs(self):
        """Total-variation measure |mu| = mu+ + mu-."""
        pos, neg = self.positive_part, self.negative_part
        return _component_to_measure(pos) + _component_to_measure(neg)


def _density_on_segments(mu, xs, side):
    """Density of mu at segment endpoints, taking the requested side at
    exact breaks so that discontinuities survive the union refinement."""
    lo, hi = mu.span
    out = np.zeros_like(xs)
    inside = (xs >= lo) & (xs <= hi)
    if inside.any() and mu.breaks.size > 1:
        xc = xs[inside]
        if side == "right":
            idx = np.minimum(np.searchsorted(mu.breaks, xc, side="right") - 1,
                             mu.breaks.size - 2)
        else:
            idx = np.maximum(np.searchsorted(mu.breaks, xc, side="left") - 1, 0)
        idx = np.clip(idx, 0, mu.breaks.size - 2)
        t = (xc - mu.breaks[idx]) / (mu.breaks[idx + 1] - mu.breaks[idx])
        t = np.clip(t, 0.0, 1.0)
        out[inside] = mu.dens_l[idx] * (1.0 - t) + mu.dens_r[idx] * t
    out[xs < lo] = mu.tail_left(xs[xs < lo])
    out[xs > hi] = mu.tail_right(xs[xs > hi])
    return out


def _split_component(mu):
    """Positive/negative parts with zero crossings inserted as breaks."""
    breaks = [mu.breaks]
    for i in range(mu.breaks.size - 1):
        dl, dr = mu.dens_l[i], mu.dens_r[i]
        if dl * dr < 0.0:
            t = dl / (dl - dr)
            breaks.append(np.array([mu.breaks[i] + t * (mu.breaks[i + 1] - mu.breaks[i])]))
    grid = np.union1d(np.concatenate(breaks), mu.breaks)
    dl = _density_on_segments(mu, grid[:-1], "right")
    dr = _density_on_segments(mu, grid[1:], "left")
    # classify each refined segment by the sign of its (now one-signed) density
    mid_sign = np.sign(dl + dr)
    pos_l = np.where(mid_sign > 0, dl, 0.0)
    pos_r = np.where(mid_sign > 0, dr, 0.0)
    neg_l = np.where(mid_sign < 0, -dl, 0.0)
    neg_r = np.where(mid_sign < 0, -dr, 0.0)
    pos_atoms = mu.atom_m > 0.0
    tl_pos, tl_neg = _split_tail(mu.tail_left, mu.breaks[0] - 1.0)
    tr_pos, tr_neg = _split_tail(mu.tail_right, mu.breaks[-1] + 1.0)
    pos = MeasureComponent(grid, pos_l, pos_r, mu.atom_x[pos_atoms],
                           mu.atom_m[pos_atoms], tl_pos, tr_pos)
    neg = MeasureComponent(grid, neg_l, neg_r, mu.atom_x[~pos_atoms],
                           -mu.atom_m[~pos_atoms], tl_neg, tr_neg)
    return pos, neg


def _split_tail(tail, probe):
    """Assign a (sign-constant) tail density wholly to one part.

    The probe sits on the outward side of the break; an odd tail whose
    region reaches across zero changes sign there, so its sliver on the far
    side of zero lands in the same part (exact for the reassembled sum and
    for the total variation, which only see coef magnitudes).
    """
    if tail.is_zero():
        return Tail.zero(), Tail.zero()
    val = float(tail(probe))
    if val >= 0.0:
        return tail, Tail.zero()
    return Tail.zero(), Tail(-tail.offset, -tail.coef, tail.exponent,
                             tail.odd)


def _component_to_measure(comp):
    return SignedMeasure(comp.breaks, comp.dens_l, comp.dens_r, comp.atom_x,
                         comp.atom_m, comp.tail_left, comp.tail_right)


def measure_of(psi):
    """Positive measure d(psi) induced by a nondecreasing GridFunction."""
    if not psi.nondecreasing:
        raise PreconditionError("measure_of requires the nondecreasing flag")
    return measure_from(psi)


def measure_from(psi):
    """Signed Lebesgue-Stieltjes measure d(psi) of a BV GridFunction.

    Jumps become atoms, segment slopes become a piecewise-constant density,
    tails differentiate analytically.
    """
    jumps = psi.jumps()
    slopes = psi.slopes()
    breaks = psi.x if psi.x.size > 1 else np.array([psi.x[0] - 0.5, psi.x[0] + 0.5])
    dens = slopes if psi.x.size > 1 else np.zeros(1)
    return SignedMeasure(breaks, dens.copy(), dens.copy(),
                         psi.x, jumps,
                         psi.tail_left.derivative_density(),
                         psi.tail_right.derivative_density())


def abs_measure(psi):
    """Total-variation measure |d(psi)| via the Jordan machinery."""
    c = psi.x[0]
    plus, minus = jordan_decompose(psi, c)
    return measure_of(plus) + measure_of(minus)


# ---------------------------------------------------------------------------
# Stieltjes integration
# ---------------------------------------------------------------------------

def _tail_product_integral(psi_tail, dens_tail, cut, side, label):
    """integral over one unbounded tail of psi * density, both parametric.

    Raises DivergenceError when a cross term has exponent >= -1.
    """
    total = 0.0
    for c1, q1, o1 in _tail_power_terms(psi_tail):
        for c2, q2, o2 in _tail_power_terms(dens_tail):
            if q1 == -math.inf or q2 == -math.inf:
                continue
            try:
                total += _power_halfline_integral(c1 * c2, q1 + q2, cut, side,
                                                  o1 != o2)
            except DivergenceError as exc:
                raise DivergenceError(
                    "%s tail of %s diverges: function exponent %g times "
                    "density exponent %g" % (side, label, q1, q2),
                    component=label, side=side) from exc
    return total


def _linear_power_terms(va, vb, a, b):
    """va + slope*(x - a) as (coef, exponent, odd) terms in 1 + |x|.

    Valid only on a zero-free interval [a, b] (substitute x = sgn*(lam - 1)).
    """
    sgn = 1.0 if a >= 0.0 else -1.0
    beta = (vb - va) / (b - a)
    alpha = va - beta * a
    return [(alpha - sgn * beta, 0.0, False), (sgn * beta, 1.0, False)]


def _tail_segment_product(psi, mu, a, b):
    """Exact integral of psi * (density of mu) over a segment where at least
    one factor follows its parametric tail (a power function of 1 + |x|)."""
    total = 0.0
    pieces = ((a, min(b, 0.0)), (max(a, 0.0), b)) if a < 0.0 < b else ((a, b),)
    for lo, hi in pieces:
        if hi <= lo:
            continue
        if hi <= psi.x[0]:
            pterms = _tail_power_terms(psi.tail_left)
        elif lo >= psi.x[-1]:
            pterms = _tail_power_terms(psi.tail_right)
        else:
            pterms = _linear_power_terms(float(psi(lo)), float(psi.left(hi)),
                                         lo, hi)
        if hi <= mu.breaks[0]:
            mterms = _tail_power_terms(mu.tail_left)
        elif lo >= mu.breaks[-1]:
            mterms = _tail_power_terms(mu.tail_right)
        else:
            mterms = _linear_power_terms(float(mu.density_at(lo, "right")),
                                         float(mu.density_at(hi, "left")),
                                         lo, hi)
        for c1, q1, o1 in pterms:
            for c2, q2, o2 in mterms:
                total += _power_segment_integral(c1 * c2, q1 + q2, lo, hi,
                                                 o1 != o2)
    return total


def stieltjes(psi, mu, use_left_limits=False, label="integral"):
    """Lebesgue-Stieltjes integral of a GridFunction against a SignedMeasure.

    Atoms of ``mu`` contribute ``psi`` values (or left limits when
    ``use_left_limits`` -- the convention integration by parts needs).  The
    density part is integrated exactly per merged segment: Gauss of degree
    matching the piecewise-linear-times-piecewise-linear interior, closed
    power-form on segments past either grid's end, where one factor is a
    parametric tail.  Half-lines beyond both grids contribute closed-form
    power integrals after a convergence check.
    """
    parts = []
    if mu.atom_x.size:
        vals = psi.left(mu.atom_x) if use_left_limits else psi(mu.atom_x)
        parts.append(math.fsum(np.asarray(vals * mu.atom_m, dtype=float)))

    lo = min(psi.x[0], mu.breaks[0])
    hi = max(psi.x[-1], mu.breaks[-1])
    grid = np.union1d(psi.x, mu.breaks)
    if grid.size > 1:
        a = grid[:-1]
        b = grid[1:]
        tailish = ((b <= psi.x[0]) | (a >= psi.x[-1])
                   | (b <= mu.breaks[0]) | (a >= mu.breaks[-1]))
        ai, bi = a[~tailish], b[~tailish]
        if ai.size:
            xq, wq = segment_nodes(ai, bi, 4)
            fvals = psi(xq.ravel()).reshape(xq.shape)
            dvals = mu.density_at(xq.ravel()).reshape(xq.shape)
            seg_ints = np.sum(fvals * dvals * wq, axis=1)
            parts.append(math.fsum(seg_ints))
        for aa, bb in zip(a[tailish], b[tailish]):
            parts.append(_tail_segment_product(psi, mu, float(aa), float(bb)))

    parts.append(_tail_product_integral(psi.tail_left,
                                        _effective_density_tail(mu, "left"),
                                        lo, "left", label))
    parts.append(_tail_product_integral(psi.tail_right,
                                        _effective_density_tail(mu, "right"),
                                        hi, "right", label))
    return math.fsum(parts)


def _effective_density_tail(mu, side):
    return mu.tail_left if side == "left" else mu.tail_right


def riemann_stieltjes_oracle(f, g, grid):
    """Brute-force Riemann-Stieltjes sum of f dg on a dense grid.

    Midpoint evaluation of f against increments of g; used only as a test
    oracle (refine the grid to converge).
    """
    grid = np.asarray(grid, dtype=float)
    fm = f(0.5 * (grid[:-1] + grid[1:]))
    dg = np.diff(g(grid))
    return float(np.sum(fm * dg))


# ---------------------------------------------------------------------------
# integration by parts
# ---------------------------------------------------------------------------

def _tail_product_limit(ta, tb, side):
    """lim of u*v along one tail; PreconditionError if infinite/undefined."""
    la, lb = ta.limit(side), tb.limit(side)
    # resolve 0 * inf via exponent arithmetic
    if math.isinf(la) or math.isinf(lb):
        terms_a = _tail_power_terms(ta) or [(0.0, 0.0, False)]
        terms_b = _tail_power_terms(tb) or [(0.0, 0.0, False)]
        top = max((qa + qb) for _, qa, _ in terms_a for _, qb, _ in terms_b)
        if top < 0.0:
            return 0.0
        raise PreconditionError("u*v has no finite limit on the %s tail" % side)
    return la * lb


def integration_by_parts(u, v):
    """Both sides of the Lebesgue-Stieltjes integration-by-parts identity.

    Returns ``(lhs, rhs)`` where ``lhs = integral of u dv`` and
    ``rhs = c_plus - c_minus - integral of v(x-) du`` with
    ``c_+- = lim u(x) v(x)`` at +-infinity.  Preconditions (finite limits,
    absolutely convergent cross integrals by the tail-exponent test) raise
    PreconditionError / DivergenceError.
    """
    dv = measure_from(v)
    du = measure_from(u)
    # absolute convergence of both cross integrals (tail test is implicit in
    # stieltjes; run it against the absolute data to fail early and clearly)
    for f, m, name in ((u, dv, "u dv"), (v, du, "v du")):
        for side, ft, mt in (("left", f.tail_left, m.tail_left),
                             ("right", f.tail_right, m.tail_right)):
            for c1, q1, _ in _tail_power_terms(ft):
                for c2, q2, _ in _tail_power_terms(mt):
                    if q1 == -math.inf or q2 == -math.inf:
                        continue
                    if q1 + q2 >= -1.0:
                        raise DivergenceError(
                            "integral of %s not absolutely convergent on the "
                            "%s tail" % (name, side), component=name, side=side)
    c_plus = _tail_product_limit(u.tail_right, v.tail_right, "right")
    c_minus = _tail_product_limit(u.tail_left, v.tail_left, "left")
    lhs = stieltjes(u, dv, use_left_limits=False, label="u dv")
    rhs = c_plus - c_minus - stieltjes(v, du, use_left_limits=True, label="v du")
    return lhs, rhs


# ---------------------------------------------------------------------------
# Helly-Bray diagnostic
# ---------------------------------------------------------------------------

@dataclass
class HellyBrayReport:
    """Gaps |integral psi d f_n - integral psi d f| with convergence context."""

    gaps: list
    weighted_distances: list
    psi_norm: float
    phi_moment: float
    lam: float
    lam_prime: float
    decreasing_fraction: float
    trend_decreasing: bool


def helly_bray_check(psi, f, f_seq, lam, lam_prime):
    """Check the weighted Helly-Bray convergence hypotheses and report gaps.

    ``f`` and every member of ``f_seq`` must be nondecreasing with total
    variation at most one (distribution-function-like); ``psi`` must have
    finite ``(1+|x|)**(-lam_prime)``-weighted norm, ``f`` a finite
    ``(1+|x|)**lam_prime`` moment, and ``lam > lam_prime >= 0``.  Violations
    raise PreconditionError.
    """
    if not (lam > lam_prime >= 0.0):
        raise PreconditionError("need lam > lam_prime >= 0")
    for g in [f, *f_seq]:
        if not g.nondecreasing:
            raise PreconditionError("limit and sequence members must be "
                                    "flagged nondecreasing")
        var = g.values[-1] - g.tail_left.limit()
        if var > 1.0 + 1e-9:
            raise PreconditionError("total variation exceeds one")
    psi_norm = weighted_norm(psi, -lam_prime)
    if not math.isfinite(psi_norm):
        raise PreconditionError("psi has infinite (1+|x|)**(-lam') norm")
    nu = measure_of(f)
    phi = weight_function(f.x, lam_prime)
    phi_moment = stieltjes(phi, nu, label="phi moment")
    if not math.isfinite(phi_moment):
        raise PreconditionError("phi_{lam'} moment of f is infinite")
    base = stieltjes(psi, nu, label="psi d f")
    gaps = []
    dists = []
    for g in f_seq:
        val = stieltjes(psi, measure_of(g), label="psi d f_n")
        gaps.append(abs(val - base))
        dists.append(weighted_norm(g - f, lam))
    steps = np.diff(gaps)
    frac = float(np.mean(steps < 0.0)) if steps.size else 1.0
    trend = bool(gaps[-1] <= gaps[0]) if gaps else True
    return HellyBrayReport(gaps, dists, psi_norm, phi_moment, lam, lam_prime,
                           frac, trend)


# ---------------------------------------------------------------------------
# serialization (columnar text)
# ---------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def _fmt_tail(name, tail):
    return "# %s %s %s %s %d" % (name, _fmt(tail.offset), _fmt(tail.coef),
                                 _fmt(tail.exponent), 1 if tail.odd else 0)


def _parse_tail(parts):
    odd = len(parts) > 4 and parts[4] == "1"
    return Tail(float(parts[1]), float(parts[2]), float(parts[3]), odd)


def gridfunction_to_text(psi):
    """Columnar text: header with tails and flag, rows ``x value left_limit``."""
    lines = ["# uvstats gridfunction v1",
             _fmt_tail("tail_left", psi.tail_left),
             _fmt_tail("tail_right", psi.tail_right),
             "# nondecreasing %d" % (1 if psi.nondecreasing else 0)]
    for x, v, l in zip(psi.x, psi.values, psi.left_limits):
        lines.append("%s %s %s" % (_fmt(x), _fmt(v), _fmt(l)))
    return "\n".join(lines) + "\n"


def gridfunction_from_text(text):
    tails = {}
    flag = False
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] in ("tail_left", "tail_right"):
                tails[parts[0]] = _parse_tail(parts)
            elif parts and parts[0] == "nondecreasing":
                flag = parts[1] == "1"
            continue
        rows.append([float(t) for t in line.split()])
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise ValueError("gridfunction rows must be 'x value left_limit'")
    return GridFunction(rows[:, 0], rows[:, 1], rows[:, 2],
                        tails.get("tail_left"), tails.get("tail_right"),
                        nondecreasing=flag)


def measure_to_text(mu):
    """Columnar text: rows ``x atom_mass density``.

    Breaks with a density discontinuity emit two rows at the same ``x``
    (left-side density first); the atom mass rides on the first row of each
    location.  Atoms interior to a segment get their own (break-splitting)
    row.
    """
    grid = np.union1d(mu.breaks, mu.atom_x)
    atom_at = {float(x): float(m) for x, m in zip(mu.atom_x, mu.atom_m)}
    lines = ["# uvstats measure v1",
             _fmt_tail("tail_left", mu.tail_left),
             _fmt_tail("tail_right", mu.tail_right)]
    for j, x in enumerate(grid):
        dl = mu.density_at(np.array([x]), side="left")[0] if x > grid[0] else \
            mu.density_at(np.array([x]), side="right")[0]
        dr = mu.density_at(np.array([x]), side="right")[0] if x < grid[-1] else dl
        m = atom_at.get(float(x), 0.0)
        if dl != dr:
            lines.append("%s %s %s" % (_fmt(x), _fmt(m), _fmt(dl)))
            lines.append("%s %s %s" % (_fmt(x), _fmt(0.0), _fmt(dr)))
        else:
            lines.append("%s %s %s" % (_fmt(x), _fmt(m), _fmt(dr)))
    return "\n".join(lines) + "\n"


def measure_from_text(text):
    tails = {}
    xs, ms, ds = [], [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] in ("tail_left", "tail_right"):
                tails[parts[0]] = _parse_tail(parts)
            continue
        x, m, d = (float(t) for t in line.split())
        xs.append(x)
        ms.append(m)
        ds.append(d)
    if not xs:
        raise ValueError("empty measure file")
    xs = np.asarray(xs)
    ms = np.asarray(ms)
    ds = np.asarray(ds)
    breaks = np.unique(xs)
    nseg = breaks.size - 1
    dens_l = np.zeros(max(nseg, 0))
    dens_r = np.zeros(max(nseg, 0))
    atom_x, atom_m = [], []
    # walk rows: the last row at each x gives the right density, the first
    # the left density of the preceding segment
    first_idx = {}
    last_idx = {}
    for i, x in enumerate(xs):
        first_idx.setdefault(x, i)
        last_idx[x] = i
    for j in range(nseg):
        xl, xr = breaks[j], breaks[j + 1]
        dens_l[j] = ds[last_idx[xl]]
        dens_r[j] = ds[first_idx[xr]]
    for x in breaks:
        m = ms[first_idx[x]]
        if m != 0.0:
            atom_x.append(x)
            atom_m.append(m)
    if nseg == 0:
        breaks = np.array([breaks[0] - 0.5, breaks[0] + 0.5])
        dens_l = dens_r = np.zeros(1)
    return SignedMeasure(breaks, dens_l, dens_r, np.asarray(atom_x),
                         np.asarray(atom_m), tails.get("tail_left"),
                         tails.get("tail_right"))
