"""Piecewise Gauss-Legendre quadrature helpers.

All integrals in the package reduce to polynomial integrands per cell
(piecewise-linear functions against piecewise-linear densities), so a fixed
low-order Gauss rule per cell is exact up to roundoff; higher orders are used
where smooth covariance evaluators enter.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_rule(order):
    """Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def segment_nodes(a, b, order):
    """Gauss nodes/weights mapped to the segments [a_i, b_i].

    Parameters
    ----------
    a, b : arrays of segment endpoints (same shape).
    order : points per segment.

    Returns
    -------
    x : array of shape (len(a), order), nodes.
    w : matching weights; sum of w over a row equals b_i - a_i.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, wt = gauss_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * t[None, :]
    w = half[:, None] * wt[None, :]
    return x, w


def integrate_segments(f, a, b, order):
    """Integrate callable f over each [a_i, b_i] with a per-segment Gauss rule."""
    x, w = segment_nodes(a, b, order)
    return np.sum(f(x) * w, axis=1)


def graded_unit_grid(n, lo, hi):
    """A grid on [lo, hi] subset of (0, 1), geometric near both endpoints.

    Used for quadrature in probability space where quantile functions may be
    log-singular at 0 and 1. Roughly n points: the middle half is uniform, the
    outer quarters refine geometrically down to lo / up to 1 - hi distance.
    """
    if not (0.0 < lo < hi < 1.0):
        raise ValueError("need 0 < lo < hi < 1")
    n_edge = max(n // 4, 8)
    n_mid = max(n - 2 * n_edge, 8)
    left = np.geomspace(lo, 0.25, n_edge, endpoint=False)
    mid = np.linspace(0.25, 0.75, n_mid, endpoint=False)
    right = 1.0 - np.geomspace(1.0 - hi, 0.25, n_edge)[::-1]
    grid = np.unique(np.concatenate([left, mid, right]))
    return grid
