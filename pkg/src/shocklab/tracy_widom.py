"""Tracy-Widom GOE/GUE distribution functions via Fredholm determinants.

Nystrom discretization: Gauss-Legendre nodes mapped to the positive
half-line, weights folded symmetrically, determinant of I - K by pivoted
factorization.  Certified two ways: doubling the quadrature order moves
values by less than 1e-8 on the working range, and an independent
Painleve-II oracle (see tests) agrees to better than 1e-6.
"""

import functools
import warnings

import numpy as np
from numpy.polynomial.legendre import leggauss

from .airy import airy, airy_both
from .errors import ContractError

DEFAULT_ORDER = 64
DEFAULT_SCALE = 10.0

# Closer than this, the Airy kernel switches to its removable-singularity
# diagonal form to dodge catastrophic cancellation.
_DIAG_EPS = 1e-6


class TWEvaluator:
    """CDF evaluator for one ensemble at a fixed quadrature order.

    Immutable after construction; safe to share across readers.  Values are
    clamped to [0, 1]; a clamp beyond 1e-10 warns, smaller ones are silent
    roundoff near the tails.
    """

    def __init__(self, ensemble="GOE", order=DEFAULT_ORDER, scale=DEFAULT_SCALE):
        ensemble = ensemble.upper()
        if ensemble not in ("GOE", "GUE"):
            raise ContractError(f"ensemble must be GOE or GUE, got {ensemble}")
        if order < 8:
            raise ContractError(f"quadrature order must be >= 8, got {order}")
        self.ensemble = ensemble
        self.order = int(order)
        self.scale = float(scale)
        u, w = leggauss(self.order)
        x = scale * (1.0 + u) / (1.0 - u)
        dmap = 2.0 * scale / (1.0 - u) ** 2
        self._x = x
        self._sqw = np.sqrt(w * dmap)

    def _kernel(self, s):
        x = self._x
        if self.ensemble == "GOE":
            return 0.5 * airy(0.5 * np.add.outer(x, x) + s)
        xs = x + s
        ai, aip = airy_both(xs)
        num = np.outer(ai, aip) - np.outer(aip, ai)
        den = np.subtract.outer(xs, xs)
        near = np.abs(den) < _DIAG_EPS
        den_safe = np.where(near, 1.0, den)
        k = num / den_safe
        if near.any():
            mid = 0.5 * np.add.outer(xs, xs)
            ai_m, aip_m = airy_both(mid[near])
            k[near] = aip_m ** 2 - mid[near] * ai_m ** 2
        return k

    def kernel_matrix(self, s):
        """Weighted Nystrom matrix whose determinant defect gives the CDF."""
        return self._sqw[:, None] * self._kernel(s) * self._sqw[None, :]

    def cdf(self, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
        out = np.empty_like(s_arr)
        eye = np.eye(self.order)
        for i, si in enumerate(s_arr):
            if not np.isfinite(si):
                out[i] = 1.0 if si > 0 else 0.0
                continue
            a = eye - self.kernel_matrix(float(si))
            if not np.all(np.isfinite(a)):
                raise ContractError(f"non-finite kernel entries at s={si}")
            sign, logdet = np.linalg.slogdet(a)
            val = sign * np.exp(logdet)
            if val < -1e-10 or val > 1.0 + 1e-10:
                warnings.warn(f"determinant {val} at s={si} clamped to [0, 1]",
                              stacklevel=2)
            out[i] = min(max(val, 0.0), 1.0)
        return float(out[0]) if np.ndim(s) == 0 else out

    __call__ = cdf


@functools.lru_cache(maxsize=16)
def _evaluator(ensemble, order, scale=DEFAULT_SCALE):
    return TWEvaluator(ensemble, order, scale)


def f_goe(s, order=DEFAULT_ORDER):
    """GOE Tracy-Widom CDF."""
    return _evaluator("GOE", order).cdf(s)


def f_gue(s, order=DEFAULT_ORDER):
    """GUE Tracy-Widom CDF."""
    return _evaluator("GUE", order).cdf(s)


def tw_table(s_values, order=DEFAULT_ORDER):
    """Rows (s, F_GOE(s), F_GUE(s)) for a grid."""
    s_values = np.asarray(s_values, dtype=np.float64)
    g1 = _evaluator("GOE", order).cdf(s_values)
    g2 = _evaluator("GUE", order).cdf(s_values)
    return np.column_stack([s_values, g1, g2])


@functools.lru_cache(maxsize=8)
def cdf_interpolant(ensemble, order=DEFAULT_ORDER, lo=-14.0, hi=12.0, step=0.05):
    """Cubic spline through exact determinant values on a fine grid.

    Interpolation error is far below every statistical tolerance here
    (~1e-7); outside [lo, hi] the tails are clamped to 0 and 1, which is
    exact to ~1e-30 there, and comfortably inside the range where the
    quadrature itself stays reliable.
    """
    from scipy.interpolate import CubicSpline

    grid = np.arange(lo, hi + step / 2, step)
    vals = _evaluator(ensemble, order).cdf(grid)
    spline = CubicSpline(grid, vals)

    def cdf(s):
        s = np.asarray(s, dtype=np.float64)
        out = np.clip(spline(np.clip(s, lo, hi)), 0.0, 1.0)
        out = np.where(s < lo, 0.0, out)
        out = np.where(s > hi, 1.0, out)
        return float(out) if out.ndim == 0 else out

    return cdf
