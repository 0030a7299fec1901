"""Empirical CDFs, Kolmogorov-Smirnov distances, DKW bands."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class EmpiricalCDF:
    """Sorted samples; F(x) = (# samples <= x) / n."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if len(s) == 0:
            raise ContractError("empirical CDF needs at least one sample")
        if np.any(np.isnan(s)):
            raise ContractError("NaN sample in empirical CDF")
        object.__setattr__(self, "samples", np.sort(s))

    @property
    def n(self):
        return len(self.samples)

    def __call__(self, x):
        idx = np.searchsorted(self.samples, np.asarray(x, dtype=np.float64), side="right")
        out = idx / self.n
        return float(out) if np.ndim(x) == 0 else out


def ks_distance(ecdf, prediction):
    """Sup distance between an empirical CDF and a prediction.

    A callable prediction is treated as a continuous CDF (both one-sided
    gaps at the sample points); another EmpiricalCDF is compared exactly as
    a step function on the union of jump points (two-sample form).
    """
    if isinstance(prediction, EmpiricalCDF):
        grid = np.union1d(ecdf.samples, prediction.samples)
        return float(np.max(np.abs(ecdf(grid) - prediction(grid))))
    xs = ecdf.samples
    n = ecdf.n
    f = np.asarray(prediction(xs), dtype=np.float64)
    if np.any(~np.isfinite(f)) or np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
        raise ContractError("prediction returned values outside [0, 1]")
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(0, n) / n
    return float(max(hi.max(), lo.max(), 0.0))


def dkw_band(n, alpha=0.01):
    """Distribution-free confidence half-width sqrt(ln(2/alpha) / (2n))."""
    if n < 1:
        raise ContractError("DKW band needs n >= 1")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ks_standard_error(n):
    """Conservative sampling scale of a KS estimate (binomial bound at the
    sup point); used for doubling-trend comparisons."""
    return 0.5 / math.sqrt(n)
