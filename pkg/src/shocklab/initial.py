"""Constructors for every initial profile used by the experiments.

Floors like ⌊n/ρ⌋ and ⌊Tρ⌋ are evaluated in exact integer arithmetic on the
rational form of each density (0.4 is 2/5, never the binary float), so no
profile can drift by one site from rounding and coupled systems built from
the same densities stay aligned.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContractError
from .lattice import ParticleConfiguration


def _as_fraction(rho):
    if isinstance(rho, Fraction):
        return rho
    if isinstance(rho, str):
        return Fraction(rho)
    if isinstance(rho, float):
        # shortest-repr round trip: 0.4 -> Fraction(2, 5)
        return Fraction(str(rho))
    return Fraction(rho)


def _check_density(rho):
    f = _as_fraction(rho)
    if not (0 < f < 1):
        raise ContractError(f"density must lie in (0, 1), got {f}")
    return f


def _floor_div(numer_labels, rho):
    """Elementwise exact ⌊n/ρ⌋ for an integer array n."""
    p, q = rho.numerator, rho.denominator
    return (numer_labels * q) // p


@dataclass(frozen=True)
class DensityTriple:
    """Increasing densities ρ1 < ρ2 < ρ3 with separation scale T."""

    rho1: float
    rho2: float
    rho3: float
    T: int

    def __post_init__(self):
        f1, f2, f3 = (_check_density(r) for r in (self.rho1, self.rho2, self.rho3))
        if not (f1 < f2 < f3):
            raise ContractError(
                f"densities must be strictly increasing, got {f1} < {f2} < {f3}")
        if self.T < 1 or self.T != int(self.T):
            raise ContractError(f"T must be a positive integer, got {self.T}")
        object.__setattr__(self, "_f", (f1, f2, f3))

    @property
    def fractions(self):
        return self._f

    @property
    def middle_label_cut(self):
        """⌊Tρ2⌋, the label where the middle density region ends; computed
        once so every coupled construction shares the same boundary."""
        f2 = self._f[1]
        return (self.T * f2.numerator) // f2.denominator


def _require_range(label_range):
    lo, hi = int(label_range[0]), int(label_range[1])
    if lo > hi:
        raise ContractError(f"empty label range [{lo}, {hi}]")
    return lo, hi


def triple_ic(d, label_range):
    """Three-density profile: density ρ1 right of the origin (labels n ≥ 0),
    ρ2 on [0, T] (labels -⌊Tρ2⌋..-1), ρ3 left of T (labels below)."""
    lo, hi = _require_range(label_range)
    f1, f2, f3 = d.fractions
    k0 = d.middle_label_cut
    n = np.arange(lo, hi + 1)
    pos = np.empty(len(n), dtype=np.int64)
    top = n >= 0
    mid = (n >= -k0) & ~top
    bot = n < -k0
    pos[top] = -_floor_div(n[top], f1)
    pos[mid] = -_floor_div(n[mid], f2)
    pos[bot] = d.T - _floor_div(n[bot] + k0, f3)
    return ParticleConfiguration(n_min=lo, positions=pos)


def flat_ic(rho, label_range, shift=0):
    """Constant-density profile x_n(0) = -⌊(n + shift)/ρ⌋."""
    f = _check_density(rho)
    lo, hi = _require_range(label_range)
    n = np.arange(lo, hi + 1)
    return ParticleConfiguration(n_min=lo, positions=-_floor_div(n + int(shift), f))


def step_ic(Z, count):
    """Fully packed block: particles n = 1..count at Z+1-n."""
    if count < 1:
        raise ContractError(f"step profile needs count >= 1, got {count}")
    pos = int(Z) + 1 - np.arange(1, count + 1, dtype=np.int64)
    return ParticleConfiguration(n_min=1, positions=pos)


def decomposition_ics(d, label_range):
    """The three dominating subproblems of the triple profile.

    x1 keeps only labels n ≥ 0; x2 keeps the middle region and packs the
    top labels against the origin; x3 packs everything right of the middle
    cut against T.  Each dominates the full profile on shared labels, and
    under a shared tape the full position is the minimum of the three.
    """
    lo, hi = _require_range(label_range)
    f1, f2, f3 = d.fractions
    k0 = d.middle_label_cut
    if hi < 0:
        raise ContractError("label range must reach label 0 for the decomposition")

    x1 = ParticleConfiguration(
        n_min=0, positions=-_floor_div(np.arange(0, hi + 1), f1))

    n2 = np.arange(-k0, hi + 1)
    pos2 = np.empty(len(n2), dtype=np.int64)
    top = n2 >= 0
    pos2[top] = -n2[top]
    pos2[~top] = -_floor_div(n2[~top], f2)
    x2 = ParticleConfiguration(n_min=int(-k0), positions=pos2)

    n3 = np.arange(lo, hi + 1)
    pos3 = np.empty(len(n3), dtype=np.int64)
    packed = n3 >= -k0
    pos3[packed] = d.T - (n3[packed] + k0)
    pos3[~packed] = d.T - _floor_div(n3[~packed] + k0, f3)
    x3 = ParticleConfiguration(n_min=lo, positions=pos3)

    return x1, x2, x3
