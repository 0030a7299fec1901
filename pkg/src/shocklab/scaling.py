"""Pure algebra of the merging-shock limit law.

Maps (densities, T, u, tau) to the observed label N, observation time t and
reference position X; carries the per-density constants sigma_k (fluctuation
scale), mu_k = 1/rho_k and nu_k = 1 - rho_k; and evaluates the predicted
limit laws: a product of three rescaled GOE Tracy-Widom factors at the
merge point, a single factor for constant density, and the two-factor
reductions along each of the three standard shock directions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


def sigma_flat(rho):
    """Fluctuation-scale parameter of a constant-density profile, in the
    conventional closed form 2^(2/3) rho^(1/3) (1-rho)^(-2/3)."""
    if not 0 < rho < 1:
        raise ContractError(f"density must lie in (0,1), got {rho}")
    return 2.0 ** (2.0 / 3.0) * rho ** (1.0 / 3.0) / (1.0 - rho) ** (2.0 / 3.0)


def corrected_sigma_flat(rho):
    """Reciprocal orientation of sigma_flat, the scale simulation confirms.

    Position fluctuations must vanish in a jam (rho -> 1: no room to move)
    and grow without bound in the dilute limit (rho -> 0: free Poisson
    walkers beat the t^(1/3) scale).  The conventional closed form has these
    limits inverted when used as a divisor of the CDF argument; its
    reciprocal 2^(-2/3) rho^(-1/3) (1-rho)^(2/3) matches both limits and the
    measured fluctuations, and agrees with the packed-block law's
    rho^(-1/3) (1-rho)^(2/3) scale up to the flat-geometry factor 2^(-2/3).
    """
    return 1.0 / sigma_flat(rho)


@dataclass(frozen=True)
class ShockConstants:
    """sigma_k, mu_k, nu_k for the three densities of a triple."""

    sigma: tuple
    mu: tuple
    nu: tuple


def shock_constants(d, corrected=False):
    """Constants of the merge-point law; corrected=True flips the sigma_k to
    their reciprocal orientation (see corrected_sigma_flat) while keeping the
    time-unit prefactor (rho3-rho1)^(-1/3)."""
    rhos = (d.rho1, d.rho2, d.rho3)
    scale = (d.rho3 - d.rho1) ** (-1.0 / 3.0)
    per_density = corrected_sigma_flat if corrected else sigma_flat
    return ShockConstants(
        sigma=tuple(scale * per_density(r) for r in rhos),
        mu=tuple(1.0 / r for r in rhos),
        nu=tuple(1.0 - r for r in rhos),
    )


@dataclass(frozen=True)
class ScalingFrame:
    """Observation frame at the shock merge: label N, time t, position X.

    N is the nearest integer to rho1*rho2*T/(rho3-rho1) + u*T^(1/3) (the
    limit statement treats N as real; finite runs need an integer label,
    and the rounding convention is pinned here).
    """

    densities: object
    u: float
    tau: float
    N: int
    t: float
    X: float

    @property
    def merge_time(self):
        d = self.densities
        return d.T / (d.rho3 - d.rho1)

    @property
    def merge_position(self):
        d = self.densities
        return (1.0 - d.rho1 - d.rho2) * d.T / (d.rho3 - d.rho1)

    @property
    def merge_label(self):
        d = self.densities
        return d.rho1 * d.rho2 * d.T / (d.rho3 - d.rho1)


def frame(d, u=0.0, tau=0.0):
    """Build the observation frame; degenerate frames (N < 1, t <= 0) refuse."""
    cbrt_T = d.T ** (1.0 / 3.0)
    n_real = d.rho1 * d.rho2 * d.T / (d.rho3 - d.rho1) + u * cbrt_T
    t = d.T / (d.rho3 - d.rho1) + tau * cbrt_T
    x = (1.0 - d.rho1 - d.rho2) * d.T / (d.rho3 - d.rho1)
    n = int(round(n_real))
    if n < 1:
        raise ContractError(f"frame degenerates: label {n_real:.3f} rounds below 1")
    if t <= 0:
        raise ContractError(f"frame degenerates: time {t:.3f} <= 0")
    return ScalingFrame(densities=d, u=float(u), tau=float(tau), N=n, t=float(t), X=float(x))


def product_prediction(d, u, tau, s, tw, corrected=False):
    """Predicted CDF of the rescaled position at the merge point: product of
    three GOE factors at (s - mu_k u + nu_k tau)/sigma_k."""
    c = shock_constants(d, corrected=corrected)
    s = np.asarray(s, dtype=np.float64)
    out = np.ones_like(s, dtype=np.float64)
    for k in range(3):
        out = out * tw((s - c.mu[k] * u + c.nu[k] * tau) / c.sigma[k])
    return float(out) if out.ndim == 0 else out


def flat_prediction(rho, s, tw, corrected=False):
    """Predicted CDF for a constant-density profile: one GOE factor."""
    sigma = corrected_sigma_flat(rho) if corrected else sigma_flat(rho)
    s = np.asarray(s, dtype=np.float64)
    out = tw(s / sigma)
    return float(out) if np.ndim(out) == 0 else out


_CASES = {
    "a": ((0, 1), -1),
    "b": ((1, 2), -1),
    "c": ((0, 2), +1),
}


def standard_shock_limit(d, u, tau, s, case, tw):
    """Three-factor product under the shock-direction substitution vs the
    surviving two-factor product.

    Case a rides the left shock (tau -> -inf), b the right shock
    (tau -> -inf), c the merged shock (tau -> +inf).  Returns
    (full_product, two_factor_product, residual).
    """
    if case not in _CASES:
        raise ContractError(f"case must be one of a, b, c, got {case!r}")
    keep, _ = _CASES[case]
    rho = (d.rho1, d.rho2, d.rho3)
    i, j = keep
    u_sub = u + tau * rho[i] * rho[j]
    s_sub = s - (1.0 - rho[i] - rho[j]) * tau
    c = shock_constants(d)
    full = product_prediction(d, u_sub, tau, s_sub, tw)
    two = np.asarray(tw((np.asarray(s) - c.mu[i] * u) / c.sigma[i]), dtype=float) \
        * np.asarray(tw((np.asarray(s) - c.mu[j] * u) / c.sigma[j]), dtype=float)
    two = float(two) if two.ndim == 0 else two
    residual = abs(full - two) if np.ndim(full) == 0 else np.abs(full - two)
    return full, two, residual


def limit_direction(case):
    """Sign of tau along which the corresponding reduction converges."""
    return _CASES[case][1]
