"""Spectral filter families and reconstruction operators.

A filter is a coefficient sequence g applied to range coefficients before the
pseudo-inverse scaling is undone: reconstruction reads x_k = g_k * y_k.
Constructors cover the classical families (Tikhonov, truncated SVD), the
MSE-optimal filter for given moment laws, the worst-case-optimal filter for
per-coefficient bounded adversaries, and the variational filter induced by a
linear denoiser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .laws import DataLaw, NoiseLaw
from .operators import SingularSystem
from .sequences import (
    SPACE_X,
    SPACE_Y,
    CoefficientVector,
    DimensionError,
    SpectralSequence,
)

__all__ = [
    "FilterSpec",
    "tikhonov",
    "tsvd",
    "mse_filter",
    "adv_inf_filter",
    "denoiser_lambda",
    "prox_scale",
    "h_tau",
    "apply_filter",
    "custom_filter",
]

#: Relative tolerance for the branch comparisons of the worst-case filter.
BRANCH_RTOL = 1e-12


@dataclass(frozen=True)
class FilterSpec:
    """A named filter family with its coefficient sequence."""

    coefficients: SpectralSequence
    family: str
    params: Dict[str, float] = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.coefficients.values)):
            raise ValueError("filter coefficients must be finite")

    @property
    def dim(self) -> int:
        return len(self.coefficients)

    def to_json(self) -> str:
        return json.dumps(
            {
                "family": self.family,
                "params": self.params,
                "coefficients": self.coefficients.values.tolist(),
                "provenance": self.provenance,
            }
        )

    @staticmethod
    def from_json(text: str) -> "FilterSpec":
        payload = json.loads(text)
        return FilterSpec(
            SpectralSequence(payload["coefficients"], "json"),
            payload["family"],
            dict(payload.get("params", {})),
            payload.get("provenance", ""),
        )


def custom_filter(coefficients, provenance: str = "custom") -> "FilterSpec":
    return FilterSpec(SpectralSequence(np.asarray(coefficients, dtype=float), provenance), "custom", {}, provenance)


def tikhonov(system: SingularSystem, alpha: float) -> FilterSpec:
    """Quadratically penalized least squares: g = sigma / (sigma^2 + alpha).

    Equivalently the minimizer of 0.5*||Ax - y||^2 + 0.5*alpha*||x||^2, which
    tends to the pseudo-inverse as alpha -> 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    sigma = system.sigma.values
    g = sigma / (sigma**2 + alpha)
    return FilterSpec(
        SpectralSequence(g, f"tikhonov(alpha={alpha:g})"),
        "tikhonov",
        {"alpha": alpha},
        "variational quadratic penalty",
    )


def tsvd(system: SingularSystem, cutoff: int) -> FilterSpec:
    """Truncated SVD: invert the first ``cutoff`` coordinates, zero the rest."""
    if not 0 <= cutoff <= system.dim:
        raise ValueError(f"cutoff must lie in [0, {system.dim}]")
    sigma = system.sigma.values
    g = np.zeros_like(sigma)
    g[:cutoff] = 1.0 / sigma[:cutoff]
    return FilterSpec(
        SpectralSequence(g, f"tsvd(cutoff={cutoff})"),
        "tsvd",
        {"cutoff": float(cutoff)},
        "hard spectral truncation",
    )


def mse_filter(system: SingularSystem, data: DataLaw, noise: NoiseLaw) -> FilterSpec:
    """Minimizer of the expected squared reconstruction error.

    Per coordinate, g = sigma*p / (p*sigma^2 + d) where p is the signal power
    and d the noise power.  Coordinates with p = 0 and d > 0 get g = 0; a
    coordinate with p = d = 0 leaves the coefficient undefined and is
    rejected.
    """
    _check_dims(system, data.dim, noise.dim)
    sigma = system.sigma.values
    p = data.second_moments.values
    d = noise.moments.values
    dead = (p == 0.0) & (d == 0.0)
    if np.any(dead):
        raise ValueError("coordinate with zero signal and zero noise power: filter undefined")
    denom = p * sigma**2 + d
    g = np.where(denom > 0.0, sigma * p / np.where(denom > 0.0, denom, 1.0), 0.0)
    return FilterSpec(
        SpectralSequence(g, "mse-optimal"),
        "mse",
        {},
        "expected-squared-error minimizer for the given moment laws",
    )


def adv_inf_filter(system: SingularSystem, data: DataLaw, delta: float) -> FilterSpec:
    """Minimizer under the per-coefficient bounded adversary of budget delta.

    With signal power p, first absolute moment m and singular value s, the
    per-coordinate worst-case objective

        S(g) = (1 - s*g)^2 * p + 2*delta*(1 - s*g)*g*m + g^2*delta^2

    is minimized on [0, 1/s] by a three-branch rule:

        g = 0      when p/m <= delta/s (or m = 0),
        g = 1/s    when delta/s <= m,
        interior   g = 1 / (s - delta*(s*m - delta)/(s*p - delta*m)) otherwise.

    Branch comparisons carry a 1e-12 relative tolerance; in the degenerate
    tie (p = m^2 and delta/s = m) every g in the interval is optimal and 0 is
    returned by convention.
    """
    if delta <= 0:
        raise ValueError("adversarial budget delta must be > 0")
    _check_dims(system, data.dim, data.dim)
    sigma = system.sigma.values
    p = data.second_moments.values
    m = data.abs_moments.values

    g = np.zeros_like(sigma)
    threshold = delta / sigma
    has_mass = m > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(has_mass, p / np.where(has_mass, m, 1.0), 0.0)

    zero_branch = ~has_mass | (ratio <= threshold * (1.0 + BRANCH_RTOL))
    full_branch = ~zero_branch & (threshold <= m * (1.0 + BRANCH_RTOL))
    interior = ~zero_branch & ~full_branch

    g[full_branch] = 1.0 / sigma[full_branch]
    if np.any(interior):
        s_i = sigma[interior]
        p_i = p[interior]
        m_i = m[interior]
        correction = delta * (s_i * m_i - delta) / (s_i * p_i - delta * m_i)
        g[interior] = 1.0 / (s_i - correction)
    return FilterSpec(
        SpectralSequence(g, f"adv-worst-case(delta={delta:g})"),
        "adv_inf",
        {"delta": delta},
        "per-coefficient worst-case minimizer",
    )


def denoiser_lambda(data: DataLaw, noise_tilde: NoiseLaw) -> SpectralSequence:
    """Optimal penalties of the self-supervised linear denoiser.

    The training noise is added directly to the signal (no operator in
    between), so its moments are read in domain coordinates.  Per index the
    optimum is noise power over signal power.
    """
    if data.dim != noise_tilde.dim:
        raise DimensionError("law dimensions do not match")
    p = data.second_moments.values
    if np.any(p <= 0):
        raise ValueError("denoiser penalties need strictly positive signal power")
    lam = noise_tilde.moments.values / p
    return SpectralSequence(lam, "denoiser penalties")


def h_tau(s, tau: float):
    """Step-size filter function s -> s / (tau - s*(tau - 1))."""
    s = np.asarray(s, dtype=float)
    return s / (tau - s * (tau - 1.0))


def prox_scale(lam: SpectralSequence, tau: float) -> SpectralSequence:
    """Step-matched penalties tau * lambda.

    Scaling the quadratic penalty by tau multiplies the penalties; the same
    rescaling is what the filter function h_tau performs on the denoiser
    eigenvalues 1/(1 + lambda), which is checked here as a guard:
    h_tau(1/(1+lam)) == 1/(1 + tau*lam).
    """
    if tau <= 0:
        raise ValueError("step size tau must be > 0")
    lam.require_nonnegative("denoiser penalties")
    scaled = tau * lam.values
    eig = 1.0 / (1.0 + lam.values)
    filtered = h_tau(eig, tau)
    expected = 1.0 / (1.0 + scaled)
    if np.max(np.abs(filtered - expected)) > 1e-12 * (1.0 + np.max(np.abs(expected))):
        raise AssertionError("step-size filter identity violated")
    return SpectralSequence(scaled, f"prox-scaled(tau={tau:g})")


def apply_filter(filt: FilterSpec, system: SingularSystem, y: CoefficientVector) -> CoefficientVector:
    """Reconstruct from range coefficients: x_k = g_k * y_k, null space zero."""
    if y.space != SPACE_Y:
        raise ValueError("apply_filter expects Y-coefficients")
    if len(y) != system.dim or filt.dim != system.dim:
        raise DimensionError("filter, system and data dimensions do not match")
    active = filt.coefficients.values * y.entries
    return CoefficientVector(
        np.concatenate([active, np.zeros(system.null_dim)]), SPACE_X
    )


def _check_dims(system: SingularSystem, *dims: int) -> None:
    for d in dims:
        if d != system.dim:
            raise DimensionError(f"dimension {d} does not match system dimension {system.dim}")
