"""Linear spectral denoisers as proximal operators, and their plug-and-play use.

A linear denoiser with per-coordinate penalties lam shrinks coefficients by
1/(1 + lam_k).  It is exactly the proximal operator of the quadratic
functional 0.5 * sum lam_k c_k^2, so plugging it into a forward-backward
iteration for the least-squares data term solves the corresponding
variational problem; per coordinate the fixed point is
sigma * y / (sigma^2 + lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .laws import DataLaw, NoiseLaw
from .operators import SingularSystem
from .sequences import SPACE_X, SPACE_Y, CoefficientVector, DimensionError, SpectralSequence

__all__ = [
    "DenoiserSpec",
    "apply_denoiser",
    "denoiser_self_supervised_optimality",
    "pnp_iterate",
    "PnPResult",
    "contraction_factors",
]


@dataclass(frozen=True)
class DenoiserSpec:
    """Shrinkage penalties of a linear spectral denoiser."""

    penalties: SpectralSequence

    def __post_init__(self) -> None:
        self.penalties.require_nonnegative("denoiser penalties")

    @property
    def dim(self) -> int:
        return len(self.penalties)

    def eigenvalues(self) -> np.ndarray:
        """Shrinkage factors 1/(1 + lam), always in (0, 1]."""
        return 1.0 / (1.0 + self.penalties.values)


def apply_denoiser(denoiser: DenoiserSpec, x: CoefficientVector) -> CoefficientVector:
    """Shrink active coordinates; explicit null-space coordinates are dropped
    to zero because the denoiser acts only on the spanned directions."""
    if len(x) < denoiser.dim:
        raise DimensionError("coefficient vector shorter than the denoiser")
    out = np.zeros(len(x))
    out[: denoiser.dim] = x.entries[: denoiser.dim] * denoiser.eigenvalues()
    return CoefficientVector(out, x.space)


def denoiser_self_supervised_optimality(
    data: DataLaw,
    noise_tilde: NoiseLaw,
    tol: float = 1e-8,
) -> dict:
    """Check that noise-power/signal-power penalties minimize the denoising MSE.

    Per coordinate the self-supervised objective for a shrinkage factor
    1/(1+lam) is (1/(1+lam) - 1)^2 * p + (1/(1+lam))^2 * d, whose minimizer
    is lam = d/p.  A golden-section search over lam re-derives the optimum
    numerically; the report carries the largest deviation seen.
    """
    p = data.second_moments.values
    if np.any(p <= 0):
        raise ValueError("signal power must be strictly positive")
    d = noise_tilde.moments.values
    closed = d / p
    worst = 0.0
    for pk, dk, lk in zip(p, d, closed):
        objective = lambda lam: (1.0 / (1.0 + lam) - 1.0) ** 2 * pk + dk / (1.0 + lam) ** 2
        numeric = _golden_section(objective, 0.0, max(4.0 * lk, 1.0))
        worst = max(worst, abs(numeric - lk) / (1.0 + lk))
    ok = worst <= tol
    if not ok:
        raise AssertionError(f"self-supervised optimum off by {worst:.3e}")
    return {"max_relative_gap": worst, "tolerance": tol, "ok": ok}


def _golden_section(fn, lo: float, hi: float, iters: int = 120) -> float:
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    # Parabolic polish: function comparisons saturate at sqrt(eps), a vertex
    # fit through wider-spaced points recovers a few more digits.
    x0 = 0.5 * (a + b)
    h = 1e-5 * (1.0 + abs(x0))
    if x0 - h > lo and x0 + h < hi:  # interior minimum only; boundary minima
        f_minus, f_zero, f_plus = fn(x0 - h), fn(x0), fn(x0 + h)  # need no polish
        curvature = f_plus - 2.0 * f_zero + f_minus
        if curvature > 0.0:
            x0 -= 0.5 * h * (f_plus - f_minus) / curvature
    return min(max(x0, lo), hi)


@dataclass(frozen=True)
class PnPResult:
    x: CoefficientVector
    iterations: int
    converged: bool
    residual: float
    stop_reason: str
    residual_history: List[float]


def contraction_factors(
    denoiser: DenoiserSpec, system: SingularSystem, tau: float, prox_tau: Optional[float] = None
) -> np.ndarray:
    """Per-coordinate factors |1 - tau*sigma^2| / (1 + prox_tau*lam)."""
    scale = tau if prox_tau is None else prox_tau
    lam = denoiser.penalties.values
    return np.abs(1.0 - tau * system.sigma.values**2) / (1.0 + scale * lam)


def pnp_iterate(
    denoiser: DenoiserSpec,
    system: SingularSystem,
    y: CoefficientVector,
    tau: float,
    max_iters: int,
    tol: float = 1e-10,
    prox_tau: Optional[float] = None,
) -> PnPResult:
    """Forward-backward iteration with the denoiser as proximal step.

    Each step is x <- D[prox_tau * lam](x - tau * A^T(Ax - y)).  By default
    ``prox_tau = tau``: the penalties are rescaled to match the step size, so
    the iteration minimizes 0.5*||Ax - y||^2 + 0.5*sum lam c^2 for every
    admissible tau and converges to sigma*y/(sigma^2 + lam) per coordinate.
    Passing ``prox_tau`` explicitly decouples the two roles; a pre-scaled
    denoiser with ``prox_tau = 1`` runs the identical map.

    The step size must satisfy 0 < tau < 2/sigma_max^2, which makes every
    coordinate a contraction with factor |1 - tau*sigma^2|/(1 + prox_tau*lam).
    """
    if y.space != SPACE_Y:
        raise ValueError("pnp_iterate expects Y-coefficients")
    if denoiser.dim != system.dim or len(y) != system.dim:
        raise DimensionError("denoiser, system and data dimensions do not match")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    sigma = system.sigma.values
    sigma_max = float(np.max(sigma))
    if not 0.0 < tau < 2.0 / sigma_max**2:
        raise ValueError(f"step size tau must lie in (0, {2.0 / sigma_max**2:g})")
    scale = tau if prox_tau is None else prox_tau
    if scale < 0:
        raise ValueError("prox_tau must be >= 0")
    shrink = 1.0 / (1.0 + scale * denoiser.penalties.values)

    x = np.zeros(system.dim)
    yv = y.entries
    residual = math.inf
    history: List[float] = []
    iterations = 0
    for iterations in range(1, max_iters + 1):
        x_next = (x - tau * sigma * (sigma * x - yv)) * shrink
        residual = float(np.max(np.abs(x_next - x)))
        history.append(residual)
        x = x_next
        if residual < tol:
            break
    converged = residual < tol
    out = CoefficientVector(np.concatenate([x, np.zeros(system.null_dim)]), SPACE_X)
    return PnPResult(
        out,
        iterations,
        converged,
        residual,
        "converged" if converged else "max_iters",
        history,
    )
