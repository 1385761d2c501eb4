"""Finite-dimensional frames, dual frames and diagonal frame decompositions.

A frame is a spanning family with norm-equivalence constants 0 < a <= b: for
every x, a*||x||^2 <= sum <x, phi_k>^2 <= b*||x||^2.  The dual frame inverts
the analysis/synthesis pair, which lets a non-orthogonal family play the role
of a singular basis.  A diagonal frame decomposition of an operator A is a
pair of frames (phi for the domain, psi for the range) together with strictly
positive quasi-singular values kappa such that A^T psi_k = kappa_k phi_k, and
it diagonalizes reconstruction exactly like the singular value expansion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from .filters import FilterSpec
from .operators import load_matrix_csv
from .sequences import DimensionError, SpectralSequence, as_array

__all__ = [
    "FrameSystem",
    "DFDSystem",
    "FrameFilter",
    "frame_bounds",
    "synthesis_bound_check",
    "build_dfd",
    "frame_reconstruct",
    "frame_mse_filter",
    "frame_moments_from_covariance",
    "orthonormal_frame",
    "mercedes_benz_frame",
    "doubled_basis_frame",
    "frame_from_csv",
]

RECONSTRUCT_TOL = 1e-10


@dataclass(frozen=True)
class FrameSystem:
    """Rows of ``vectors`` are the frame elements; bounds are computed."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.vectors, dtype=float)
        if arr.ndim != 2:
            raise ValueError("frame vectors must form a 2-d array (one row per element)")
        m, d = arr.shape
        if m < d:
            raise ValueError(f"{m} vectors cannot frame a {d}-dimensional space")
        if not np.all(np.isfinite(arr)):
            raise ValueError("frame vectors contain non-finite entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)
        evals = np.linalg.eigvalsh(arr.T @ arr)
        if evals[0] <= d * np.finfo(float).eps * max(evals[-1], 1.0):
            raise ValueError("rows do not span the space: not a frame")
        object.__setattr__(self, "_bounds", (float(evals[0]), float(evals[-1])))

    @property
    def size(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def lower_bound(self) -> float:
        return self._bounds[0]

    @property
    def upper_bound(self) -> float:
        return self._bounds[1]

    def analyze(self, x: np.ndarray) -> np.ndarray:
        """Coefficients <x, phi_k>."""
        return self.vectors @ np.asarray(x, dtype=float)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Sum of coeff_k * phi_k."""
        return self.vectors.T @ np.asarray(coeffs, dtype=float)

    def dual_vectors(self) -> np.ndarray:
        """Rows of the dual frame: (F^T F)^{-1} applied to each element."""
        gram = self.vectors.T @ self.vectors
        return np.linalg.solve(gram, self.vectors.T).T

    def dual_analyze(self, x: np.ndarray) -> np.ndarray:
        return self.dual_vectors() @ np.asarray(x, dtype=float)

    def dual_synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.dual_vectors().T @ np.asarray(coeffs, dtype=float)

    def check_reconstruction(self, trials: int = 32, seed: int = 0) -> float:
        """Max relative error of dual-synthesis(analysis(x)) = x on random x."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(self.dim)
            err = np.linalg.norm(self.dual_synthesize(self.analyze(x)) - x)
            worst = max(worst, err / np.linalg.norm(x))
        if worst > RECONSTRUCT_TOL:
            raise AssertionError(f"dual reconstruction error {worst:.3e} exceeds {RECONSTRUCT_TOL:g}")
        return worst


def frame_bounds(frame: FrameSystem, trials: int = 1000, seed: int = 0) -> Dict[str, float]:
    """Eigenvalue bounds of the frame operator, validated on random vectors.

    Returns a and b plus the observed extreme Rayleigh quotients; the
    quotients must respect [a, b] up to round-off.
    """
    a, b = frame.lower_bound, frame.upper_bound
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((trials, frame.dim))
    energy = np.sum((x @ frame.vectors.T) ** 2, axis=1)
    norms = np.sum(x**2, axis=1)
    quotients = energy / norms
    tol = 1e-10 * max(b, 1.0)
    if np.min(quotients) < a - tol or np.max(quotients) > b + tol:
        raise AssertionError("frame bounds violated by a sampled vector")
    return {
        "a": a,
        "b": b,
        "min_quotient": float(np.min(quotients)),
        "max_quotient": float(np.max(quotients)),
    }


def synthesis_bound_check(frame: FrameSystem, trials: int = 1000, seed: int = 0) -> Dict[str, float]:
    """Norm bounds of the synthesis operators.

    ||F^* c||^2 <= b ||c||^2 and, for the dual frame, ||Fbar^* c||^2 <=
    (1/a) ||c||^2.  Returns the worst observed ratios; raises when a sampled
    coefficient vector exceeds either bound.
    """
    rng = np.random.default_rng(seed)
    a, b = frame.lower_bound, frame.upper_bound
    dual = frame.dual_vectors()
    worst_primal = 0.0
    worst_dual = 0.0
    for _ in range(trials):
        c = rng.standard_normal(frame.size)
        c_sq = float(np.sum(c**2))
        worst_primal = max(worst_primal, float(np.sum((frame.vectors.T @ c) ** 2)) / c_sq)
        worst_dual = max(worst_dual, float(np.sum((dual.T @ c) ** 2)) / c_sq)
    tol = 1.0 + 1e-10
    if worst_primal > b * tol or worst_dual > tol / a:
        raise AssertionError("synthesis-operator norm bound violated")
    return {
        "primal_ratio": worst_primal,
        "primal_bound": b,
        "dual_ratio": worst_dual,
        "dual_bound": 1.0 / a,
    }


@dataclass(frozen=True)
class DFDSystem:
    """Diagonal frame decomposition (phi, psi, kappa) of a matrix operator."""

    phi: FrameSystem
    psi: FrameSystem
    kappa: SpectralSequence
    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.kappa.require_positive("quasi-singular values")
        if self.phi.size != self.psi.size or self.phi.size != len(self.kappa):
            raise DimensionError("phi, psi and kappa must have one entry per frame element")
        a = np.asarray(self.matrix, dtype=float)
        residual = a.T @ self.psi.vectors.T - self.kappa.values * self.phi.vectors.T
        scale = max(float(np.max(np.abs(self.kappa.values * self.phi.vectors.T))), 1e-30)
        rel = float(np.max(np.abs(residual))) / scale
        if rel > RECONSTRUCT_TOL:
            raise AssertionError(f"diagonal coupling residual {rel:.3e} exceeds {RECONSTRUCT_TOL:g}")
        object.__setattr__(self, "matrix", a)

    @property
    def size(self) -> int:
        return self.phi.size

    def coupling_residual(self) -> float:
        """Max relative residual of A^T psi_k = kappa_k phi_k."""
        a = self.matrix
        residual = a.T @ self.psi.vectors.T - self.kappa.values * self.phi.vectors.T
        scale = max(float(np.max(np.abs(self.kappa.values * self.phi.vectors.T))), 1e-30)
        return float(np.max(np.abs(residual))) / scale

    def analysis_identity_residual(self, trials: int = 32, seed: int = 0) -> float:
        """Max relative error of psi-analysis(A x) = kappa * phi-analysis(x)."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(self.phi.dim)
            lhs = self.psi.analyze(self.matrix @ x)
            rhs = self.kappa.values * self.phi.analyze(x)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))) / max(np.max(np.abs(rhs)), 1e-30))
        return worst

    def to_json(self) -> str:
        return json.dumps(
            {
                "phi": self.phi.vectors.tolist(),
                "psi": self.psi.vectors.tolist(),
                "kappa": self.kappa.values.tolist(),
            }
        )


def build_dfd(a: np.ndarray, phi: FrameSystem) -> DFDSystem:
    """Construct the range frame and quasi-singular values for a matrix.

    For invertible A the rows psi_k = kappa_k * A^{-T} phi_k with
    kappa_k = 1 / ||A^{-T} phi_k|| are unit vectors satisfying the coupling
    A^T psi_k = kappa_k phi_k by construction, and the image of a frame under
    a bounded invertible map is again a frame.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("desk-scale decomposition needs a square matrix")
    if a.shape[0] != phi.dim:
        raise DimensionError("matrix and frame dimensions do not match")
    try:
        raw = np.linalg.solve(a.T, phi.vectors.T)  # columns A^{-T} phi_k
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("operator is singular on the frame span") from exc
    norms = np.linalg.norm(raw, axis=0)
    if np.any(norms == 0.0):
        raise np.linalg.LinAlgError("operator annihilates a frame direction")
    kappa = 1.0 / norms
    psi = FrameSystem((raw * kappa).T)
    return DFDSystem(phi, psi, SpectralSequence(kappa, "quasi-singular"), a)


def frame_reconstruct(dfd: DFDSystem, coefficients, y: np.ndarray) -> np.ndarray:
    """Filtered reconstruction: dual-phi synthesis of g * psi-analysis(y)."""
    g = as_array(coefficients)
    if g.size != dfd.size:
        raise DimensionError("filter length does not match the decomposition")
    return dfd.phi.dual_synthesize(g * dfd.psi.analyze(y))


@dataclass(frozen=True)
class FrameFilter:
    """Frame-coefficient filter plus the risk upper bound it minimizes."""

    spec: FilterSpec
    upper_bound_risk: float
    frame_factor: float


def frame_mse_filter(
    dfd: DFDSystem,
    frame_signal_moments,
    frame_noise_moments,
) -> FrameFilter:
    """Minimizer of the frame-coefficient upper bound on the expected risk.

    With signal power p_k = E <x, phi_k>^2 and noise power
    d_k = E <eps, psi_k>^2 the bound sum (1 - kappa g)^2 p + g^2 d is
    minimized by g = kappa p / (kappa^2 p + d), leaving
    sum p d / (kappa^2 p + d).  The true expected risk is controlled by this
    bound only up to the lower frame constant: a_phi * risk <= bound.  Except
    in the orthonormal case the minimizer of the bound need not minimize the
    risk itself, so the value reported here is an upper bound, never the
    optimum.
    """
    p = as_array(frame_signal_moments)
    d = as_array(frame_noise_moments)
    if p.size != dfd.size or d.size != dfd.size:
        raise DimensionError("moment sequences must match the decomposition size")
    if np.any(p < 0) or np.any(d < 0):
        raise ValueError("moments must be >= 0")
    if np.any(p == 0):
        raise ValueError("frame signal moments must be strictly positive")
    kappa = dfd.kappa.values
    denom = kappa**2 * p + d
    g = kappa * p / denom
    bound = float(np.sum(p * d / denom))
    spec = FilterSpec(
        SpectralSequence(g, "frame-mse"),
        "frame_mse",
        {},
        "minimizer of the frame-coefficient risk upper bound",
    )
    return FrameFilter(spec, bound, 1.0 / dfd.phi.lower_bound)


def frame_moments_from_covariance(vectors: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    """Per-element second moments v_k^T C v_k of a law with covariance C."""
    v = np.asarray(vectors, dtype=float)
    c = np.asarray(covariance, dtype=float)
    return np.einsum("kd,de,ke->k", v, c, v)


def orthonormal_frame(dim: int) -> FrameSystem:
    return FrameSystem(np.eye(dim))


def mercedes_benz_frame() -> FrameSystem:
    """Three unit vectors in the plane at 120-degree spacing (tight, a=b=3/2)."""
    angles = np.array([0.5, 0.5 + 2.0 / 3.0, 0.5 + 4.0 / 3.0]) * math.pi
    return FrameSystem(np.stack([np.cos(angles), np.sin(angles)], axis=1))


def doubled_basis_frame(dim: int) -> FrameSystem:
    """Two copies of the canonical basis (tight, a=b=2)."""
    eye = np.eye(dim)
    return FrameSystem(np.vstack([eye, eye]))


def frame_from_csv(path) -> FrameSystem:
    return FrameSystem(load_matrix_csv(path))
