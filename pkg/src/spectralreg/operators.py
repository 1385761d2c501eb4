"""Forward operators in diagonalized coordinates.

A compact linear operator is represented by its singular system: the strictly
positive, non-increasing singular values plus (optionally) dense orthonormal
basis matrices when the system was extracted from an explicit matrix.  All
filters and risk formulas act on coefficients, so synthetic systems never
need basis matrices; the canonical basis is implied.

Null-space handling: coordinates annihilated by the operator are appended
after the ``dim`` active coordinates of an X-vector.  The forward map drops
them, the pseudo-inverse restores them as zeros.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sequences import (
    SPACE_X,
    SPACE_Y,
    CoefficientVector,
    DimensionError,
    SpectralSequence,
)

__all__ = [
    "SingularSystem",
    "make_synthetic",
    "from_matrix",
    "apply_forward",
    "apply_pseudo_inverse",
    "load_matrix_csv",
    "save_matrix_csv",
]

#: Relative threshold below which singular values are treated as exact zeros.
NULL_SPACE_RTOL = 1e-12

#: Orthonormality tolerance for explicit basis matrices.
BASIS_ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class SingularSystem:
    """Singular values plus optional dense bases of an operator.

    ``basis_x`` columns span the active part of the domain, ``basis_y``
    columns the active part of the range (both orthonormal when present).
    ``null_dim`` counts explicit null-space directions appended after the
    active coordinates of domain vectors.
    """

    sigma: SpectralSequence
    basis_x: Optional[np.ndarray] = None
    basis_y: Optional[np.ndarray] = None
    null_dim: int = 0

    def __post_init__(self) -> None:
        self.sigma.require_positive("singular values")
        values = self.sigma.values
        if np.any(np.diff(values) > 0):
            order = np.argsort(-values, kind="stable")
            object.__setattr__(self, "sigma", SpectralSequence(values[order], self.sigma.label))
            if self.basis_x is not None:
                object.__setattr__(self, "basis_x", np.array(self.basis_x)[:, order])
            if self.basis_y is not None:
                object.__setattr__(self, "basis_y", np.array(self.basis_y)[:, order])
        if self.null_dim < 0:
            raise ValueError("null_dim must be >= 0")
        for name in ("basis_x", "basis_y"):
            basis = getattr(self, name)
            if basis is None:
                continue
            basis = np.asarray(basis, dtype=float)
            if basis.ndim != 2 or basis.shape[1] != self.dim:
                raise ValueError(f"{name} must have one column per singular value")
            gram = basis.T @ basis
            if np.max(np.abs(gram - np.eye(self.dim))) > BASIS_ORTHO_TOL:
                raise ValueError(f"{name} columns are not orthonormal to {BASIS_ORTHO_TOL:g}")
            object.__setattr__(self, name, basis)

    @property
    def dim(self) -> int:
        """Number of active coordinates."""
        return len(self.sigma)

    @property
    def domain_dim(self) -> int:
        """Active plus explicit null-space coordinates."""
        return self.dim + self.null_dim

    # --- coordinate transforms for systems extracted from a matrix ---

    def domain_to_coeff(self, ambient: np.ndarray) -> CoefficientVector:
        if self.basis_x is None:
            raise ValueError("system has no explicit domain basis")
        return CoefficientVector(self.basis_x.T @ np.asarray(ambient, dtype=float), SPACE_X)

    def range_to_coeff(self, ambient: np.ndarray) -> CoefficientVector:
        if self.basis_y is None:
            raise ValueError("system has no explicit range basis")
        return CoefficientVector(self.basis_y.T @ np.asarray(ambient, dtype=float), SPACE_Y)

    def coeff_to_domain(self, vec: CoefficientVector) -> np.ndarray:
        if self.basis_x is None:
            raise ValueError("system has no explicit domain basis")
        return self.basis_x @ vec.entries[: self.dim]

    def coeff_to_range(self, vec: CoefficientVector) -> np.ndarray:
        if self.basis_y is None:
            raise ValueError("system has no explicit range basis")
        return self.basis_y @ vec.entries[: self.dim]


def make_synthetic(
    n: int,
    kind: str = "polynomial",
    rate: float = 1.0,
    null_dim: int = 0,
) -> SingularSystem:
    """Synthetic operator with prescribed singular-value decay.

    ``kind="polynomial"`` gives sigma_k = k**(-rate) with rate > 0;
    ``kind="exponential"`` gives sigma_k = rate**k with rate in (0, 1).
    Bases are the canonical coordinates, so none are stored.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(1, n + 1, dtype=float)
    if kind == "polynomial":
        if rate <= 0:
            raise ValueError("polynomial decay rate must be > 0")
        sigma = idx ** (-rate)
        label = f"poly(p={rate:g})"
    elif kind == "exponential":
        if not 0 < rate < 1:
            raise ValueError("exponential decay base must be in (0, 1)")
        sigma = rate ** idx
        label = f"exp(c={rate:g})"
    else:
        raise ValueError(f"unknown decay kind {kind!r}")
    return SingularSystem(SpectralSequence(sigma, label), null_dim=null_dim)


def from_matrix(a: np.ndarray) -> SingularSystem:
    """Diagonalize a dense matrix.

    Singular values below ``NULL_SPACE_RTOL * sigma_max`` are treated as exact
    zeros and moved into the null space.  The reconstruction from the retained
    factors must match the input to 1e-8 relative, otherwise the
    decomposition is rejected as numerically unreliable.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    try:
        left, svals, right_t = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD failed: {exc}") from exc
    if svals.size == 0 or svals[0] == 0.0:
        raise ValueError("matrix is identically zero; no singular system")
    keep = svals > NULL_SPACE_RTOL * svals[0]
    n_active = int(np.count_nonzero(keep))
    null_dim = a.shape[1] - n_active
    recon = (left[:, keep] * svals[keep]) @ right_t[keep, :]
    err = np.linalg.norm(recon - a) / np.linalg.norm(a)
    if err > 1e-8:
        raise np.linalg.LinAlgError(f"SVD reconstruction error {err:.3e} exceeds 1e-8")
    # Convention: the domain basis collects the right singular vectors, the
    # range basis the left ones.
    return SingularSystem(
        sigma=SpectralSequence(svals[keep], "from_matrix"),
        basis_x=right_t[keep, :].T,
        basis_y=left[:, keep],
        null_dim=null_dim,
    )


def apply_forward(system: SingularSystem, x: CoefficientVector) -> CoefficientVector:
    """Diagonal forward action: scale active coordinates, drop null ones."""
    if x.space != SPACE_X:
        raise ValueError("apply_forward expects X-coefficients")
    if len(x) != system.domain_dim:
        raise DimensionError(f"expected {system.domain_dim} coefficients, got {len(x)}")
    return CoefficientVector(system.sigma.values * x.entries[: system.dim], SPACE_Y)


def apply_pseudo_inverse(system: SingularSystem, y: CoefficientVector) -> CoefficientVector:
    """Minimum-norm inverse: divide by singular values, zero the null space."""
    if y.space != SPACE_Y:
        raise ValueError("apply_pseudo_inverse expects Y-coefficients")
    if len(y) != system.dim:
        raise DimensionError(f"expected {system.dim} coefficients, got {len(y)}")
    active = y.entries / system.sigma.values
    return CoefficientVector(
        np.concatenate([active, np.zeros(system.null_dim)]), SPACE_X
    )


def save_matrix_csv(path, a: np.ndarray) -> None:
    """Write a dense matrix as CSV: literal header line, dimensions, rows."""
    a = np.asarray(a, dtype=float)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("rows,cols\n")
        fh.write(f"{a.shape[0]},{a.shape[1]}\n")
        for row in a:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_matrix_csv(path) -> np.ndarray:
    """Read a dense matrix written by :func:`save_matrix_csv`."""
    if hasattr(path, "read"):
        fh = path
        return _parse_matrix_csv(fh)
    with open(path, "r", encoding="ascii") as fh:
        return _parse_matrix_csv(fh)


def _parse_matrix_csv(fh: io.TextIOBase) -> np.ndarray:
    header = fh.readline().strip()
    if header != "rows,cols":
        raise ValueError(f"matrix CSV must start with 'rows,cols', got {header!r}")
    dims = fh.readline().strip().split(",")
    if len(dims) != 2:
        raise ValueError("second line must contain 'rows,cols' dimensions")
    rows, cols = int(dims[0]), int(dims[1])
    data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (rows, cols):
        raise ValueError(f"expected {rows}x{cols} values, got {data.shape}")
    return data
