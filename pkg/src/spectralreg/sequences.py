"""Truncated coefficient sequences and coefficient vectors.

Everything downstream (filters, risks, rate experiments) is evaluated in the
coordinates of a singular system or a frame, so the basic currency of the
library is a finite, dense sequence of real numbers indexed 1..N.  Sequences
are immutable; operations return new objects and concatenate provenance
labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

__all__ = [
    "DimensionError",
    "SpectralSequence",
    "CoefficientVector",
    "SPACE_X",
    "SPACE_Y",
    "as_array",
    "elementwise",
    "add",
    "sub",
    "mul",
    "div",
    "sum_tail",
]

ArrayLike = Union["SpectralSequence", np.ndarray, Iterable[float]]

#: Tags for the two coefficient spaces (domain / range of the operator).
SPACE_X = "x"
SPACE_Y = "y"


class DimensionError(ValueError):
    """Raised when sequence or vector lengths do not match."""


def _frozen_array(values: Iterable[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d sequence, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def as_array(values: ArrayLike) -> np.ndarray:
    """Coerce a sequence-like argument to a read-only 1-d float array."""
    if isinstance(values, SpectralSequence):
        return values.values
    return _frozen_array(values)


@dataclass(frozen=True)
class SpectralSequence:
    """A finite real sequence with provenance.

    Invariants: length >= 1 and every entry finite.  Sign constraints are not
    part of the base type; callers that need non-negative or strictly
    positive entries use :meth:`require_nonnegative` / :meth:`require_positive`.
    """

    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values)
        if arr.size < 1:
            raise ValueError("sequence must contain at least one entry")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"sequence {self.label!r} contains non-finite entries")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __getitem__(self, index):
        return self.values[index]

    def require_nonnegative(self, name: str = "sequence") -> "SpectralSequence":
        if np.any(self.values < 0):
            raise ValueError(f"{name} must be non-negative")
        return self

    def require_positive(self, name: str = "sequence") -> "SpectralSequence":
        if np.any(self.values <= 0):
            raise ValueError(f"{name} must be strictly positive")
        return self

    def with_label(self, label: str) -> "SpectralSequence":
        return SpectralSequence(self.values, label)


@dataclass(frozen=True)
class CoefficientVector:
    """Coefficients of an element of X or Y in the active coordinate system."""

    entries: np.ndarray
    space: str = SPACE_X

    def __post_init__(self) -> None:
        arr = _frozen_array(self.entries)
        if arr.size < 1:
            raise ValueError("coefficient vector must contain at least one entry")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficient vector contains non-finite entries")
        if self.space not in (SPACE_X, SPACE_Y):
            raise ValueError(f"unknown space tag {self.space!r}")
        object.__setattr__(self, "entries", arr)

    def __len__(self) -> int:
        return int(self.entries.size)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))


def elementwise(
    op: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: SpectralSequence,
    b: SpectralSequence,
    op_name: str = "",
) -> SpectralSequence:
    """Apply a binary real function entry by entry.

    Both sequences must have equal length.  The result label concatenates the
    operand labels so provenance survives arithmetic.
    """
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")
    with np.errstate(divide="raise", invalid="raise"):
        try:
            result = op(a.values, b.values)
        except FloatingPointError as exc:
            raise ValueError(f"elementwise {op_name or op!r} produced a non-finite entry") from exc
    name = op_name or getattr(op, "__name__", "op")
    return SpectralSequence(result, f"{name}({a.label},{b.label})")


def add(a: SpectralSequence, b: SpectralSequence) -> SpectralSequence:
    return elementwise(np.add, a, b, "add")


def sub(a: SpectralSequence, b: SpectralSequence) -> SpectralSequence:
    return elementwise(np.subtract, a, b, "sub")


def mul(a: SpectralSequence, b: SpectralSequence) -> SpectralSequence:
    return elementwise(np.multiply, a, b, "mul")


def div(a: SpectralSequence, b: SpectralSequence) -> SpectralSequence:
    """Entrywise quotient; division by zero is rejected."""
    if np.any(b.values == 0):
        raise ValueError("division by zero entry")
    return elementwise(np.divide, a, b, "div")


def sum_tail(seq: ArrayLike, from_index: int) -> float:
    """Sum of entries from the 1-based position ``from_index`` to the end.

    ``from_index = N + 1`` is the empty sum (0.0); anything outside
    ``[1, N + 1]`` is an index error.
    """
    arr = as_array(seq)
    n = arr.size
    if not 1 <= from_index <= n + 1:
        raise IndexError(f"from_index {from_index} outside [1, {n + 1}]")
    return float(np.sum(arr[from_index - 1 :]))
