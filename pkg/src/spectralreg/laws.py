"""Data and noise distributions specified by per-coefficient moments.

A law lives in coefficient space: for the data law the second moments of the
domain coefficients and their first absolute moments, for the noise law the
second moments of the range coefficients.  Coefficients at different indices
are sampled independently; only per-index second and first absolute moments
enter any formula implemented here, so cross-correlations would be dead
weight.

The first absolute moment is stored rather than re-derived because the
worst-case-optimal filter needs it and no single coefficient distribution is
canonical.  Each named distribution supplies a closed form:

    gaussian            E|c| = sqrt(2 * E c^2 / pi)
    rademacher_scaled   E|c| = sqrt(E c^2)          (two-point law, equality)
    uniform_symmetric   E|c| = sqrt(3 * E c^2) / 2
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from .operators import SingularSystem
from .sequences import (
    SPACE_X,
    SPACE_Y,
    ArrayLike,
    CoefficientVector,
    SpectralSequence,
    as_array,
)

__all__ = [
    "DataLaw",
    "NoiseLaw",
    "law_from_decay",
    "law_from_moments",
    "law_from_source_condition",
    "white_noise",
    "colored_noise",
    "noise_from_moments",
    "noise_level",
    "sample",
    "continuity_constant",
    "abs_moment_factor",
]

DISTRIBUTIONS = ("gaussian", "rademacher_scaled", "uniform_symmetric")

#: Fraction of the trailing indices used for the heavy-tail diagnostic.
_TAIL_WINDOW = 0.1


def abs_moment_factor(dist: str) -> float:
    """E|c| / sqrt(E c^2) for a named unit coefficient distribution."""
    if dist == "gaussian":
        return math.sqrt(2.0 / math.pi)
    if dist == "rademacher_scaled":
        return 1.0
    if dist == "uniform_symmetric":
        return math.sqrt(3.0) / 2.0
    raise ValueError(f"unknown coefficient distribution {dist!r}")


def _draw_unit(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    """Samples with zero mean and unit second moment."""
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "rademacher_scaled":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if dist == "uniform_symmetric":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=shape)
    raise ValueError(f"unknown coefficient distribution {dist!r}")


@dataclass(frozen=True)
class DataLaw:
    """Per-coefficient moments of the unknown-signal distribution."""

    second_moments: SpectralSequence
    abs_moments: SpectralSequence
    dist: str = "gaussian"

    def __post_init__(self) -> None:
        pi = self.second_moments.require_nonnegative("second moments").values
        m = self.abs_moments.require_nonnegative("absolute moments").values
        if len(self.second_moments) != len(self.abs_moments):
            raise ValueError("second and absolute moments must have equal length")
        # Cauchy-Schwarz, with a hair of slack for round-off in constructors.
        if np.any(m * m > pi * (1.0 + 1e-12) + 1e-300):
            raise ValueError("absolute moments violate (E|c|)^2 <= E c^2")
        if np.any((pi == 0.0) != (m == 0.0)):
            raise ValueError("a coefficient has zero variance but non-zero mean modulus (or vice versa)")

    @property
    def dim(self) -> int:
        return len(self.second_moments)

    def total_energy(self) -> float:
        """Expected squared norm: the sum of all second moments."""
        return float(np.sum(self.second_moments.values))

    def heavy_tail_flag(self) -> bool:
        """True when the trailing tenth of indices carries > 1% of the energy.

        The truncation is supposed to be a faithful surrogate of the infinite
        model; a heavy tail says the dimension was chosen too small.
        """
        pi = self.second_moments.values
        start = max(1, int(round(pi.size * (1.0 - _TAIL_WINDOW))))
        total = float(np.sum(pi))
        if total == 0.0:
            return False
        return float(np.sum(pi[start:])) > 0.01 * total

    def sample_array(self, count: int, seed: int) -> np.ndarray:
        """(count, dim) array of independent coefficient draws."""
        return _sample_array(self.second_moments.values, self.dist, count, seed)

    def to_json(self) -> str:
        return json.dumps(
            {
                "pi": self.second_moments.values.tolist(),
                "abs_moment": self.abs_moments.values.tolist(),
                "dist": self.dist,
            }
        )

    @staticmethod
    def from_json(text: str) -> "DataLaw":
        payload = json.loads(text)
        return DataLaw(
            SpectralSequence(payload["pi"], "json"),
            SpectralSequence(payload["abs_moment"], "json"),
            payload.get("dist", "gaussian"),
        )


@dataclass(frozen=True)
class NoiseLaw:
    """Per-coefficient second moments of the measurement-noise distribution.

    ``delta_ref`` remembers the nominal noise level used to build the law so
    the dimensionless shape ``moments / delta_ref**2`` stays recoverable.
    """

    moments: SpectralSequence
    dist: str = "gaussian"
    delta_ref: Optional[float] = None
    space: str = SPACE_Y

    def __post_init__(self) -> None:
        self.moments.require_nonnegative("noise moments")
        if self.delta_ref is not None and self.delta_ref < 0:
            raise ValueError("delta_ref must be >= 0")

    @property
    def dim(self) -> int:
        return len(self.moments)

    def gamma_profile(self) -> SpectralSequence:
        """Noise shape with the nominal level squared divided out."""
        ref = self.delta_ref
        if ref is None:
            ref = noise_level(self, "sup")
        if ref == 0.0:
            return SpectralSequence(np.zeros(self.dim), "gamma(zero noise)")
        return SpectralSequence(self.moments.values / ref**2, "gamma")

    def sample_array(self, count: int, seed: int) -> np.ndarray:
        return _sample_array(self.moments.values, self.dist, count, seed)

    def to_json(self) -> str:
        return json.dumps(
            {
                "delta": self.moments.values.tolist(),
                "dist": self.dist,
                "delta_ref": self.delta_ref,
                "space": self.space,
            }
        )

    @staticmethod
    def from_json(text: str) -> "NoiseLaw":
        payload = json.loads(text)
        return NoiseLaw(
            SpectralSequence(payload["delta"], "json"),
            payload.get("dist", "gaussian"),
            payload.get("delta_ref"),
            payload.get("space", SPACE_Y),
        )


def law_from_moments(
    second_moments: ArrayLike,
    dist: str = "gaussian",
    abs_moments: Optional[ArrayLike] = None,
    label: str = "moments",
) -> DataLaw:
    """Build a data law from second moments.

    Absolute moments default to the closed form of ``dist``; passing them
    explicitly overrides that (the stored value is what filters consume).
    """
    pi = SpectralSequence(as_array(second_moments), label).require_nonnegative("second moments")
    if abs_moments is None:
        m = np.sqrt(pi.values) * abs_moment_factor(dist)
    else:
        m = as_array(abs_moments)
    return DataLaw(pi, SpectralSequence(m, f"abs({label})"), dist)


def law_from_decay(n: int, a: float, scale: float = 1.0, dist: str = "gaussian") -> DataLaw:
    """Polynomially decaying second moments scale * k**(-a).

    The exponent must exceed 1, otherwise the infinite-model energy would be
    infinite and the truncation would not stand for anything.
    """
    if a <= 1:
        raise ValueError("decay exponent must be > 1 for summable energy")
    if scale < 0:
        raise ValueError("scale must be >= 0")
    idx = np.arange(1, n + 1, dtype=float)
    return law_from_moments(scale * idx ** (-a), dist, label=f"decay(a={a:g})")


def law_from_source_condition(
    system: SingularSystem,
    mu: float,
    source_weights: ArrayLike,
    dist: str = "gaussian",
) -> DataLaw:
    """Second moments sigma**(4*mu) * w from a smoothness weight sequence w.

    ``mu = 0`` returns the weights unchanged; larger ``mu`` concentrates the
    law on the well-resolved coordinates.
    """
    if mu < 0:
        raise ValueError("smoothness order mu must be >= 0")
    w = as_array(source_weights)
    if np.any(w < 0):
        raise ValueError("source weights must be >= 0")
    if w.size != system.dim:
        raise ValueError("source weights must match the system dimension")
    pi = system.sigma.values ** (4.0 * mu) * w
    return law_from_moments(pi, dist, label=f"source(mu={mu:g})")


def white_noise(n: int, delta: float, dist: str = "gaussian") -> NoiseLaw:
    """Constant per-coefficient noise power delta**2."""
    if delta < 0:
        raise ValueError("noise level must be >= 0")
    return NoiseLaw(
        SpectralSequence(np.full(n, delta**2), f"white(delta={delta:g})"),
        dist,
        delta_ref=delta,
    )


def colored_noise(delta: float, gamma: ArrayLike, dist: str = "gaussian") -> NoiseLaw:
    """Noise power delta**2 * gamma_k with a free non-negative shape."""
    if delta < 0:
        raise ValueError("noise level must be >= 0")
    g = as_array(gamma)
    if np.any(g < 0):
        raise ValueError("noise shape must be >= 0")
    return NoiseLaw(SpectralSequence(delta**2 * g, "colored"), dist, delta_ref=delta)


def noise_from_moments(moments: ArrayLike, dist: str = "gaussian", space: str = SPACE_Y) -> NoiseLaw:
    return NoiseLaw(SpectralSequence(as_array(moments), "moments"), dist, space=space)


def noise_level(law: NoiseLaw, kind: str = "sup") -> float:
    """Noise level functional: ``sup`` is white-noise compatible, ``l2`` is
    the expected squared norm's square root."""
    moments = law.moments.values
    if kind == "sup":
        return float(math.sqrt(np.max(moments)))
    if kind == "l2":
        return float(math.sqrt(np.sum(moments)))
    raise ValueError(f"unknown noise level kind {kind!r}")


def draw_coefficients(moments: np.ndarray, dist: str, count: int, seed) -> np.ndarray:
    """(count, dim) coefficient draws; ``seed`` may be an int, a SeedSequence
    or a Generator (for spawned parallel streams)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = _draw_unit(rng, dist, (count, np.asarray(moments).size))
    return draws * np.sqrt(moments)


def _sample_array(moments: np.ndarray, dist: str, count: int, seed: int) -> np.ndarray:
    return draw_coefficients(moments, dist, count, np.random.SeedSequence(seed))


def sample(law: Union[DataLaw, NoiseLaw], count: int, seed: int) -> List[CoefficientVector]:
    """Independent draws as coefficient vectors, reproducible per seed."""
    if isinstance(law, DataLaw):
        arr = law.sample_array(count, seed)
        space = SPACE_X
    else:
        arr = law.sample_array(count, seed)
        space = law.space
    return [CoefficientVector(row, space) for row in arr]


def continuity_constant(system: SingularSystem, data: DataLaw, noise: NoiseLaw) -> float:
    """Smallest ratio of noise power to sigma * signal power across indices.

    A strictly positive value certifies the continuity premise under which
    the MSE-optimal family is a convergent data-driven regularization.
    Indices with zero signal power do not constrain the ratio.
    """
    pi = data.second_moments.values
    delta = noise.moments.values
    sigma = system.sigma.values
    mask = pi > 0
    if not np.any(mask):
        return math.inf
    return float(np.min(delta[mask] / (sigma[mask] * pi[mask])))
