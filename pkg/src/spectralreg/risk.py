"""Error functionals: expected, empirical and worst-case reconstruction risks.

All risks measure the squared distance between the reconstruction and the
projection of the truth onto the orthogonal complement of the null space,
evaluated in coefficient space.  The expected risk of any filter splits into
a bias term (signal damping) and a noise term (noise amplification); the
mixed term vanishes because the noise has zero mean and is independent of
the signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .laws import DataLaw, NoiseLaw, draw_coefficients
from .filters import FilterSpec
from .operators import SingularSystem
from .parallel import resolve_threads, shard_sizes, thread_map
from .sequences import CoefficientVector, DimensionError

__all__ = [
    "RiskReport",
    "WorstCaseResult",
    "analytic_risk",
    "generic_risk",
    "monte_carlo_risk",
    "deterministic_x_risk",
    "DeterministicRisk",
    "worst_case_l2",
    "worst_case_sinf",
    "risk_bounds",
]

#: Shard size for Monte-Carlo estimation.  Fixed so that the shard
#: decomposition (and hence the result) is independent of the thread count.
MC_SHARD = 1 << 16


@dataclass(frozen=True)
class RiskReport:
    """Value and bias/noise decomposition of a risk evaluation."""

    value: float
    bias_term: float
    noise_term: float
    method: str
    count: Optional[int] = None
    stderr: Optional[float] = None

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("risk must be >= 0")

    def to_json(self) -> str:
        payload = {
            "value": self.value,
            "bias_term": self.bias_term,
            "noise_term": self.noise_term,
            "method": self.method,
        }
        if self.count is not None:
            payload["count"] = self.count
        if self.stderr is not None:
            payload["stderr"] = self.stderr
        return json.dumps(payload)

    def csv_row(self, instance_id: str, filter_family: str) -> Tuple:
        return (instance_id, filter_family, self.method, self.value, self.stderr if self.stderr is not None else 0.0)


def analytic_risk(system: SingularSystem, data: DataLaw, noise: NoiseLaw) -> RiskReport:
    """Expected risk of the MSE-optimal filter in closed form.

    Per coordinate the optimal filter leaves p*d / (p*s^2 + d); coordinates
    with p = d = 0 carry neither signal nor noise and contribute 0.
    """
    _check_dims(system, data.dim, noise.dim)
    sigma = system.sigma.values
    p = data.second_moments.values
    d = noise.moments.values
    denom = p * sigma**2 + d
    safe = np.where(denom > 0.0, denom, 1.0)
    bias = float(np.sum(np.where(denom > 0.0, d**2 * p / safe**2, 0.0)))
    noise_term = float(np.sum(np.where(denom > 0.0, sigma**2 * p**2 * d / safe**2, 0.0)))
    value = float(np.sum(np.where(denom > 0.0, p * d / safe, 0.0)))
    return RiskReport(value, bias, noise_term, "analytic")


def generic_risk(
    filt: FilterSpec, system: SingularSystem, data: DataLaw, noise: NoiseLaw
) -> RiskReport:
    """Expected risk of an arbitrary filter: damping bias plus noise power."""
    _check_dims(system, data.dim, noise.dim, filt.dim)
    sigma = system.sigma.values
    g = filt.coefficients.values
    bias = float(np.sum((1.0 - sigma * g) ** 2 * data.second_moments.values))
    noise_term = float(np.sum(g**2 * noise.moments.values))
    return RiskReport(bias + noise_term, bias, noise_term, "analytic")


def monte_carlo_risk(
    filt: FilterSpec,
    system: SingularSystem,
    data: DataLaw,
    noise: NoiseLaw,
    count: int,
    seed: int,
    threads: Optional[int] = None,
) -> RiskReport:
    """Empirical expected risk from independent (signal, noise) draws.

    Per sample the loss splits into a damping term and a noise term; the
    cross term has exactly zero expectation (independent zero-mean noise), so
    the estimator sums the two square terms and drops the realized cross
    term.  That keeps the estimate unbiased, strictly reduces its variance,
    and makes the report satisfy value = bias_term + noise_term exactly.

    Sampling is sharded with a fixed shard size and per-shard spawned
    streams, so the estimate is reproducible and independent of the thread
    count.  The standard error is the pooled per-sample standard deviation
    over sqrt(count).
    """
    _check_dims(system, data.dim, noise.dim, filt.dim)
    if count < 1:
        raise ValueError("count must be >= 1")
    sigma = system.sigma.values
    g = filt.coefficients.values
    damp = sigma * g - 1.0

    sizes = shard_sizes(count, MC_SHARD)
    seeds = np.random.SeedSequence(seed).spawn(2 * len(sizes))

    def run_shard(i: int):
        m = sizes[i]
        x = draw_coefficients(data.second_moments.values, data.dist, m, seeds[2 * i])
        e = draw_coefficients(noise.moments.values, noise.dist, m, seeds[2 * i + 1])
        bias_samples = np.sum((x * damp) ** 2, axis=1)
        noise_samples = np.sum((e * g) ** 2, axis=1)
        loss = bias_samples + noise_samples
        return (
            m,
            float(np.sum(loss)),
            float(np.sum(loss**2)),
            float(np.sum(bias_samples)),
            float(np.sum(noise_samples)),
        )

    results = thread_map(run_shard, range(len(sizes)), resolve_threads(threads))
    total = sum(r[1] for r in results)
    total_sq = sum(r[2] for r in results)
    bias_total = sum(r[3] for r in results)
    noise_total = sum(r[4] for r in results)
    mean = total / count
    var = max(total_sq / count - mean**2, 0.0)
    stderr = math.sqrt(var / count)
    return RiskReport(
        mean,
        bias_total / count,
        noise_total / count,
        "monte_carlo",
        count=count,
        stderr=stderr,
    )


@dataclass(frozen=True)
class DeterministicRisk:
    value: float
    bound_factor: float
    reference_risk: float


def deterministic_x_risk(
    system: SingularSystem,
    data: DataLaw,
    noise: NoiseLaw,
    x: CoefficientVector,
) -> DeterministicRisk:
    """Noise-averaged risk of the MSE-optimal filter at a fixed signal.

    value = sum (d^2 x^2 + p^2 s^2 d) / (p s^2 + d)^2, which is bounded by
    max(1, sup x^2/p) times the expected risk over the training law.  A
    coordinate with zero training power but non-zero signal makes the bound
    factor infinite, which is reported as such.
    """
    _check_dims(system, data.dim, noise.dim)
    xv = x.entries[: system.dim]
    sigma = system.sigma.values
    p = data.second_moments.values
    d = noise.moments.values
    denom = p * sigma**2 + d
    safe = np.where(denom > 0.0, denom, 1.0)
    value = float(np.sum(np.where(denom > 0.0, (d**2 * xv**2 + p**2 * sigma**2 * d) / safe**2, 0.0)))

    carries_signal = xv**2 > 0.0
    if np.any(carries_signal & (p == 0.0)):
        factor = math.inf
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(carries_signal, xv**2 / np.where(p > 0.0, p, 1.0), 0.0)
        factor = float(max(1.0, np.max(ratios, initial=0.0)))
    reference = analytic_risk(system, data, noise).value
    if math.isfinite(factor) and value > factor * reference * (1.0 + 1e-9) + 1e-300:
        raise AssertionError("deterministic risk exceeded its smoothness bound")
    return DeterministicRisk(value, factor, reference)


@dataclass(frozen=True)
class WorstCaseResult:
    value: float
    argmax: np.ndarray
    multiplier: Optional[float] = None
    hard_case: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "value": self.value,
                "argmax": self.argmax.tolist(),
                "multiplier": self.multiplier,
                "hard_case": self.hard_case,
            }
        )


def worst_case_l2(
    filt: FilterSpec, system: SingularSystem, x: CoefficientVector, delta: float
) -> WorstCaseResult:
    """Exact worst-case loss over the noise ball of radius delta.

    Maximizes sum (v + g*e)^2 over ||e|| <= delta, with v the filtered-signal
    residual.  The maximizer satisfies the stationarity system
    e_k = g_k v_k / (lam - g_k^2) with a multiplier lam > max g^2 fixed by
    the secular equation ||e(lam)|| = delta; when the residual vanishes on
    every coordinate attaining max g^2, the root may not exist and the
    remaining budget goes onto one such coordinate (hard case).
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if filt.dim != system.dim:
        raise DimensionError("filter does not match system")
    g = filt.coefficients.values
    v = (system.sigma.values * g - 1.0) * x.entries[: system.dim]
    value, eps, lam, hard = _ball_max(g, v, delta)
    return WorstCaseResult(value, eps, lam, hard)


def _ball_max(g: np.ndarray, v: np.ndarray, delta: float) -> Tuple[float, np.ndarray, Optional[float], bool]:
    if delta == 0.0 or np.all(g == 0.0):
        # No adversary, or a filter that ignores the data: loss is residual only.
        return float(np.sum(v**2)), np.zeros_like(g), None, False

    gsq = g**2
    gmax2 = float(np.max(gsq))
    weights = gsq * v**2
    at_max = gsq >= gmax2 * (1.0 - 1e-14)

    def norm_sq(lam: float) -> float:
        return float(np.sum(weights / (lam - gsq) ** 2))

    lo = gmax2 * (1.0 + 1e-15) + 1e-300
    hi = gmax2 + math.sqrt(gmax2) * math.sqrt(float(np.sum(v**2))) / delta + 1.0

    if norm_sq(lo) < delta**2:
        # Residual budget cannot be spent via the stationarity system alone:
        # the active-coordinate residuals vanish (or are negligibly small).
        lam = gmax2
        with np.errstate(divide="ignore", invalid="ignore"):
            eps = np.where(at_max, 0.0, g * v / (lam - gsq))
        eps = np.where(np.isfinite(eps), eps, 0.0)
        shortfall = delta**2 - float(np.sum(eps**2))
        eps = eps.copy()
        eps[int(np.argmax(gsq))] += math.sqrt(max(shortfall, 0.0))
        value = float(np.sum((v + g * eps) ** 2))
        return value, eps, lam, True

    lam = _bisect_decreasing(norm_sq, delta**2, lo, hi)
    eps = g * v / (lam - gsq)
    nrm = float(np.linalg.norm(eps))
    if nrm > 0:
        eps = eps * (delta / nrm)
    value = float(np.sum((v + g * eps) ** 2))
    return value, eps, lam, False


def _bisect_decreasing(fn, target: float, lo: float, hi: float, iters: int = 120) -> float:
    """Root of a decreasing function fn(x) = target on [lo, hi] by bisection."""
    f_lo = fn(lo)
    if f_lo < target:
        return lo
    while fn(hi) > target:
        hi = lo + 2.0 * (hi - lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def worst_case_sinf(
    filt: FilterSpec, system: SingularSystem, x: CoefficientVector, delta: float
) -> WorstCaseResult:
    """Worst-case loss over per-coefficient perturbations of size delta.

    Each coordinate is perturbed independently, so the supremum is attained
    coordinate-wise at w = sign((s*g - 1)*g*x) * delta and has the closed
    form sum (1 - s g)^2 x^2 + 2 delta |1 - s g| |g| |x| + g^2 delta^2.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if filt.dim != system.dim:
        raise DimensionError("filter does not match system")
    g = filt.coefficients.values
    xv = x.entries[: system.dim]
    damp = system.sigma.values * g - 1.0
    value = float(np.sum(damp**2 * xv**2 + 2.0 * delta * np.abs(damp) * np.abs(g) * np.abs(xv) + g**2 * delta**2))
    signs = np.sign(damp * g * xv)
    signs[signs == 0.0] = 1.0
    return WorstCaseResult(value, signs * delta)


def risk_bounds(
    system: SingularSystem, data: DataLaw, noise: NoiseLaw, split_n: int
) -> Dict[str, float]:
    """Closed-form upper bounds on the expected optimal risk.

    ``pi_bound`` ignores the noise, ``delta_bound`` ignores the signal, and
    ``split_bound`` pays the noise price on the first ``split_n`` coordinates
    and the signal price on the rest.  ``split_n = 0`` degenerates to
    ``pi_bound``, ``split_n = dim`` to ``delta_bound``.
    """
    _check_dims(system, data.dim, noise.dim)
    if not 0 <= split_n <= system.dim:
        raise ValueError(f"split index must lie in [0, {system.dim}]")
    sigma = system.sigma.values
    p = data.second_moments.values
    d = noise.moments.values
    pi_bound = float(np.sum(p))
    delta_bound = float(np.sum(d / sigma**2))
    split_bound = float(np.sum(d[:split_n] / sigma[:split_n] ** 2) + np.sum(p[split_n:]))
    reference = analytic_risk(system, data, noise).value
    for name, bound in (("pi", pi_bound), ("delta", delta_bound), ("split", split_bound)):
        if reference > bound * (1.0 + 1e-12) + 1e-300:
            raise AssertionError(f"analytic risk exceeds the {name} bound")
    return {"pi_bound": pi_bound, "delta_bound": delta_bound, "split_bound": split_bound}


def _check_dims(system: SingularSystem, *dims: int) -> None:
    for d in dims:
        if d != system.dim:
            raise DimensionError(f"dimension {d} does not match system dimension {system.dim}")
