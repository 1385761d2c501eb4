"""Empirical convergence-rate experiments and supporting-lemma validators.

Rate experiments sweep a geometric noise-level grid, evaluate the expected
optimal risk in closed form (no sampling noise in the slope fits), and
compare the fitted log-log slope against the theoretical exponent:

    polynomial moment decay a, noise growth b:  2*(a-1)/(a+b) for b > -1,
                                                2 for b < -1;
    smoothness order mu under the source condition:  4*mu/(1+2*mu).

Truncation at dimension N is the desk-scale surrogate of the infinite model,
so every experiment can re-run itself at 2N and report the slope shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .laws import DataLaw, colored_noise, law_from_decay, white_noise
from .operators import SingularSystem, make_synthetic
from .risk import analytic_risk
from .sequences import SpectralSequence, as_array

__all__ = [
    "RateExperiment",
    "SlopeFit",
    "fit_loglog_slope",
    "decay_instance",
    "source_instance",
    "run_rate_experiment",
    "theory_exponent_decay",
    "theory_exponent_source",
    "classical_reference_curve",
    "validate_power_sum_lemmas",
    "validate_interpolation_lemma",
    "power_sum_random_sweep",
    "interpolation_random_sweep",
    "tail_power_sum_bounds",
    "saturation_probe",
]


# ---------------------------------------------------------------------------
# slope fitting


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    dropped_largest: bool


def fit_loglog_slope(deltas: Sequence[float], risks: Sequence[float]) -> SlopeFit:
    """Least-squares slope of log risk against log noise level.

    The rate statements are asymptotic, so the largest noise level is dropped
    when its residual exceeds three times the fit RMSE (pre-asymptotic
    guard).  The RMSE is taken over the remaining points: a single grossly
    saturated top point inflates the all-point RMSE enough to mask itself.
    """
    d = np.asarray(deltas, dtype=float)
    r = np.asarray(risks, dtype=float)
    if d.size < 3:
        raise ValueError("need at least 3 grid points for a slope fit")
    if np.any(d <= 0) or np.any(r <= 0):
        raise ValueError("noise levels and risks must be positive")
    order = np.argsort(-d)
    x = np.log(d[order])
    y = np.log(r[order])

    slope, intercept, resid = _ols(x, y)
    rmse_rest = float(np.sqrt(np.mean(resid[1:] ** 2)))
    dropped = False
    if rmse_rest > 0 and abs(resid[0]) > 3.0 * rmse_rest:
        x, y = x[1:], y[1:]
        slope, intercept, resid = _ols(x, y)
        dropped = True
    dof = max(x.size - 2, 1)
    denom = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / denom) if denom > 0 else math.inf
    return SlopeFit(slope, intercept, stderr, dropped)


def _ols(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, np.ndarray]:
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    intercept = float(ym - slope * xm)
    return slope, intercept, y - (intercept + slope * x)


# ---------------------------------------------------------------------------
# instances realizing the rate assumptions


def theory_exponent_decay(a: float, b: float) -> float:
    if a <= 1:
        raise ValueError("decay exponent a must be > 1")
    if b > -1:
        return 2.0 * (a - 1.0) / (a + b)
    return 2.0


def theory_exponent_source(mu: float) -> float:
    if mu < 0:
        raise ValueError("mu must be >= 0")
    return 4.0 * mu / (1.0 + 2.0 * mu)


def decay_instance(n: int, a: float, b: float, scale: float = 1.0):
    """Operator, data law and noise family realizing the decay assumptions.

    The constraint is only on the ratio of noise power to sigma^2.  For
    b >= 0 it is realized as white noise against sigma_k = k**(-b/2); for
    b < 0 as colored noise with shape sigma^2 * k^b against sigma_k = 1/k.
    Either way the optimal risk depends on (a, b, delta) alone.
    """
    if b >= 0:
        sigma = np.arange(1, n + 1, dtype=float) ** (-b / 2.0)
        system = SingularSystem(SpectralSequence(sigma, f"decay-b({b:g})"))
        noise_family = lambda delta: white_noise(n, delta)
    else:
        system = make_synthetic(n, "polynomial", 1.0)
        gamma = system.sigma.values**2 * np.arange(1, n + 1, dtype=float) ** b
        noise_family = lambda delta: colored_noise(delta, gamma)
    data = law_from_decay(n, a, scale)
    return system, data, noise_family


def source_instance(n: int, mu: float, sigma_rate: float, weight_rate: float, noise_rate: float):
    """Instance under the probabilistic source condition.

    sigma_k = k**(-sigma_rate); the signal power is sigma^(4 mu) times the
    smoothness weights k**(-weight_rate); the noise shape is
    k**(-noise_rate).  The mixed sum sum w^(1/(1+2mu)) * gamma^(2mu/(1+2mu))
    converges iff (weight_rate + 2*mu*noise_rate) / (1 + 2*mu) > 1, which is
    checked, and its truncated value is returned as the constant.
    """
    idx = np.arange(1, n + 1, dtype=float)
    system = make_synthetic(n, "polynomial", sigma_rate)
    weights = idx ** (-weight_rate)
    gamma = idx ** (-noise_rate)
    exponent = (weight_rate + 2.0 * mu * noise_rate) / (1.0 + 2.0 * mu)
    if exponent <= 1.0:
        raise ValueError(
            f"mixed source sum diverges: exponent {exponent:.3f} <= 1 for mu={mu:g}"
        )
    nu = 2.0 * mu
    constant = float(np.sum(weights ** (1.0 / (1.0 + nu)) * gamma ** (nu / (1.0 + nu))))
    from .laws import law_from_source_condition

    data = law_from_source_condition(system, mu, weights)
    noise_family = lambda delta: colored_noise(delta, gamma)
    return system, data, noise_family, constant


@dataclass(frozen=True)
class RateExperiment:
    kind: str
    params: Dict[str, float]
    n: int
    deltas: List[float]
    risks: List[float]
    split_bounds: List[float]
    fitted_slope: float
    slope_stderr: float
    theory_slope: float
    dropped_largest: bool
    doubled_slope: Optional[float] = None
    slope_shift: Optional[float] = None


def run_rate_experiment(
    kind: str,
    n: int,
    delta_grid: Sequence[float],
    doubling_check: bool = True,
    **params: float,
) -> RateExperiment:
    """Sweep the grid, fit the slope, optionally re-run at twice the dimension.

    ``kind="decay"`` takes exponents ``a`` and ``b``; ``kind="source"`` takes
    ``mu`` plus the instance shape ``sigma_rate``, ``weight_rate``,
    ``noise_rate``.  Alongside each risk the best split-sum upper bound over
    all split points is recorded; it obeys the same rate.
    """
    deltas = sorted((float(d) for d in delta_grid), reverse=True)
    if len(deltas) < 3:
        raise ValueError("delta grid must contain at least 3 points")
    if any(d <= 0 for d in deltas):
        raise ValueError("noise levels must be positive")

    def sweep(dim: int) -> Tuple[List[float], List[float]]:
        if kind == "decay":
            system, data, noise_family = decay_instance(dim, params["a"], params["b"], params.get("scale", 1.0))
        elif kind == "source":
            system, data, noise_family, _ = source_instance(
                dim,
                params["mu"],
                params.get("sigma_rate", 1.0),
                params["weight_rate"],
                params.get("noise_rate", 0.0),
            )
        else:
            raise ValueError(f"unknown experiment kind {kind!r}")
        risks = []
        bounds = []
        sigma = system.sigma.values
        p = data.second_moments.values
        for delta in deltas:
            noise = noise_family(delta)
            risks.append(analytic_risk(system, data, noise).value)
            d = noise.moments.values
            noise_cost = np.concatenate([[0.0], np.cumsum(d / sigma**2)])
            signal_cost = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])
            bounds.append(float(np.min(noise_cost + signal_cost)))
        return risks, bounds

    risks, split_bounds = sweep(n)
    fit = fit_loglog_slope(deltas, risks)
    if kind == "decay":
        theory = theory_exponent_decay(params["a"], params["b"])
    else:
        theory = theory_exponent_source(params["mu"])

    doubled_slope = None
    shift = None
    if doubling_check:
        risks2, _ = sweep(2 * n)
        fit2 = fit_loglog_slope(deltas, risks2)
        doubled_slope = fit2.slope
        shift = abs(fit2.slope - fit.slope)
    return RateExperiment(
        kind,
        dict(params),
        n,
        deltas,
        risks,
        split_bounds,
        fit.slope,
        fit.stderr,
        theory,
        fit.dropped_largest,
        doubled_slope,
        shift,
    )


def classical_reference_curve(mu: float, rho: float, delta_grid: Sequence[float]) -> np.ndarray:
    """Squared classical source-set bound delta^(4mu/(2mu+1)) * rho^(2/(2mu+1)).

    Squared because every risk here is a squared error; the overlay curve for
    mu = 0 is the constant rho^2 (no rate).
    """
    if mu < 0 or rho <= 0:
        raise ValueError("need mu >= 0 and rho > 0")
    d = np.asarray(delta_grid, dtype=float)
    return d ** (4.0 * mu / (2.0 * mu + 1.0)) * rho ** (2.0 / (2.0 * mu + 1.0))


# ---------------------------------------------------------------------------
# lemma validators


def tail_power_sum_bounds(a: float, n: int, extra_terms: int = 10000) -> Tuple[float, float]:
    """Rigorous two-sided bounds on sum_{k > n} k**(-a).

    The first ``extra_terms`` tail terms are summed exactly; the remainder is
    bracketed by integrals.  Returns (lower, upper).
    """
    if a <= 1:
        raise ValueError("tail sum requires a > 1")
    k = np.arange(n + 1, n + extra_terms + 1, dtype=float)
    partial = float(np.sum(k ** (-a)))
    cut = float(n + extra_terms)
    upper = partial + cut ** (1.0 - a) / (a - 1.0)
    lower = partial + (cut + 1.0) ** (1.0 - a) / (a - 1.0)
    return lower, upper


def validate_power_sum_lemmas(a: float, b: float, n_grid: Sequence[int]) -> List[Dict[str, float]]:
    """Check the power-sum estimates that drive the decay-rate analysis.

    For every N in the grid:
      tail    sum_{k>N} k^{-a}        <= a/(a-1) * (N+1)^(1-a)
      head    sum_{k<=N} k^b          <= N^(1+b)/(1+b)   for -1 < b <= 0
              sum_{k<=N} k^b          <= N^(1+b)          for b > 0
    The infinite tail is replaced by a rigorous upper bound (exact partial
    sum plus an integral remainder), so a reported pass certifies the true
    inequality.
    """
    if a <= 1:
        raise ValueError("a must be > 1")
    report = []
    for n in n_grid:
        n = int(n)
        if n < 1:
            raise ValueError("grid entries must be >= 1")
        _, tail_ub = tail_power_sum_bounds(a, n)
        tail_bound = a / (a - 1.0) * (n + 1.0) ** (1.0 - a)
        row = {
            "n": float(n),
            "tail_upper": tail_ub,
            "tail_bound": tail_bound,
            "tail_ok": tail_ub <= tail_bound * (1.0 + 1e-12),
        }
        head = float(np.sum(np.arange(1, n + 1, dtype=float) ** b))
        if -1.0 < b <= 0.0:
            head_bound = n ** (1.0 + b) / (1.0 + b)
        elif b > 0.0:
            head_bound = float(n) ** (1.0 + b)
        else:
            head_bound = math.inf
        row["head_sum"] = head
        row["head_bound"] = head_bound
        row["head_ok"] = head <= head_bound * (1.0 + 1e-12)
        report.append(row)
    return report


def power_sum_random_sweep(draws: int, seed: int = 0) -> Dict[str, int]:
    """Randomized zero-violation sweep of the power-sum estimates.

    Draws (a, b, N) with a in (1.05, 4), b in (-0.999, 3), N log-uniform up
    to 2000.  Tail sums use exact partial sums of 10000 further terms plus an
    integral remainder, head sums are exact.
    """
    rng = np.random.default_rng(seed)
    a = rng.uniform(1.05, 4.0, size=draws)
    b = rng.uniform(-0.999, 3.0, size=draws)
    n = np.floor(10 ** rng.uniform(0.0, math.log10(2000.0), size=draws)).astype(int)
    n = np.maximum(n, 1)

    tail_viol = 0
    head_viol = 0
    extra = 10000
    chunk = 512
    for start in range(0, draws, chunk):
        sl = slice(start, min(start + chunk, draws))
        a_c, b_c, n_c = a[sl], b[sl], n[sl]
        offsets = np.arange(1, extra + 1, dtype=float)
        tail_terms = (n_c[:, None] + offsets) ** (-a_c[:, None])
        cut = n_c + extra
        tail_ub = tail_terms.sum(axis=1) + cut ** (1.0 - a_c) / (a_c - 1.0)
        tail_bound = a_c / (a_c - 1.0) * (n_c + 1.0) ** (1.0 - a_c)
        tail_viol += int(np.count_nonzero(tail_ub > tail_bound * (1.0 + 1e-12)))

        heads = np.arange(1, int(np.max(n_c)) + 1, dtype=float)
        powered = heads[None, :] ** b_c[:, None]
        mask = heads[None, :] <= n_c[:, None]
        head_sum = np.sum(powered * mask, axis=1)
        head_bound = np.where(
            b_c <= 0.0,
            n_c ** (1.0 + b_c) / (1.0 + b_c),
            n_c.astype(float) ** (1.0 + b_c),
        )
        head_viol += int(np.count_nonzero(head_sum > head_bound * (1.0 + 1e-12)))
    return {"draws": draws, "tail_violations": tail_viol, "head_violations": head_viol}


def validate_interpolation_lemma(
    mu: float,
    source_weights,
    noise_profile,
    sigma,
    delta_grid: Sequence[float],
) -> Dict[str, float]:
    """Per-index and summed interpolation inequality under the source condition.

    With nu = 2*mu, signal power P = sigma^(2 nu) * w and noise power
    D = delta^2 * gamma, every index satisfies

        P*D/(P*sigma^2 + D) <= delta^(2nu/(1+nu)) * w^(1/(1+nu)) * gamma^(nu/(1+nu))

    and therefore the summed risk is bounded by the mixed sum times the
    delta power.  Indices where both sides vanish are counted as satisfied.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    w = as_array(source_weights)
    gamma = as_array(noise_profile)
    s = as_array(sigma)
    if np.any(w < 0) or np.any(gamma < 0) or np.any(s <= 0):
        raise ValueError("weights and noise shape must be >= 0, sigma > 0")
    nu = 2.0 * mu
    mixed_sum = float(np.sum(w ** (1.0 / (1.0 + nu)) * gamma ** (nu / (1.0 + nu))))
    worst_gap = -math.inf
    violations = 0
    for delta in delta_grid:
        p = s ** (2.0 * nu) * w
        d = delta**2 * gamma
        denom = p * s**2 + d
        lhs = np.where(denom > 0.0, p * d / np.where(denom > 0.0, denom, 1.0), 0.0)
        rhs = delta ** (2.0 * nu / (1.0 + nu)) * w ** (1.0 / (1.0 + nu)) * gamma ** (nu / (1.0 + nu))
        bad = lhs > rhs * (1.0 + 1e-12) + 1e-300
        violations += int(np.count_nonzero(bad))
        summed_lhs = float(np.sum(lhs))
        summed_rhs = delta ** (2.0 * nu / (1.0 + nu)) * mixed_sum
        if summed_lhs > summed_rhs * (1.0 + 1e-12) + 1e-300:
            violations += 1
        worst_gap = max(worst_gap, float(np.max(lhs - rhs, initial=-math.inf)))
    return {"violations": violations, "mixed_sum": mixed_sum, "worst_gap": worst_gap}


def interpolation_random_sweep(draws: int, seed: int = 0) -> Dict[str, int]:
    """Randomized zero-violation sweep of the per-index interpolation bound."""
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.0, 3.0, size=draws)
    w = 10 ** rng.uniform(-6, 2, size=draws)
    gamma = 10 ** rng.uniform(-6, 2, size=draws)
    s = 10 ** rng.uniform(-4, 1, size=draws)
    delta = 10 ** rng.uniform(-6, 1, size=draws)
    nu = 2.0 * mu
    p = s ** (2.0 * nu) * w
    d = delta**2 * gamma
    lhs = p * d / (p * s**2 + d)
    rhs = delta ** (2.0 * nu / (1.0 + nu)) * w ** (1.0 / (1.0 + nu)) * gamma ** (nu / (1.0 + nu))
    violations = int(np.count_nonzero(lhs > rhs * (1.0 + 1e-12) + 1e-300))
    return {"draws": draws, "violations": violations}


def saturation_probe(
    system: SingularSystem,
    data: DataLaw,
    noise_family,
    x,
    delta_grid: Sequence[float],
) -> List[Dict[str, float]]:
    """Sandwich check for the fixed-signal risk of the MSE-optimal filter.

    Per noise level the deterministic risk equals
    sum (D*x^2/P + sigma^2*P) * P*D/(P s^2 + D)^2 and is therefore within a
    factor two of the same sum with max(D*x^2/P, sigma^2*P) in place of the
    sum of the two competitors; whichever competitor wins identifies the
    saturation regime.
    """
    xv = np.asarray(x, dtype=float)[: system.dim]
    sigma = system.sigma.values
    p = data.second_moments.values
    if np.any(p <= 0):
        raise ValueError("training law must have positive power everywhere")
    rows = []
    for delta in delta_grid:
        d = noise_family(delta).moments.values
        denom = p * sigma**2 + d
        det_risk = float(np.sum((d**2 * xv**2 + p**2 * sigma**2 * d) / denom**2))
        surrogate = float(np.sum(np.maximum(d * xv**2 / p, sigma**2 * p) * p * d / denom**2))
        ratio = det_risk / surrogate if surrogate > 0 else math.nan
        if surrogate > 0 and not (1.0 - 1e-12 <= ratio <= 2.0 + 1e-12):
            raise AssertionError(f"saturation sandwich violated: ratio {ratio:.6f}")
        rows.append({"delta": float(delta), "risk": det_risk, "surrogate": surrogate, "ratio": ratio})
    return rows
