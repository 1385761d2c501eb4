"""Numerical training of the ball-adversary filter and convergence probes.

The training objective (expected worst-case loss over a noise ball) has no
closed-form minimizer, so it is minimized by projected subgradient descent
over a frozen training sample.  The inner maximization is solved exactly for
every sample by the same secular-equation solver the risk module uses
(vectorized across samples), which makes the outer subgradient a true
Danskin gradient almost everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .filters import FilterSpec, adv_inf_filter
from .laws import DataLaw, law_from_moments
from .operators import SingularSystem
from .sequences import SpectralSequence

__all__ = [
    "TrainConfig",
    "TrainResult",
    "train_adv2",
    "batch_worst_case",
    "empirical_objective",
    "capped_pinv_filter",
    "truncated_pinv_filter",
    "adv2_convergence_probe",
    "adv_inf_convergence_probe",
]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings for the ball-adversary training problem."""

    sample_count: int = 32
    max_iters: int = 500
    step_rule: str = "fixed"
    step_size: float = 1.0
    seed: int = 0
    tolerance: float = 1e-12
    project: bool = True
    record_every: int = 1

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.step_rule not in ("fixed", "diminishing"):
            raise ValueError("step_rule must be 'fixed' or 'diminishing'")


@dataclass(frozen=True)
class TrainResult:
    filter: FilterSpec
    objective: float
    trace: List[Tuple[int, float, float, float]]
    converged: bool
    warning: Optional[str]
    samples_seed: int


def batch_worst_case(
    g: np.ndarray, sigma: np.ndarray, xs: np.ndarray, delta: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact worst-case loss and maximizer for every sample row of ``xs``.

    Returns (values, eps) with values[i] = max over ||e|| <= delta of
    sum ((sigma*g - 1)*x_i + g*e)^2 and eps[i] the attaining perturbation.
    """
    v = xs * (sigma * g - 1.0)
    m, n = v.shape
    eps = np.zeros_like(v)
    if delta == 0.0 or np.all(g == 0.0):
        return np.sum(v**2, axis=1), eps

    gsq = g**2
    gmax2 = float(np.max(gsq))
    at_max = gsq >= gmax2 * (1.0 - 1e-14)
    weights = gsq * v**2
    lo = gmax2 * (1.0 + 1e-15) + 1e-300
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        phi_lo = np.sum(weights / (lo - gsq) ** 2, axis=1)
    regular = phi_lo >= delta**2

    if np.any(regular):
        w_reg = weights[regular]
        v_norms = np.sqrt(np.sum(v[regular] ** 2, axis=1))
        lo_vec = np.full(v_norms.shape, lo)
        hi_vec = gmax2 + math.sqrt(gmax2) * v_norms / delta + 1.0
        for _ in range(110):
            mid = 0.5 * (lo_vec + hi_vec)
            phi = np.sum(w_reg / (mid[:, None] - gsq) ** 2, axis=1)
            too_big = phi > delta**2
            lo_vec = np.where(too_big, mid, lo_vec)
            hi_vec = np.where(too_big, hi_vec, mid)
        lam = 0.5 * (lo_vec + hi_vec)
        e = g * v[regular] / (lam[:, None] - gsq)
        norms = np.linalg.norm(e, axis=1, keepdims=True)
        e = np.where(norms > 0.0, e * (delta / np.where(norms > 0.0, norms, 1.0)), 0.0)
        eps[regular] = e

    hard = ~regular
    if np.any(hard):
        with np.errstate(divide="ignore", invalid="ignore"):
            e = g * v[hard] / (gmax2 - gsq)
        e[:, at_max] = 0.0
        e = np.where(np.isfinite(e), e, 0.0)
        shortfall = delta**2 - np.sum(e**2, axis=1)
        e[:, int(np.argmax(gsq))] += np.sqrt(np.maximum(shortfall, 0.0))
        eps[hard] = e

    values = np.sum((v + g * eps) ** 2, axis=1)
    return values, eps


def empirical_objective(g: np.ndarray, sigma: np.ndarray, xs: np.ndarray, delta: float) -> float:
    values, _ = batch_worst_case(g, sigma, xs, delta)
    return float(np.mean(values))


def capped_pinv_filter(system: SingularSystem, cap: float) -> FilterSpec:
    """Pseudo-inverse with coefficients capped at ``cap`` in sup norm."""
    if cap < 0:
        raise ValueError("cap must be >= 0")
    g = np.minimum(1.0 / system.sigma.values, cap)
    return FilterSpec(SpectralSequence(g, f"capped-pinv({cap:g})"), "custom", {"cap": cap})


def truncated_pinv_filter(system: SingularSystem, budget: float) -> Tuple[FilterSpec, int]:
    """Pseudo-inverse truncated to an l2 coefficient budget.

    Keeps the leading coordinates while the running sum of 1/sigma^2 stays
    within budget**2, zeroing the rest, so the coefficient norm never
    exceeds the budget.  Returns the filter and the number of kept
    coordinates.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    inv_sq = 1.0 / system.sigma.values**2
    prefix = np.cumsum(inv_sq)
    kept = int(np.searchsorted(prefix, budget**2, side="right"))
    g = np.zeros(system.dim)
    g[:kept] = 1.0 / system.sigma.values[:kept]
    if math.sqrt(float(np.sum(g**2))) > budget * (1.0 + 1e-12):
        raise AssertionError("truncated pseudo-inverse exceeded its l2 budget")
    return FilterSpec(SpectralSequence(g, f"truncated-pinv({budget:g})"), "custom", {"budget": budget}), kept


def _initial_candidates(system: SingularSystem, xs: np.ndarray, delta: float) -> List[np.ndarray]:
    sigma = system.sigma.values
    q = np.mean(xs**2, axis=0)
    m_abs = np.mean(np.abs(xs), axis=0)
    candidates = [np.zeros(system.dim)]
    with np.errstate(divide="ignore", invalid="ignore"):
        mse_like = np.where(q > 0.0, sigma * q / (q * sigma**2 + delta**2), 0.0)
    candidates.append(np.nan_to_num(mse_like))
    if delta > 0.0:
        cap = 1.0 / math.sqrt(delta)
        candidates.append(capped_pinv_filter(system, cap).coefficients.values.copy())
        emp_law = law_from_moments(np.maximum(q, 1e-300), abs_moments=m_abs, dist="gaussian")
        candidates.append(adv_inf_filter(system, emp_law, delta).coefficients.values.copy())
    else:
        candidates.append(np.where(q > 0.0, 1.0 / sigma, 0.0))
    return candidates


def train_adv2(
    system: SingularSystem,
    data: DataLaw,
    delta: float,
    cfg: TrainConfig,
    warm_start: Optional[np.ndarray] = None,
) -> TrainResult:
    """Projected subgradient descent on the empirical worst-case objective.

    The expectation is frozen over ``cfg.sample_count`` draws from the data
    law (reproducible per seed).  Iterates are projected onto the box
    [0, 1/sigma] per coordinate, the range known optimal for the
    per-coefficient adversary and adopted here as a stabilizer.  The best
    iterate seen is returned, so the reported objective is non-increasing by
    construction.  A diagonal curvature preconditioner makes the noiseless
    problem converge in one step and conditions the general one.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    sigma = system.sigma.values
    xs = data.sample_array(cfg.sample_count, cfg.seed)

    q = np.mean(xs**2, axis=0)
    curvature = 2.0 * (sigma * np.sqrt(q) + delta) ** 2
    floor = max(float(np.max(curvature)) * 1e-12, 1e-300)
    precond = 1.0 / np.maximum(curvature, floor)
    upper = 1.0 / sigma

    candidates = _initial_candidates(system, xs, delta)
    if warm_start is not None:
        candidates.append(np.asarray(warm_start, dtype=float).copy())
    if cfg.project:
        candidates = [np.clip(c, 0.0, upper) for c in candidates]
    objectives = [empirical_objective(c, sigma, xs, delta) for c in candidates]
    g = candidates[int(np.argmin(objectives))].copy()

    best_g = g.copy()
    best_obj = float(np.min(objectives))
    trace: List[Tuple[int, float, float, float]] = []
    converged = False
    for k in range(1, cfg.max_iters + 1):
        values, eps = batch_worst_case(g, sigma, xs, delta)
        objective = float(np.mean(values))
        residual = (sigma * g - 1.0) * xs + g * eps
        grad = 2.0 * np.mean(residual * (sigma * xs + eps), axis=0)
        step = cfg.step_size if cfg.step_rule == "fixed" else cfg.step_size / math.sqrt(k)
        g_next = g - step * precond * grad
        if cfg.project:
            g_next = np.clip(g_next, 0.0, upper)
        move = float(np.max(np.abs(g_next - g)))
        grad_norm = float(np.linalg.norm(grad))
        if objective < best_obj:
            best_obj = objective
            best_g = g.copy()
        if k % cfg.record_every == 0 or k == 1:
            trace.append((k, objective, grad_norm, step))
        g = g_next
        if move < cfg.tolerance * max(1.0, float(np.max(np.abs(g)))):
            converged = True
            break
    final_obj = empirical_objective(g, sigma, xs, delta)
    if final_obj < best_obj:
        best_obj = final_obj
        best_g = g.copy()
    warning = None if converged else "max_iters reached before the iterate settled"
    filt = FilterSpec(
        SpectralSequence(best_g, f"adv2(delta={delta:g})"),
        "adv_2",
        {"delta": delta},
        "trained ball-adversary filter",
    )
    return TrainResult(filt, best_obj, trace, converged, warning, cfg.seed)


@dataclass(frozen=True)
class Adv2ProbeRow:
    delta: float
    objective: float
    bound: float
    bound_unsquared: float
    bound_population: float
    cap: float
    truncation_kept: int
    truncation_norm: float


def adv2_convergence_probe(
    system: SingularSystem,
    data: DataLaw,
    delta_grid: Sequence[float],
    cfg: TrainConfig,
) -> List[Adv2ProbeRow]:
    """Train along a decreasing budget grid and check the vanishing bound.

    For every budget the trained objective is compared against the surrogate
    bound 2*[sum (1 - sigma*min(r, 1/sigma))^2 * P + delta^2 r^2] with
    r = 1/sqrt(delta).  The squared damping factor is used (the capped filter
    makes both readings true, the squared one is tighter); the unsquared
    variant is reported alongside.  The bound is evaluated with the empirical
    second moments of the frozen training sample (the distribution the
    trainer actually faces) and with the population moments for reference.  The objective must sit below the empirical bound and decrease
    along the grid.
    """
    deltas = [float(d) for d in delta_grid]
    if len(deltas) < 1 or any(d <= 0 for d in deltas):
        raise ValueError("delta grid must contain positive budgets")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta grid must be strictly decreasing")

    sigma = system.sigma.values
    xs = data.sample_array(cfg.sample_count, cfg.seed)
    q_emp = np.mean(xs**2, axis=0)
    q_pop = data.second_moments.values

    rows: List[Adv2ProbeRow] = []
    warm: Optional[np.ndarray] = None
    for delta in deltas:
        # warm-starting from the previous best iterate makes the objective
        # provably non-increasing along the shrinking budgets: the worst case
        # over a smaller ball can only be smaller at the same filter
        result = train_adv2(system, data, delta, cfg, warm_start=warm)
        warm = result.filter.coefficients.values
        r = 1.0 / math.sqrt(delta)
        capped = np.minimum(r, 1.0 / sigma)
        damp = 1.0 - sigma * capped
        bound_emp = 2.0 * (float(np.sum(damp**2 * q_emp)) + delta**2 * r**2)
        bound_unsq = 2.0 * (float(np.sum(damp * q_emp)) + delta**2 * r**2)
        bound_pop = 2.0 * (float(np.sum(damp**2 * q_pop)) + delta**2 * r**2)
        trunc, kept = truncated_pinv_filter(system, r)
        rows.append(
            Adv2ProbeRow(
                delta,
                result.objective,
                bound_emp,
                bound_unsq,
                bound_pop,
                r,
                kept,
                float(np.linalg.norm(trunc.coefficients.values)),
            )
        )
    for row in rows:
        if row.objective > row.bound * (1.0 + 1e-9) + 1e-300:
            raise AssertionError(
                f"trained objective {row.objective:.6e} exceeds the surrogate bound {row.bound:.6e}"
            )
    for prev, nxt in zip(rows, rows[1:]):
        if nxt.objective > prev.objective * (1.0 + 1e-9) + 1e-300:
            raise AssertionError("objective failed to decrease along the shrinking budget grid")
    return rows


@dataclass(frozen=True)
class AdvInfProbeRow:
    delta: float
    risk: float
    bound: float
    bound_shifted_moments: float
    filter_l2_sq: float


def adv_inf_convergence_probe(
    system: SingularSystem,
    data_train: DataLaw,
    data_eval: DataLaw,
    delta_grid: Sequence[float],
) -> List[AdvInfProbeRow]:
    """Distribution-shift convergence of the per-coefficient worst-case filter.

    The filter is built from the training law; the worst-case risk is
    evaluated in closed form under the evaluation law.  The dominating bound
    2 * sum_{not fully inverted} P_eval + 2 * delta^2 * sum g^2 indexes the
    first sum by the coordinates the trained filter does not fully invert
    (those are determined by the training moments).  The variant that indexes
    by the evaluation moments is reported for comparison but not asserted:
    under a shift it can undercount the damped coordinates.
    """
    deltas = [float(d) for d in delta_grid]
    if len(deltas) < 1 or any(d <= 0 for d in deltas):
        raise ValueError("delta grid must contain positive budgets")
    sigma = system.sigma.values
    p_eval = data_eval.second_moments.values
    m_eval = data_eval.abs_moments.values

    rows: List[AdvInfProbeRow] = []
    for delta in deltas:
        filt = adv_inf_filter(system, data_train, delta)
        g = filt.coefficients.values
        damp = 1.0 - sigma * g
        risk = float(np.sum(damp**2 * p_eval + 2.0 * delta * damp * g * m_eval + g**2 * delta**2))
        not_inverted = g < (1.0 / sigma) * (1.0 - 1e-12)
        g_l2_sq = float(np.sum(g**2))
        bound = 2.0 * float(np.sum(p_eval[not_inverted])) + 2.0 * delta**2 * g_l2_sq
        shifted_mask = delta >= sigma * m_eval
        bound_shifted = 2.0 * float(np.sum(p_eval[shifted_mask])) + 2.0 * delta**2 * g_l2_sq
        if risk > bound * (1.0 + 1e-9) + 1e-300:
            raise AssertionError(f"worst-case risk {risk:.6e} exceeds its dominating bound {bound:.6e}")
        rows.append(AdvInfProbeRow(delta, risk, bound, bound_shifted, g_l2_sq))
    if len(rows) >= 2 and rows[0].risk > 0.0:
        if not (rows[-1].risk < rows[0].risk and rows[-1].bound < rows[0].bound):
            raise AssertionError("risk and bound failed to shrink along the budget grid")
    return rows
