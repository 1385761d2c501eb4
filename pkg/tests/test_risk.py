import math

import numpy as np
import pytest

from spectralreg import (
    CoefficientVector,
    SingularSystem,
    SpectralSequence,
    analytic_risk,
    custom_filter,
    deterministic_x_risk,
    generic_risk,
    law_from_moments,
    monte_carlo_risk,
    mse_filter,
    noise_from_moments,
    risk_bounds,
    tikhonov,
    worst_case_l2,
    worst_case_sinf,
)
from conftest import random_instance
from oracles import exhaustive_sign_patterns, multistart_ball_ascent


def test_analytic_risk_zero_noise():
    system = SingularSystem(SpectralSequence(np.array([1.0, 0.5])))
    data = law_from_moments([1.0, 1.0])
    assert analytic_risk(system, data, noise_from_moments([0.0, 0.0])).value == 0.0


def test_analytic_risk_balanced_substitution():
    sigma = np.array([2.0, 0.5])
    p = np.array([1.0, 3.0])
    d = p * sigma**2
    system = SingularSystem(SpectralSequence(sigma))
    report = analytic_risk(system, law_from_moments(p), noise_from_moments(d))
    assert report.value == pytest.approx(float(np.sum(d / (2.0 * sigma**2))), rel=1e-14)
    assert report.value == pytest.approx(report.bias_term + report.noise_term, rel=1e-12)


def test_analytic_risk_dead_coordinates_contribute_zero():
    system = SingularSystem(SpectralSequence(np.array([1.0, 1.0])))
    report = analytic_risk(
        system, law_from_moments([1.0, 0.0]), noise_from_moments([0.01, 0.0])
    )
    assert math.isfinite(report.value)


def test_analytic_equals_generic_at_mse(rng):
    system, data, noise = random_instance(rng, 12)
    filt = mse_filter(system, data, noise)
    a = analytic_risk(system, data, noise)
    b = generic_risk(filt, system, data, noise)
    assert a.value == pytest.approx(b.value, rel=1e-14)


def test_generic_risk_pseudo_inverse_and_zero(rng):
    system, data, noise = random_instance(rng, 6)
    pinv = custom_filter(1.0 / system.sigma.values)
    report = generic_risk(pinv, system, data, noise)
    assert report.bias_term == pytest.approx(0.0, abs=1e-18)
    assert report.value == pytest.approx(
        float(np.sum(noise.moments.values / system.sigma.values**2)), rel=1e-12
    )
    zero = custom_filter(np.zeros(6))
    assert generic_risk(zero, system, data, noise).value == pytest.approx(
        data.total_energy(), rel=1e-12
    )


def test_mse_beats_tikhonov(rng):
    system, data, noise = random_instance(rng, 10)
    best = analytic_risk(system, data, noise).value
    for alpha in np.geomspace(1e-4, 10.0, 20):
        assert best <= generic_risk(tikhonov(system, alpha), system, data, noise).value * (1 + 1e-12)


def test_monte_carlo_matches_analytic(rng):
    system, data, noise = random_instance(rng, 6)
    filt = mse_filter(system, data, noise)
    mc = monte_carlo_risk(filt, system, data, noise, count=200_000, seed=42)
    exact = analytic_risk(system, data, noise).value
    assert abs(mc.value - exact) <= 4.0 * mc.stderr
    assert mc.count == 200_000
    # the decomposition is exact for the estimator, not just in expectation
    assert mc.value == pytest.approx(mc.bias_term + mc.noise_term, rel=1e-12)


def test_monte_carlo_thread_count_invariance(rng):
    system, data, noise = random_instance(rng, 4)
    filt = mse_filter(system, data, noise)
    one = monte_carlo_risk(filt, system, data, noise, count=150_000, seed=9, threads=1)
    four = monte_carlo_risk(filt, system, data, noise, count=150_000, seed=9, threads=4)
    assert one.value == four.value
    assert one.stderr == four.stderr


# --- deterministic signal ----------------------------------------------------


def test_deterministic_risk_matches_training_power(rng):
    system, data, noise = random_instance(rng, 8)
    x = CoefficientVector(np.sqrt(data.second_moments.values))
    report = deterministic_x_risk(system, data, noise, x)
    assert report.value == pytest.approx(report.reference_risk, rel=1e-12)
    assert report.bound_factor == pytest.approx(1.0)


def test_deterministic_risk_zero_signal(rng):
    system, data, noise = random_instance(rng, 8)
    report = deterministic_x_risk(system, data, noise, CoefficientVector(np.zeros(8)))
    assert report.value <= report.reference_risk * (1 + 1e-12)


def test_deterministic_risk_random_smooth_signals(rng):
    system, data, noise = random_instance(rng, 8)
    for _ in range(100):
        x = rng.uniform(-1.0, 1.0, 8) * np.sqrt(data.second_moments.values)
        report = deterministic_x_risk(system, data, noise, CoefficientVector(x))
        assert report.bound_factor == pytest.approx(1.0)
        assert report.value <= report.reference_risk * (1 + 1e-12)


def test_deterministic_risk_infinite_factor():
    system = SingularSystem(SpectralSequence(np.array([1.0, 1.0])))
    data = law_from_moments([1.0, 0.0])
    noise = noise_from_moments([0.01, 0.01])
    report = deterministic_x_risk(system, data, noise, CoefficientVector(np.array([0.0, 1.0])))
    assert math.isinf(report.bound_factor)


# --- ball adversary ----------------------------------------------------------


def test_worst_case_l2_isotropic_closed_form(rng):
    n = 5
    sigma = np.ones(n) * 0.7
    system = SingularSystem(SpectralSequence(sigma))
    c = 0.8
    filt = custom_filter(np.full(n, c))
    x = rng.standard_normal(n)
    delta = 0.6
    v = (sigma * c - 1.0) * x
    expected = (np.linalg.norm(v) + c * delta) ** 2
    result = worst_case_l2(filt, system, CoefficientVector(x), delta)
    assert result.value == pytest.approx(expected, rel=1e-10)
    np.testing.assert_allclose(result.argmax, delta * v / np.linalg.norm(v), rtol=1e-6)


def test_worst_case_l2_zero_signal_hard_case():
    system = SingularSystem(SpectralSequence(np.array([1.0, 0.5, 0.25])))
    filt = custom_filter(np.array([0.3, 0.9, 0.1]))
    delta = 0.4
    result = worst_case_l2(filt, system, CoefficientVector(np.zeros(3)), delta)
    assert result.hard_case
    assert result.value == pytest.approx(delta**2 * 0.9**2, rel=1e-12)
    assert abs(np.linalg.norm(result.argmax) - delta) < 1e-12


def test_worst_case_l2_zero_budget(rng):
    system, data, noise = random_instance(rng, 4)
    filt = mse_filter(system, data, noise)
    x = rng.standard_normal(4)
    v = (system.sigma.values * filt.coefficients.values - 1.0) * x
    result = worst_case_l2(filt, system, CoefficientVector(x), 0.0)
    assert result.value == pytest.approx(float(np.sum(v**2)), rel=1e-14)


def test_worst_case_l2_matches_multistart_oracle(rng):
    for trial in range(30):
        n = int(rng.integers(2, 5))
        sigma = np.sort(10 ** rng.uniform(-1, 0, n))[::-1]
        system = SingularSystem(SpectralSequence(sigma))
        g = 10 ** rng.uniform(-1, 0.5, n)
        filt = custom_filter(g)
        x = rng.standard_normal(n)
        delta = 10 ** rng.uniform(-1.5, 0.5)
        result = worst_case_l2(filt, system, CoefficientVector(x), delta)
        v = (sigma * g - 1.0) * x
        oracle = multistart_ball_ascent(g, v, delta, starts=60, iters=250, seed=trial)
        assert result.value == pytest.approx(oracle, rel=1e-6)
        # feasibility and attainment of the returned maximizer
        assert np.linalg.norm(result.argmax) <= delta * (1 + 1e-9)
        attained = float(np.sum((v + g * result.argmax) ** 2))
        assert attained == pytest.approx(result.value, rel=1e-12)


def test_worst_case_l2_mixed_sign_and_zero_coefficients(rng):
    # coefficients may be negative (custom filters) or exactly zero
    n = 6
    sigma = np.sort(10 ** rng.uniform(-1, 0, n))[::-1]
    system = SingularSystem(SpectralSequence(sigma))
    g = np.array([0.9, -0.7, 0.0, 0.4, -0.2, 0.0])
    filt = custom_filter(g)
    for trial in range(10):
        x = rng.standard_normal(n)
        delta = 10 ** rng.uniform(-1.5, 0.3)
        result = worst_case_l2(filt, system, CoefficientVector(x), delta)
        v = (sigma * g - 1.0) * x
        oracle = multistart_ball_ascent(g, v, delta, starts=80, iters=300, seed=trial)
        assert result.value == pytest.approx(oracle, rel=1e-6)


def test_worst_case_l2_lower_and_upper_invariants(rng):
    for _ in range(50):
        n = int(rng.integers(1, 7))
        sigma = np.sort(10 ** rng.uniform(-1, 0, n))[::-1]
        system = SingularSystem(SpectralSequence(sigma))
        g = 10 ** rng.uniform(-1, 0.5, n)
        filt = custom_filter(g)
        x = rng.standard_normal(n)
        delta = 10 ** rng.uniform(-2, 0.5)
        value = worst_case_l2(filt, system, CoefficientVector(x), delta).value
        v_sq = float(np.sum(((sigma * g - 1.0) * x) ** 2))
        gmax_sq = float(np.max(g**2))
        assert value >= delta**2 * gmax_sq * (1 - 1e-12)
        assert value >= v_sq * (1 - 1e-12)
        assert value <= 2.0 * v_sq + 2.0 * gmax_sq * delta**2 + 1e-12


# --- per-coefficient adversary ----------------------------------------------


def test_worst_case_sinf_zero_budget_is_residual(rng):
    system, data, noise = random_instance(rng, 5)
    filt = mse_filter(system, data, noise)
    x = rng.standard_normal(5)
    v_sq = float(np.sum(((system.sigma.values * filt.coefficients.values - 1.0) * x) ** 2))
    assert worst_case_sinf(filt, system, CoefficientVector(x), 0.0).value == pytest.approx(
        v_sq, rel=1e-14
    )


def test_worst_case_sinf_pseudo_inverse(rng):
    system, data, noise = random_instance(rng, 5)
    filt = custom_filter(1.0 / system.sigma.values)
    delta = 0.3
    value = worst_case_sinf(filt, system, CoefficientVector(rng.standard_normal(5)), delta).value
    assert value == pytest.approx(float(np.sum(delta**2 / system.sigma.values**2)), rel=1e-12)


def test_worst_case_sinf_matches_sign_enumeration(rng):
    n = 5
    sigma = np.sort(10 ** rng.uniform(-1, 0, n))[::-1]
    system = SingularSystem(SpectralSequence(sigma))
    g = 10 ** rng.uniform(-1, 0.5, n)
    filt = custom_filter(g)
    x = rng.standard_normal(n)
    delta = 0.45
    result = worst_case_sinf(filt, system, CoefficientVector(x), delta)
    oracle = exhaustive_sign_patterns(g, sigma, x, delta)
    assert result.value == pytest.approx(oracle, rel=1e-12)
    attained = float(np.sum(((sigma * g - 1.0) * x + g * result.argmax) ** 2))
    assert attained == pytest.approx(result.value, rel=1e-12)


def test_sinf_equals_l2_in_one_dimension(rng):
    # the box and the ball coincide in one dimension
    for _ in range(20):
        system = SingularSystem(SpectralSequence(np.array([10 ** rng.uniform(-1, 0)])))
        filt = custom_filter(np.array([10 ** rng.uniform(-1, 1)]))
        x = CoefficientVector(rng.standard_normal(1))
        delta = 10 ** rng.uniform(-2, 0)
        a = worst_case_l2(filt, system, x, delta).value
        b = worst_case_sinf(filt, system, x, delta).value
        assert a == pytest.approx(b, rel=1e-10)


# --- bounds -------------------------------------------------------------------


def test_risk_bounds_conventions(rng):
    system, data, noise = random_instance(rng, 9)
    n = system.dim
    bounds_all = risk_bounds(system, data, noise, n)
    assert bounds_all["split_bound"] == pytest.approx(bounds_all["delta_bound"], rel=1e-12)
    bounds_none = risk_bounds(system, data, noise, 0)
    assert bounds_none["split_bound"] == pytest.approx(bounds_none["pi_bound"], rel=1e-12)


def test_risk_bounds_dominate_analytic(rng):
    system, data, noise = random_instance(rng, 9)
    reference = analytic_risk(system, data, noise).value
    best = math.inf
    for split in range(system.dim + 1):
        best = min(best, risk_bounds(system, data, noise, split)["split_bound"])
    assert reference <= best * (1 + 1e-12)
