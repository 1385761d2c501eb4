"""Acceptance suite: one test per criterion, each printing a pass line with
its elapsed time and asserting the stated tolerance and runtime budget."""

import math
import os
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from spectralreg import (
    CoefficientVector,
    DenoiserSpec,
    SingularSystem,
    SpectralSequence,
    TrainConfig,
    adv2_convergence_probe,
    adv_inf_filter,
    analytic_risk,
    power_sum_random_sweep,
    interpolation_random_sweep,
    apply_filter,
    build_dfd,
    custom_filter,
    doubled_basis_frame,
    frame_bounds,
    frame_mse_filter,
    frame_moments_from_covariance,
    frame_reconstruct,
    generic_risk,
    law_from_decay,
    law_from_moments,
    make_synthetic,
    mercedes_benz_frame,
    monte_carlo_risk,
    mse_filter,
    noise_from_moments,
    orthonormal_frame,
    pnp_iterate,
    run_rate_experiment,
    synthesis_bound_check,
    tikhonov,
    train_adv2,
    tsvd,
    worst_case_l2,
)
from spectralreg.advtrain import empirical_objective
from spectralreg.sequences import SPACE_Y

from oracles import multistart_ball_ascent


@contextmanager
def budget(name, seconds):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    print(f"[PASS] {name} ({elapsed:.2f}s / budget {seconds:.0f}s)")
    assert elapsed < seconds, f"{name} exceeded its runtime budget: {elapsed:.1f}s"


def random_diag_instance(rng, n):
    sigma = np.sort(10 ** rng.uniform(-2, 0, n))[::-1]
    system = SingularSystem(SpectralSequence(sigma))
    data = law_from_moments(10 ** rng.uniform(-2, 0.5, n))
    noise = noise_from_moments(10 ** rng.uniform(-4, -1, n))
    return system, data, noise


def vectorized_golden_min(objective, lo, hi, iters=120):
    """Independent per-index brute force: golden section on vector bounds."""
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a = np.array(lo, dtype=float).copy()
    b = np.array(hi, dtype=float).copy()
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(iters):
        take = fc < fd
        b = np.where(take, d, b)
        a = np.where(take, a, c)
        c_new = b - ratio * (b - a)
        d_new = a + ratio * (b - a)
        fc_new = objective(c_new)
        fd_new = objective(d_new)
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    return 0.5 * (a + b)


def test_criterion_01_mse_filter_optimality():
    with budget("criterion 1: MSE-filter optimality", 10):
        rng = np.random.default_rng(101)
        n = 32
        for _ in range(100):
            system, data, noise = random_diag_instance(rng, n)
            sigma = system.sigma.values
            p = data.second_moments.values
            d = noise.moments.values
            best = mse_filter(system, data, noise)
            best_risk = generic_risk(best, system, data, noise).value

            for alpha in np.geomspace(1e-4, 10.0, 20):
                rival = generic_risk(tikhonov(system, alpha), system, data, noise).value
                assert best_risk <= rival * (1 + 1e-12)
            for cutoff in range(n + 1):
                rival = generic_risk(tsvd(system, cutoff), system, data, noise).value
                assert best_risk <= rival * (1 + 1e-12)
            for _ in range(50):
                g = rng.uniform(0.0, 1.5, n) / sigma
                rival = generic_risk(custom_filter(g), system, data, noise).value
                assert best_risk <= rival * (1 + 1e-12)

            # independent per-index brute force against the closed form
            objective = lambda g: (1.0 - sigma * g) ** 2 * p + g**2 * d
            numeric = vectorized_golden_min(objective, np.zeros(n), 2.0 / sigma)
            np.testing.assert_allclose(best.coefficients.values, numeric, atol=1e-6, rtol=1e-6)


def test_criterion_02_analytic_risk_vs_monte_carlo():
    with budget("criterion 2: analytic risk vs Monte Carlo", 60):
        rng = np.random.default_rng(202)
        for i in range(10):
            system, data, noise = random_diag_instance(rng, 8)
            filt = mse_filter(system, data, noise)
            mc = monte_carlo_risk(filt, system, data, noise, count=1_000_000, seed=1000 + i)
            exact = analytic_risk(system, data, noise).value
            assert abs(mc.value - exact) <= 4.0 * mc.stderr, (
                f"instance {i}: |{mc.value} - {exact}| > 4*{mc.stderr}"
            )


# grid tops calibrated so the 3-decade window sits inside the truncated
# model's asymptotic regime (truncation-dominated below, saturated above)
DECAY_GRIDS = {
    (1.5, 0.0): 10**0.4,
    (2.0, 0.0): 10**-0.5,
    (2.0, 1.0): 10**-0.5,
    (3.0, -0.5): 10**-1.5,
}


def test_criterion_03_decay_rate_reproduction():
    with budget("criterion 3: decay-rate reproduction", 30):
        for (a, b), top in DECAY_GRIDS.items():
            grid = np.geomspace(top, top * 1e-3, 10)
            exp = run_rate_experiment("decay", 10_000, grid, doubling_check=True, a=a, b=b)
            assert abs(exp.fitted_slope - exp.theory_slope) < 0.1, (
                f"(a={a}, b={b}): slope {exp.fitted_slope:.4f} vs {exp.theory_slope:.4f}"
            )
            assert exp.slope_shift < 0.05, f"(a={a}, b={b}): doubling shift {exp.slope_shift:.4f}"


SOURCE_CASES = {
    # mu: (sigma_rate, weight_rate, noise_rate, grid top)
    0.5: (0.5, 1.05, 1.0, 10**-0.5),
    1.0: (0.5, 1.05, 1.0, 10**-1.0),
    2.0: (0.25, 3.05, 0.5, 10**-2.0),
}


def test_criterion_04_source_condition_rate():
    with budget("criterion 4: source-condition rate", 30):
        for mu, (s, q, t, top) in SOURCE_CASES.items():
            grid = np.geomspace(top, top * 1e-3, 10)
            exp = run_rate_experiment(
                "source", 10_000, grid, doubling_check=False,
                mu=mu, sigma_rate=s, weight_rate=q, noise_rate=t,
            )
            assert abs(exp.fitted_slope - exp.theory_slope) < 0.1, (
                f"mu={mu}: slope {exp.fitted_slope:.4f} vs {exp.theory_slope:.4f}"
            )


def test_criterion_05_worst_case_filter_closed_form():
    with budget("criterion 5: worst-case filter closed form", 10):
        rng = np.random.default_rng(505)
        total = 10_000
        per_branch = total // 3

        sigma = 10 ** rng.uniform(-1.0, 0.5, total)
        p = 10 ** rng.uniform(-1.0, 0.5, total)
        m = np.sqrt(p) * rng.uniform(0.05, 1.0, total)
        delta = np.empty(total)
        # steer one third of the draws at each branch, the rest anywhere
        lo = sigma * m          # full inversion below this budget
        hi = sigma * p / m      # shut-off above this budget
        delta[:per_branch] = lo[:per_branch] * rng.uniform(0.2, 0.999, per_branch)
        delta[per_branch : 2 * per_branch] = np.sqrt(
            lo[per_branch : 2 * per_branch] * hi[per_branch : 2 * per_branch]
        )
        rest = total - 2 * per_branch
        delta[2 * per_branch :] = hi[2 * per_branch :] * 10 ** rng.uniform(0.001, 1.0, rest)

        closed = np.empty(total)
        for k in range(total):
            system = SingularSystem(SpectralSequence(sigma[k : k + 1]))
            law = law_from_moments(p[k : k + 1], abs_moments=m[k : k + 1])
            closed[k] = adv_inf_filter(system, law, float(delta[k])).coefficients.values[0]

        zero_branch = p / m <= delta / sigma
        full_branch = ~zero_branch & (delta / sigma <= m)
        interior = ~zero_branch & ~full_branch
        for mask, label in ((zero_branch, "shut-off"), (full_branch, "full"), (interior, "interior")):
            assert int(mask.sum()) >= 1000, f"branch {label} hit only {mask.sum()} times"

        grid_points = 10_000
        unit = np.linspace(0.0, 1.0, grid_points)
        chunk = 250
        for start in range(0, total, chunk):
            sl = slice(start, min(start + chunk, total))
            gs = unit[None, :] / sigma[sl, None]
            s_ = sigma[sl, None]
            damp = 1.0 - s_ * gs
            values = (
                damp**2 * p[sl, None]
                + 2.0 * delta[sl, None] * damp * gs * m[sl, None]
                + gs**2 * delta[sl, None] ** 2
            )
            grid_min = values.min(axis=1)
            g_star = closed[sl]
            damp_star = 1.0 - sigma[sl] * g_star
            star = (
                damp_star**2 * p[sl]
                + 2.0 * delta[sl] * damp_star * g_star * m[sl]
                + g_star**2 * delta[sl] ** 2
            )
            margin = grid_min - star
            assert margin.min() >= -1e-9, f"closed form beaten by grid by {-margin.min():.2e}"


def test_criterion_06_ball_worst_case_solver():
    with budget("criterion 6: ball worst-case solver", 30):
        rng = np.random.default_rng(606)
        hard_done = 0
        for trial in range(200):
            n = int(rng.integers(2, 9))
            sigma = np.sort(10 ** rng.uniform(-1.0, 0.0, n))[::-1]
            system = SingularSystem(SpectralSequence(sigma))
            g = 10 ** rng.uniform(-1.0, 0.5, n)
            x = rng.standard_normal(n)
            if trial < 20:
                # constructed hard case: repeated max coefficient, residual
                # zero exactly on the coordinates attaining it
                top = float(np.max(g)) * 1.5
                g[0] = top
                g[1] = top
                x[0] = 0.0
                x[1] = 0.0
                hard_done += 1
            filt = custom_filter(g)
            delta = 10 ** rng.uniform(-1.5, 0.3)
            result = worst_case_l2(filt, system, CoefficientVector(x), delta)
            v = (sigma * g - 1.0) * x
            oracle = multistart_ball_ascent(g, v, delta, starts=100, iters=300, seed=trial)
            assert result.value == pytest.approx(oracle, rel=1e-6), (
                f"trial {trial}: secular {result.value} vs ascent {oracle}"
            )
        assert hard_done >= 20


def test_criterion_07_adversarial_training_sanity():
    with budget("criterion 7: adversarial training sanity", 120):
        # (a) no adversary: trained filter reproduces the pseudo-inverse
        n = 8
        system = make_synthetic(n, "polynomial", 1.0)
        data = law_from_decay(n, 2.0)
        cfg = TrainConfig(sample_count=16, max_iters=300, seed=71)
        result = train_adv2(system, data, 0.0, cfg)
        np.testing.assert_allclose(
            result.filter.coefficients.values, 1.0 / system.sigma.values, rtol=1e-3
        )

        # (b) single coordinate against a dense grid
        system1 = make_synthetic(1, "polynomial", 1.0)
        data1 = law_from_moments([1.0], "rademacher_scaled")
        cfg1 = TrainConfig(sample_count=1, max_iters=400, seed=0)
        trained = train_adv2(system1, data1, 0.5, cfg1)
        xs = data1.sample_array(1, cfg1.seed)
        gs = np.linspace(0.0, 1.0, 20_001)
        vals = [empirical_objective(np.array([g]), system1.sigma.values, xs, 0.5) for g in gs]
        oracle = gs[int(np.argmin(vals))]
        assert trained.filter.coefficients.values[0] == pytest.approx(oracle, abs=1e-3)

        # (c) recorded objective is non-increasing along the best iterate
        probe_cfg = TrainConfig(sample_count=16, max_iters=200, seed=72)
        run = train_adv2(system, data, 0.3, probe_cfg)
        objectives = [row[1] for row in run.trace]
        best_so_far = np.minimum.accumulate(objectives)
        assert np.all(np.diff(best_so_far) <= 1e-12)
        assert run.objective <= best_so_far[-1] + 1e-12

        # (d) objective vanishes along a shrinking budget grid under the bound
        n16 = 16
        system16 = make_synthetic(n16, "polynomial", 1.0)
        data16 = law_from_decay(n16, 2.0)
        rows = adv2_convergence_probe(
            system16, data16, [0.1, 0.03, 0.01, 0.003, 0.001],
            TrainConfig(sample_count=16, max_iters=150, seed=73),
        )
        objectives = [r.objective for r in rows]
        assert objectives == sorted(objectives, reverse=True)
        assert objectives[-1] < 0.05 * objectives[0]
        for row in rows:
            assert row.objective <= row.bound * (1 + 1e-9)


def test_criterion_08_frames():
    with budget("criterion 8: frames", 60):
        rng = np.random.default_rng(808)
        systems = {
            "orthonormal": orthonormal_frame(2),
            "mercedes": mercedes_benz_frame(),
            "doubled": doubled_basis_frame(2),
        }
        operator = np.diag([2.0, 1.0])
        for name, frame in systems.items():
            report = frame_bounds(frame)
            assert report["min_quotient"] >= report["a"] - 1e-10
            assert report["max_quotient"] <= report["b"] + 1e-10
            assert frame.check_reconstruction() <= 1e-10
            synthesis_bound_check(frame)  # raises beyond 1e-10 slack
            dfd = build_dfd(operator, frame)
            assert dfd.coupling_residual() <= 1e-10
            assert dfd.analysis_identity_residual() <= 1e-10

        # orthonormal decomposition path agrees with the spectral path
        sigma = np.array([2.0, 1.0])
        system = SingularSystem(SpectralSequence(sigma))
        data = law_from_moments([1.0, 0.6])
        noise = noise_from_moments([0.02, 0.01])
        dfd = build_dfd(operator, orthonormal_frame(2))
        frame_filter = frame_mse_filter(dfd, data.second_moments.values, noise.moments.values)
        spectral = mse_filter(system, data, noise)
        np.testing.assert_allclose(
            frame_filter.spec.coefficients.values,
            spectral.coefficients.values,
            rtol=1e-12,
        )
        y = rng.standard_normal(2)
        via_frame = frame_reconstruct(dfd, frame_filter.spec.coefficients.values, y)
        via_spectral = apply_filter(spectral, system, CoefficientVector(y, SPACE_Y)).entries
        np.testing.assert_allclose(via_frame, via_spectral, atol=1e-12)

        # upper-bound inequality against a Monte-Carlo risk estimate
        frame = mercedes_benz_frame()
        a = np.array([[1.5, 0.3], [0.2, 0.9]])
        dfd = build_dfd(a, frame)
        cov_x = np.array([[1.0, 0.2], [0.2, 0.7]])
        cov_e = np.diag([0.02, 0.01])
        p = frame_moments_from_covariance(frame.vectors, cov_x)
        d = frame_moments_from_covariance(dfd.psi.vectors, cov_e)
        result = frame_mse_filter(dfd, p, d)
        count = 100_000
        xs = rng.standard_normal((count, 2)) @ np.linalg.cholesky(cov_x).T
        es = rng.standard_normal((count, 2)) @ np.linalg.cholesky(cov_e).T
        ys = xs @ a.T + es
        recon = (result.spec.coefficients.values * (ys @ dfd.psi.vectors.T)) @ frame.dual_vectors()
        losses = np.sum((recon - xs) ** 2, axis=1)
        mc = float(np.mean(losses))
        stderr = float(np.std(losses) / math.sqrt(count))
        a_phi = frame.lower_bound
        assert a_phi * mc <= result.upper_bound_risk + 4.0 * a_phi * stderr


def test_criterion_09_pnp_fixed_point():
    with budget("criterion 9: PnP fixed point", 5):
        rng = np.random.default_rng(909)
        n = 8
        system = make_synthetic(n, "polynomial", 1.0)
        data = law_from_moments(10 ** rng.uniform(-1.0, 0.5, n))
        noise = noise_from_moments(10 ** rng.uniform(-4.0, -2.0, n))
        lam = noise.moments.values / data.second_moments.values
        denoiser = DenoiserSpec(SpectralSequence(lam))
        y = CoefficientVector(rng.standard_normal(n), SPACE_Y)
        tau = 1.0
        result = pnp_iterate(denoiser, system, y, tau, max_iters=200_000, tol=1e-13)
        assert result.converged
        closed_form = system.sigma.values * y.entries / (system.sigma.values**2 + lam)
        np.testing.assert_allclose(result.x.entries, closed_form, rtol=0, atol=1e-8)
        via_filter = apply_filter(mse_filter(system, data, noise), system, y).entries
        np.testing.assert_allclose(result.x.entries, via_filter, rtol=0, atol=1e-8)

        # step-matched base penalties and pre-scaled penalties run identically
        scaled = DenoiserSpec(SpectralSequence(tau * lam))
        again = pnp_iterate(scaled, system, y, tau, max_iters=200_000, tol=1e-13, prox_tau=1.0)
        np.testing.assert_array_equal(result.x.entries, again.x.entries)


def test_criterion_10_lemma_validators():
    with budget("criterion 10: lemma inequality sweeps", 10):
        a_report = power_sum_random_sweep(10_000, seed=10)
        assert a_report["tail_violations"] == 0
        assert a_report["head_violations"] == 0
        b_report = interpolation_random_sweep(10_000, seed=11)
        assert b_report["violations"] == 0


def test_criterion_11_cli_reproducibility(tmp_path):
    with budget("criterion 11: CLI reproducibility", 120):
        base_env = dict(os.environ)
        base_env.pop("SPECTRAL_REG_THREADS", None)

        def run(args, out, threads):
            env = dict(base_env)
            env["SPECTRAL_REG_THREADS"] = threads
            proc = subprocess.run(
                [sys.executable, "-m", "spectralreg.cli", *args, "--out", str(out)],
                cwd=tmp_path,
                env=env,
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            return out.read_bytes()

        mc_args = ["risk", "--method", "monte_carlo", "--count", "200000",
                   "--n", "12", "--seed", "17", "--family", "mse"]
        blobs = [
            run(mc_args, tmp_path / name, threads)
            for name, threads in (("mc1.csv", "1"), ("mc2.csv", "4"), ("mc3.csv", "2"), ("mc4.csv", "1"))
        ]
        assert blobs[0] == blobs[1] == blobs[2] == blobs[3]

        rate_args = ["rates", "--kind", "decay", "--a", "2", "--b", "0",
                     "--n", "2000", "--grid", "0.3:1e-3:8", "--seed", "5"]
        rate_blobs = [
            run(rate_args, tmp_path / name, threads)
            for name, threads in (("r1.csv", "1"), ("r2.csv", "4"))
        ]
        assert rate_blobs[0] == rate_blobs[1]
        # the JSON summaries agree byte for byte as well
        j1 = (tmp_path / "r1.json").read_bytes()
        j2 = (tmp_path / "r2.json").read_bytes()
        assert j1 == j2

        train_args = ["advtrain", "--delta", "0.2", "--n", "6", "--samples", "8",
                      "--iters", "50", "--seed", "23"]
        t_blobs = [
            run(train_args, tmp_path / name, threads)
            for name, threads in (("t1.csv", "1"), ("t2.csv", "3"))
        ]
        assert t_blobs[0] == t_blobs[1]
