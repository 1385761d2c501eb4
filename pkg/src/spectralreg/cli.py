"""Experiment command line: filter, risk, rates, advtrain, frames, pnp,
validate-lemmas.

Configuration comes from flags or a JSON file (flags override the file).
Outputs are CSV/JSON with an embedded config hash, seed, dimension and
library version; repeated runs with the same config and seed are
byte-identical regardless of thread count.  ``--figures`` additionally
renders matplotlib figures next to the delimited output.

Exit codes: 0 success, 1 malformed config, 2 validation failure,
3 assertion or invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .advtrain import TrainConfig, adv2_convergence_probe, train_adv2
from .filters import (
    FilterSpec,
    adv_inf_filter,
    denoiser_lambda,
    mse_filter,
    prox_scale,
    tikhonov,
    tsvd,
)
from .frames import (
    FrameSystem,
    build_dfd,
    doubled_basis_frame,
    frame_bounds,
    frame_from_csv,
    frame_mse_filter,
    mercedes_benz_frame,
    orthonormal_frame,
    synthesis_bound_check,
)
from .laws import (
    DataLaw,
    NoiseLaw,
    colored_noise,
    law_from_decay,
    noise_from_moments,
    white_noise,
)
from .operators import SingularSystem, from_matrix, load_matrix_csv, make_synthetic
from .parallel import resolve_threads
from .pnp import DenoiserSpec, pnp_iterate
from .ratelab import (
    power_sum_random_sweep,
    interpolation_random_sweep,
    run_rate_experiment,
)
from .reporting import config_hash, write_csv, write_json
from .risk import (
    analytic_risk,
    generic_risk,
    monte_carlo_risk,
    worst_case_l2,
    worst_case_sinf,
)
from .sequences import SPACE_Y, CoefficientVector, SpectralSequence

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_INVARIANT = 3

COMMANDS = ("filter", "risk", "rates", "advtrain", "frames", "pnp", "validate-lemmas")


class ConfigError(Exception):
    """Malformed flags or config file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map to exit 1
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="spectralreg", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its entries")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n", type=int, default=None, help="truncation dimension")
        p.add_argument("--sigma", default=None, help="poly:P or exp:C singular-value decay")
        p.add_argument("--matrix", default=None, help="CSV matrix path (overrides --sigma)")
        p.add_argument("--data-a", dest="data_a", type=float, default=None)
        p.add_argument("--data-scale", dest="data_scale", type=float, default=None)
        p.add_argument("--dist", default=None, choices=["gaussian", "rademacher_scaled", "uniform_symmetric"])
        p.add_argument("--law-json", dest="law_json", default=None, help="data law JSON file")
        p.add_argument("--noise-delta", dest="noise_delta", type=float, default=None)
        p.add_argument("--noise-b", dest="noise_b", type=float, default=None,
                       help="colored noise shape exponent: power = delta^2 * sigma^2 * k^b")
        p.add_argument("--out", default=None)
        p.add_argument("--format", default=None, choices=["csv", "json"])
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--figures", action="store_true", default=None,
                       help="render matplotlib figures next to the output")

    p_filter = sub.add_parser("filter", help="construct a filter family")
    common(p_filter)
    p_filter.add_argument("--family", default=None,
                          choices=["tikhonov", "tsvd", "mse", "adv_inf", "denoiser_prox"])
    p_filter.add_argument("--alpha", type=float, default=None)
    p_filter.add_argument("--cutoff", type=int, default=None)
    p_filter.add_argument("--delta", type=float, default=None)
    p_filter.add_argument("--tau", type=float, default=None)

    p_risk = sub.add_parser("risk", help="evaluate a risk functional")
    common(p_risk)
    p_risk.add_argument("--family", default=None,
                        choices=["tikhonov", "tsvd", "mse", "adv_inf", "denoiser_prox"])
    p_risk.add_argument("--alpha", type=float, default=None)
    p_risk.add_argument("--cutoff", type=int, default=None)
    p_risk.add_argument("--delta", type=float, default=None)
    p_risk.add_argument("--tau", type=float, default=None)
    p_risk.add_argument("--method", default=None,
                        choices=["analytic", "generic", "monte_carlo", "worst_case_l2", "worst_case_sinf"])
    p_risk.add_argument("--count", type=int, default=None)
    p_risk.add_argument("--budget", type=float, default=None, help="adversary budget for worst-case methods")

    p_rates = sub.add_parser("rates", help="convergence-rate experiment")
    common(p_rates)
    p_rates.add_argument("--kind", default=None, choices=["decay", "source"])
    p_rates.add_argument("--a", type=float, default=None)
    p_rates.add_argument("--b", type=float, default=None)
    p_rates.add_argument("--mu", type=float, default=None)
    p_rates.add_argument("--sigma-rate", dest="sigma_rate", type=float, default=None)
    p_rates.add_argument("--weight-rate", dest="weight_rate", type=float, default=None)
    p_rates.add_argument("--noise-rate", dest="noise_rate", type=float, default=None)
    p_rates.add_argument("--grid", default=None, help="geometric grid start:stop:count")
    p_rates.add_argument("--no-doubling", dest="no_doubling", action="store_true", default=None)

    p_adv = sub.add_parser("advtrain", help="train the ball-adversary filter")
    common(p_adv)
    p_adv.add_argument("--delta", type=float, default=None)
    p_adv.add_argument("--grid", default=None, help="decreasing budget grid start:stop:count")
    p_adv.add_argument("--samples", type=int, default=None)
    p_adv.add_argument("--iters", type=int, default=None)
    p_adv.add_argument("--step", type=float, default=None)
    p_adv.add_argument("--step-rule", dest="step_rule", default=None, choices=["fixed", "diminishing"])

    p_frames = sub.add_parser("frames", help="frame checks and diagonal decompositions")
    common(p_frames)
    p_frames.add_argument("--system", default=None,
                          help="mercedes | orthonormal:D | doubled:D | csv:PATH")
    p_frames.add_argument("--op", default=None, choices=["report", "dfd", "mse"])
    p_frames.add_argument("--signal-moments", dest="signal_moments", default=None,
                          help="comma list of frame signal moments")
    p_frames.add_argument("--noise-moments", dest="noise_moments", default=None,
                          help="comma list of frame noise moments")

    p_pnp = sub.add_parser("pnp", help="plug-and-play proximal-gradient iteration")
    common(p_pnp)
    p_pnp.add_argument("--lam", default=None, help="const:V or comma list of denoiser penalties")
    p_pnp.add_argument("--tau", type=float, default=None)
    p_pnp.add_argument("--iters", type=int, default=None)

    p_val = sub.add_parser("validate-lemmas", help="randomized sweeps of the supporting lemma inequalities")
    common(p_val)
    p_val.add_argument("--which", default=None, choices=["a", "b", "both"])
    p_val.add_argument("--draws", type=int, default=None)

    return parser


def _load_config(path: Optional[str]) -> Dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    if not text.strip():
        raise ConfigError(f"{path}:1:1: empty config")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}:1:1: config must be a JSON object")
    return payload


_DEFAULTS = {
    "seed": 0,
    "n": 32,
    "sigma": "poly:1",
    "data_a": 2.0,
    "data_scale": 1.0,
    "dist": "gaussian",
    "noise_delta": 0.1,
    "format": "csv",
    "family": "mse",
    "method": "analytic",
    "count": 100000,
    "budget": 0.1,
    "alpha": 0.1,
    "tau": 1.0,
    "kind": "decay",
    "a": 2.0,
    "b": 0.0,
    "mu": 1.0,
    "sigma_rate": 0.5,
    "weight_rate": None,
    "noise_rate": 0.0,
    "grid": None,
    "no_doubling": False,
    "delta": None,
    "samples": 32,
    "iters": 400,
    "step": 1.0,
    "step_rule": "fixed",
    "system": "mercedes",
    "op": "report",
    "signal_moments": None,
    "noise_moments": None,
    "lam": "const:1",
    "which": "both",
    "draws": 10000,
    "cutoff": None,
    "law_json": None,
    "matrix": None,
    "noise_b": None,
    "out": None,
    "figures": None,
    "threads": None,
}


def _merge_config(args: argparse.Namespace) -> Dict:
    file_cfg = _load_config(getattr(args, "config", None))
    unknown = set(file_cfg) - set(_DEFAULTS) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(_DEFAULTS)
    merged.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        if value is not None:
            merged[key] = value
    merged["command"] = args.command
    return merged


def _parse_grid(spec: str) -> List[float]:
    try:
        start_s, stop_s, count_s = spec.split(":")
        start, stop, count = float(start_s), float(stop_s), int(count_s)
    except ValueError as exc:
        raise ConfigError(f"grid must be start:stop:count, got {spec!r}") from exc
    if start <= 0 or stop <= 0 or count < 2:
        raise ConfigError("grid endpoints must be positive with count >= 2")
    return list(np.geomspace(start, stop, count))


def _parse_floats(spec: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in spec.split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"expected a comma list of numbers, got {spec!r}") from exc


def _build_system(cfg: Dict) -> SingularSystem:
    if cfg.get("matrix"):
        return from_matrix(load_matrix_csv(cfg["matrix"]))
    spec = str(cfg["sigma"])
    kind, _, value = spec.partition(":")
    if not value:
        raise ConfigError(f"--sigma must be poly:P or exp:C, got {spec!r}")
    rate = float(value)
    if kind == "poly":
        return make_synthetic(int(cfg["n"]), "polynomial", rate)
    if kind == "exp":
        return make_synthetic(int(cfg["n"]), "exponential", rate)
    raise ConfigError(f"unknown sigma decay {kind!r}")


def _build_data(cfg: Dict, system: SingularSystem) -> DataLaw:
    if cfg.get("law_json"):
        law = DataLaw.from_json(Path(cfg["law_json"]).read_text(encoding="utf-8"))
        if law.dim != system.dim:
            raise ValueError("law dimension does not match the system")
        return law
    return law_from_decay(system.dim, float(cfg["data_a"]), float(cfg["data_scale"]), cfg["dist"])


def _build_noise(cfg: Dict, system: SingularSystem) -> NoiseLaw:
    delta = float(cfg["noise_delta"])
    if cfg.get("noise_b") is not None:
        idx = np.arange(1, system.dim + 1, dtype=float)
        gamma = system.sigma.values**2 * idx ** float(cfg["noise_b"])
        return colored_noise(delta, gamma)
    return white_noise(system.dim, delta)


def _build_filter(cfg: Dict, system: SingularSystem, data: DataLaw, noise: NoiseLaw) -> FilterSpec:
    family = cfg["family"]
    if family == "tikhonov":
        return tikhonov(system, float(cfg["alpha"]))
    if family == "tsvd":
        cutoff = cfg.get("cutoff")
        return tsvd(system, int(cutoff) if cutoff is not None else system.dim // 2)
    if family == "mse":
        return mse_filter(system, data, noise)
    if family == "adv_inf":
        delta = cfg.get("delta")
        if delta is None:
            raise ValueError("adv_inf filter needs --delta")
        return adv_inf_filter(system, data, float(delta))
    if family == "denoiser_prox":
        lam = denoiser_lambda(data, noise_from_moments(noise.moments.values, noise.dist, space="x"))
        prox_scale(lam, float(cfg["tau"]))  # validates the step-size identity
        sigma = system.sigma.values
        g = sigma / (sigma**2 + lam.values)
        return FilterSpec(SpectralSequence(g, "denoiser-prox"), "denoiser_prox", {"tau": float(cfg["tau"])})
    raise ValueError(f"unknown filter family {family!r}")


def _meta(cfg: Dict, system: Optional[SingularSystem] = None) -> Dict:
    meta = {"config_hash": config_hash(cfg), "seed": cfg["seed"]}
    meta["n"] = system.dim if system is not None else cfg["n"]
    return meta


def _out_path(cfg: Dict, default_name: str) -> Path:
    out = cfg.get("out")
    return Path(out) if out else Path(default_name)


def _maybe_figure(cfg: Dict, render, out: Path) -> None:
    if cfg.get("figures"):
        from . import plotting

        render(plotting, out.with_suffix(".png"))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_filter(cfg: Dict) -> int:
    system = _build_system(cfg)
    data = _build_data(cfg, system)
    noise = _build_noise(cfg, system)
    filt = _build_filter(cfg, system, data, noise)
    out = _out_path(cfg, f"filter_{cfg['family']}.{cfg['format']}")
    meta = _meta(cfg, system)
    if cfg["format"] == "json":
        write_json(out, {"filter": json.loads(filt.to_json())}, meta)
    else:
        rows = [
            (k + 1, system.sigma.values[k], filt.coefficients.values[k])
            for k in range(system.dim)
        ]
        write_csv(out, ["index", "sigma", "coefficient"], rows, meta)
    _maybe_figure(
        cfg,
        lambda plotting, path: plotting.plot_filter_coefficients(
            [(cfg["family"], filt.coefficients.values)], system.sigma.values, path
        ),
        out,
    )
    coeffs = " ".join(format(v, ".7g") for v in filt.coefficients.values)
    print(f"filter {cfg['family']} g = {coeffs}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_risk(cfg: Dict) -> int:
    system = _build_system(cfg)
    data = _build_data(cfg, system)
    noise = _build_noise(cfg, system)
    filt = _build_filter(cfg, system, data, noise)
    method = cfg["method"]
    instance_id = config_hash(cfg)
    threads = resolve_threads(cfg.get("threads"))
    if method == "analytic":
        report = analytic_risk(system, data, noise)
    elif method == "generic":
        report = generic_risk(filt, system, data, noise)
    elif method == "monte_carlo":
        report = monte_carlo_risk(filt, system, data, noise, int(cfg["count"]), int(cfg["seed"]), threads)
    else:
        x = CoefficientVector(data.sample_array(1, int(cfg["seed"]))[0])
        budget = float(cfg["budget"])
        wc = (worst_case_l2 if method == "worst_case_l2" else worst_case_sinf)(filt, system, x, budget)
        out = _out_path(cfg, "risk.csv")
        write_csv(
            out,
            ["instance_id", "filter_family", "method", "value", "stderr"],
            [(instance_id, filt.family, method, wc.value, 0.0)],
            _meta(cfg, system),
        )
        print(f"{method} value = {wc.value:.17g}")
        print(f"wrote {out}")
        return EXIT_OK
    out = _out_path(cfg, "risk.csv")
    write_csv(
        out,
        ["instance_id", "filter_family", "method", "value", "stderr"],
        [report.csv_row(instance_id, filt.family)],
        _meta(cfg, system),
    )
    _maybe_figure(
        cfg,
        lambda plotting, path: plotting.plot_risk_profile(
            system.sigma.values,
            _risk_contributions(system, data, noise),
            path,
        ),
        out,
    )
    print(f"{method} risk = {report.value:.17g}" + (f" stderr = {report.stderr:.3g}" if report.stderr else ""))
    print(f"wrote {out}")
    return EXIT_OK


def _risk_contributions(system, data, noise) -> np.ndarray:
    sigma = system.sigma.values
    p = data.second_moments.values
    d = noise.moments.values
    denom = p * sigma**2 + d
    return np.where(denom > 0, p * d / np.where(denom > 0, denom, 1.0), 0.0)


def _cmd_rates(cfg: Dict) -> int:
    grid = _parse_grid(cfg["grid"]) if cfg.get("grid") else list(np.geomspace(1e-1, 1e-4, 10))
    kind = cfg["kind"]
    params: Dict[str, float] = {}
    if kind == "decay":
        params = {"a": float(cfg["a"]), "b": float(cfg["b"])}
    else:
        weight_rate = cfg.get("weight_rate")
        mu = float(cfg["mu"])
        if weight_rate is None:
            weight_rate = 1.1 * (1.0 + 2.0 * mu)  # just inside the summable region
        params = {
            "mu": mu,
            "sigma_rate": float(cfg["sigma_rate"]),
            "weight_rate": float(weight_rate),
            "noise_rate": float(cfg["noise_rate"]),
        }
    experiment = run_rate_experiment(kind, int(cfg["n"]), grid, not cfg.get("no_doubling"), **params)
    out = _out_path(cfg, "rates.csv")
    meta = _meta(cfg)
    rows = [
        (d, r, s, experiment.theory_slope)
        for d, r, s in zip(experiment.deltas, experiment.risks, experiment.split_bounds)
    ]
    write_csv(out, ["delta", "risk", "bound_split", "theory_exponent"], rows, meta)
    summary = {
        "kind": kind,
        "params": params,
        "fitted_slope": experiment.fitted_slope,
        "slope_stderr": experiment.slope_stderr,
        "slope_ci95": [
            experiment.fitted_slope - 1.96 * experiment.slope_stderr,
            experiment.fitted_slope + 1.96 * experiment.slope_stderr,
        ],
        "theory_slope": experiment.theory_slope,
        "dropped_largest": experiment.dropped_largest,
        "doubled_slope": experiment.doubled_slope,
        "slope_shift": experiment.slope_shift,
        "n": experiment.n,
        "seed": cfg["seed"],
    }
    write_json(out.with_suffix(".json"), summary, meta)
    _maybe_figure(cfg, lambda plotting, path: plotting.plot_rate_experiment(experiment, None, path), out)
    print(
        f"{kind} rate: fitted slope {experiment.fitted_slope:.4f}"
        f" vs theory {experiment.theory_slope:.4f}"
        + (f", doubling shift {experiment.slope_shift:.4f}" if experiment.slope_shift is not None else "")
    )
    print(f"wrote {out} and {out.with_suffix('.json')}")
    return EXIT_OK


def _cmd_advtrain(cfg: Dict) -> int:
    system = _build_system(cfg)
    data = _build_data(cfg, system)
    train_cfg = TrainConfig(
        sample_count=int(cfg["samples"]),
        max_iters=int(cfg["iters"]),
        step_rule=cfg["step_rule"],
        step_size=float(cfg["step"]),
        seed=int(cfg["seed"]),
    )
    meta = _meta(cfg, system)
    if cfg.get("grid"):
        rows = adv2_convergence_probe(system, data, _parse_grid(cfg["grid"]), train_cfg)
        out = _out_path(cfg, "advtrain_probe.csv")
        write_csv(
            out,
            ["delta", "objective", "bound", "bound_unsquared", "bound_population", "cap", "kept", "g_l2"],
            [
                (r.delta, r.objective, r.bound, r.bound_unsquared, r.bound_population, r.cap, r.truncation_kept, r.truncation_norm)
                for r in rows
            ],
            meta,
        )
        _maybe_figure(cfg, lambda plotting, path: plotting.plot_convergence_probe(rows, path), out)
        print(f"probe: objective {rows[0].objective:.6g} -> {rows[-1].objective:.6g} along {len(rows)} budgets")
        print(f"wrote {out}")
        return EXIT_OK
    delta = cfg.get("delta")
    if delta is None:
        raise ValueError("advtrain needs --delta or --grid")
    result = train_adv2(system, data, float(delta), train_cfg)
    out = _out_path(cfg, "advtrain_trace.csv")
    write_csv(out, ["iter", "objective", "grad_norm", "step"], result.trace, meta)
    summary = {
        "objective": result.objective,
        "converged": result.converged,
        "warning": result.warning,
        "coefficients": result.filter.coefficients.values,
        "delta": float(delta),
    }
    write_json(out.with_suffix(".json"), summary, meta)
    _maybe_figure(cfg, lambda plotting, path: plotting.plot_training_trace(result.trace, path), out)
    print(f"trained objective {result.objective:.8g} (converged={result.converged})")
    print(f"wrote {out} and {out.with_suffix('.json')}")
    return EXIT_OK


def _parse_frame(spec: str) -> FrameSystem:
    kind, _, value = str(spec).partition(":")
    if kind == "mercedes":
        return mercedes_benz_frame()
    if kind == "orthonormal":
        return orthonormal_frame(int(value or 2))
    if kind == "doubled":
        return doubled_basis_frame(int(value or 2))
    if kind == "csv":
        return frame_from_csv(value)
    raise ConfigError(f"unknown frame system {spec!r}")


def _parse_square_matrix(cfg: Dict, dim: int) -> np.ndarray:
    spec = cfg.get("matrix")
    if spec is None:
        return np.diag(np.arange(dim, 0, -1, dtype=float))
    if str(spec).startswith("diag:"):
        entries = _parse_floats(str(spec)[5:])
        return np.diag(entries)
    return load_matrix_csv(spec)


def _cmd_frames(cfg: Dict) -> int:
    frame = _parse_frame(cfg["system"])
    meta = _meta(cfg)
    meta["n"] = frame.dim
    op = cfg["op"]
    out = _out_path(cfg, f"frames_{op}.json")
    if op == "report":
        payload = {
            "bounds": frame_bounds(frame),
            "synthesis": synthesis_bound_check(frame),
            "reconstruction_error": frame.check_reconstruction(),
            "size": frame.size,
            "dim": frame.dim,
        }
        write_json(out, payload, meta)
    elif op == "dfd":
        a = _parse_square_matrix(cfg, frame.dim)
        dfd = build_dfd(a, frame)
        payload = json.loads(dfd.to_json())
        payload["coupling_residual"] = dfd.coupling_residual()
        payload["analysis_identity_residual"] = dfd.analysis_identity_residual()
        write_json(out, payload, meta)
    elif op == "mse":
        a = _parse_square_matrix(cfg, frame.dim)
        dfd = build_dfd(a, frame)
        if cfg.get("signal_moments") is None or cfg.get("noise_moments") is None:
            raise ValueError("frames --op mse needs --signal-moments and --noise-moments")
        signal = _parse_floats(cfg["signal_moments"])
        noise = _parse_floats(cfg["noise_moments"])
        result = frame_mse_filter(dfd, signal, noise)
        payload = {
            "coefficients": result.spec.coefficients.values,
            "upper_bound_risk": result.upper_bound_risk,
            "frame_factor": result.frame_factor,
            "kappa": dfd.kappa.values,
        }
        write_json(out, payload, meta)
    else:
        raise ValueError(f"unknown frames op {op!r}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_pnp(cfg: Dict) -> int:
    system = _build_system(cfg)
    lam_spec = str(cfg["lam"])
    if lam_spec.startswith("const:"):
        lam = np.full(system.dim, float(lam_spec[6:]))
    else:
        lam = _parse_floats(lam_spec)
    denoiser = DenoiserSpec(SpectralSequence(lam, "cli"))
    rng = np.random.default_rng(int(cfg["seed"]))
    y = CoefficientVector(rng.standard_normal(system.dim), SPACE_Y)
    tau = float(cfg["tau"])
    result = pnp_iterate(denoiser, system, y, tau, int(cfg["iters"]))
    sigma = system.sigma.values
    fixed_point = sigma * y.entries / (sigma**2 + lam)
    gap = float(np.max(np.abs(result.x.entries[: system.dim] - fixed_point)))
    out = _out_path(cfg, "pnp_trace.csv")
    meta = _meta(cfg, system)
    write_csv(out, ["iter", "residual"], list(enumerate(result.residual_history, start=1)), meta)
    summary = {
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "fixed_point_gap": gap,
        "tau": tau,
    }
    write_json(out.with_suffix(".json"), summary, meta)
    _maybe_figure(cfg, lambda plotting, path: plotting.plot_pnp_residuals(result.residual_history, path), out)
    print(f"pnp {result.stop_reason} after {result.iterations} iterations, fixed-point gap {gap:.3g}")
    print(f"wrote {out} and {out.with_suffix('.json')}")
    return EXIT_OK


def _cmd_validate_lemmas(cfg: Dict) -> int:
    which = cfg["which"]
    draws = int(cfg["draws"])
    seed = int(cfg["seed"])
    payload: Dict[str, Dict] = {}
    violations = 0
    if which in ("a", "both"):
        payload["power_sums"] = power_sum_random_sweep(draws, seed)
        violations += payload["power_sums"]["tail_violations"] + payload["power_sums"]["head_violations"]
    if which in ("b", "both"):
        payload["interpolation"] = interpolation_random_sweep(draws, seed)
        violations += payload["interpolation"]["violations"]
    payload["total_violations"] = violations
    out = _out_path(cfg, "lemma_report.json")
    write_json(out, payload, _meta(cfg))
    print(f"lemma sweeps: {violations} violations over {draws} draws each")
    print(f"wrote {out}")
    if violations:
        raise AssertionError(f"{violations} lemma violations found")
    return EXIT_OK


_DISPATCH = {
    "filter": _cmd_filter,
    "risk": _cmd_risk,
    "rates": _cmd_rates,
    "advtrain": _cmd_advtrain,
    "frames": _cmd_frames,
    "pnp": _cmd_pnp,
    "validate-lemmas": _cmd_validate_lemmas,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("a subcommand is required: " + ", ".join(COMMANDS))
        cfg = _merge_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _DISPATCH[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, KeyError, OSError, np.linalg.LinAlgError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
