"""Matplotlib figure rendering for the experiment report paths.

Figures are rendered headless (Agg) straight to files next to the delimited
output.  PNG metadata is pinned so repeated runs of the same config produce
identical bytes on the same matplotlib install.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "new_figure",
    "save_figure",
    "plot_rate_experiment",
    "plot_filter_coefficients",
    "plot_convergence_probe",
    "plot_training_trace",
    "plot_pnp_residuals",
    "plot_risk_profile",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def new_figure(width: float = 6.4):
    fig, ax = plt.subplots(figsize=(width, width * GOLDEN), dpi=150)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def save_figure(fig, path) -> None:
    fig.savefig(path, bbox_inches="tight", metadata={"Software": "spectralreg"})
    plt.close(fig)


def plot_rate_experiment(experiment, reference: Optional[np.ndarray] = None, path=None):
    """Log-log risk against noise level with the fitted and theoretical slopes."""
    fig, ax = new_figure()
    d = np.asarray(experiment.deltas)
    r = np.asarray(experiment.risks)
    ax.loglog(d, r, "o-", label="optimal risk")
    ax.loglog(d, np.asarray(experiment.split_bounds), "s--", alpha=0.6, label="best split bound")
    anchor = r[-1]
    ax.loglog(d, anchor * (d / d[-1]) ** experiment.fitted_slope, "-", alpha=0.8,
              label=f"fit slope {experiment.fitted_slope:.3f}")
    ax.loglog(d, anchor * (d / d[-1]) ** experiment.theory_slope, ":", alpha=0.8,
              label=f"theory slope {experiment.theory_slope:.3f}")
    if reference is not None:
        ax.loglog(d, reference, "-.", alpha=0.6, label="classical reference")
    ax.set_xlabel("noise level")
    ax.set_ylabel("expected risk")
    ax.set_title(f"{experiment.kind} rate, N={experiment.n}")
    ax.legend(fontsize=8)
    if path is not None:
        save_figure(fig, path)
    return fig


def plot_filter_coefficients(named_filters, sigma: np.ndarray, path=None):
    """Coefficients per index for one or more filters, pseudo-inverse overlay."""
    fig, ax = new_figure()
    idx = np.arange(1, len(sigma) + 1)
    ax.semilogy(idx, 1.0 / np.asarray(sigma), "k:", alpha=0.5, label="pseudo-inverse")
    for name, coeffs in named_filters:
        positive = np.asarray(coeffs, dtype=float)
        ax.semilogy(idx, np.where(positive > 0, positive, np.nan), "o-", ms=3, label=name)
    ax.set_xlabel("index")
    ax.set_ylabel("filter coefficient")
    ax.legend(fontsize=8)
    if path is not None:
        save_figure(fig, path)
    return fig


def plot_convergence_probe(rows, path=None):
    """Trained objective against the surrogate bound along the budget grid."""
    fig, ax = new_figure()
    deltas = [r.delta for r in rows]
    ax.loglog(deltas, [r.objective for r in rows], "o-", label="trained objective")
    ax.loglog(deltas, [r.bound for r in rows], "s--", label="surrogate bound (sample)")
    ax.loglog(deltas, [r.bound_population for r in rows], ":", label="surrogate bound (population)")
    ax.set_xlabel("adversary budget")
    ax.set_ylabel("worst-case objective")
    ax.legend(fontsize=8)
    if path is not None:
        save_figure(fig, path)
    return fig


def plot_training_trace(trace, path=None):
    fig, ax = new_figure()
    iters = [row[0] for row in trace]
    objectives = [row[1] for row in trace]
    ax.semilogy(iters, objectives, "-", label="objective")
    ax.semilogy(iters, np.minimum.accumulate(objectives), "--", label="best so far")
    ax.set_xlabel("iteration")
    ax.set_ylabel("empirical worst-case objective")
    ax.legend(fontsize=8)
    if path is not None:
        save_figure(fig, path)
    return fig


def plot_pnp_residuals(history: Sequence[float], path=None):
    fig, ax = new_figure()
    ax.semilogy(np.arange(1, len(history) + 1), history, "-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("max coordinate update")
    if path is not None:
        save_figure(fig, path)
    return fig


def plot_risk_profile(sigma, contributions, path=None):
    """Per-index contributions to the expected optimal risk."""
    fig, ax = new_figure()
    idx = np.arange(1, len(sigma) + 1)
    ax.loglog(idx, contributions, "o-", ms=3)
    ax.set_xlabel("index")
    ax.set_ylabel("risk contribution")
    if path is not None:
        save_figure(fig, path)
    return fig
