"""SVG figure emission for run records.

All figures are static SVGs rendered with the Agg backend so they work in
headless environments. Panels degrade gracefully: a figure is skipped
(not errored) when the record lacks the data it needs, and the caller
gets back the list of files actually written.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["emit_plots", "gp_band_plot", "ode_trajectory_plot", "score_curve_plot"]

plt.rcParams["svg.hashsalt"] = "boxloop"


def _shade_extrapolation(ax, x_start, x_end):
    if x_end > x_start:
        ax.axvspan(x_start, x_end, color="0.85", zorder=0, label="extrapolation")


def gp_band_plot(series, predictive: dict, path) -> Path:
    """Data scatter with predictive mean and a mean +/- 2 sd band.

    The predictive dict carries mean/var on the standardized y scale over
    every x in the series; they are mapped back to data units here.
    """
    sc = series.scaler()
    mean = sc.y_inv(np.asarray(predictive["mean"], dtype=float))
    sd = np.sqrt(np.asarray(predictive["var"], dtype=float)) * sc.y_std
    fig, ax = plt.subplots(figsize=(7, 4))
    if len(series.test_x):
        _shade_extrapolation(ax, float(series.x[series.n_train - 1]), float(series.x[-1]))
    ax.fill_between(series.x, mean - 2 * sd, mean + 2 * sd, alpha=0.3, label="mean +/- 2 sd")
    ax.plot(series.x, mean, lw=1.5, label="predictive mean")
    ax.plot(series.train_x, series.train_y, "k.", ms=4, label="train")
    if len(series.test_x):
        ax.plot(series.test_x, series.test_y, "r.", ms=4, label="test")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(series.name)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def ode_trajectory_plot(dataset, curves: dict, path) -> Path:
    """Observed states plus named model trajectories.

    curves maps label -> (times, states[n, n_states]); observations are
    scattered per state, trajectories drawn as lines, extrapolation shaded
    from the train horizon.
    """
    names = dataset.state_names
    fig, axes = plt.subplots(len(names), 1, figsize=(7, 2.6 * len(names)), sharex=True)
    if len(names) == 1:
        axes = [axes]
    for j, (ax, name) in enumerate(zip(axes, names)):
        if dataset.times[-1] > dataset.train_end:
            _shade_extrapolation(ax, dataset.train_end, float(dataset.times[-1]))
        ax.plot(dataset.times, dataset.states[:, j], "k.", ms=4, label="observed")
        for label, (t, states) in curves.items():
            ax.plot(t, np.asarray(states)[:, j], lw=1.3, label=label)
        ax.set_ylabel(name)
        if j == 0:
            ax.legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def score_curve_plot(record, path) -> Path:
    """Best score per round and running best across rounds."""
    per_round, running, best = [], [], None
    for rnd in record.rounds:
        scores = [c.score for c in rnd.proposals if c.status == "fit_ok"]
        top = max(scores) if scores else np.nan
        per_round.append(top)
        if scores:
            best = top if best is None else max(best, top)
        running.append(best if best is not None else np.nan)
    rounds = np.arange(len(per_round))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(rounds, per_round, "o-", label="round best")
    ax.plot(rounds, running, "s--", label="running best")
    ax.set_xlabel("round")
    ax.set_ylabel("score")
    ax.set_xticks(rounds)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def emit_plots(record, dataset, out_dir) -> list:
    """Emit every figure the record supports; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    best = record.best
    if best is not None and record.config.backend == "gp" and best.predictive:
        written.append(gp_band_plot(dataset, best.predictive, out_dir / "gp_band.svg"))
    if best is not None and record.config.backend == "ode" and best.predictive:
        mean = np.asarray(best.predictive["mean"], dtype=float)
        n_states = len(dataset.state_names)
        if mean.size == n_states * len(dataset.times):
            states = mean.reshape(n_states, -1).T  # stored state-major
            written.append(
                ode_trajectory_plot(
                    dataset,
                    {"best proposal": (dataset.times, states)},
                    out_dir / "ode_trajectories.svg",
                )
            )
    if any(c.status == "fit_ok" for c in record.candidates()):
        written.append(score_curve_plot(record, out_dir / "score_curve.svg"))
    return written
