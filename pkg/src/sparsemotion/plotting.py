"""Static SVG figures for the CLI reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import BangBangSignal, PiecewiseTrajectory, SpikeTrain, Trial  # noqa: E402

# fixed salt and no timestamp so repeated runs write identical files
plt.rcParams["svg.hashsalt"] = "sparsemotion"
plt.rcParams["svg.fonttype"] = "none"

MODEL_COLORS = {
    "quintic": "tab:red",
    "sparse3": "tab:green",
    "sparse4": "tab:cyan",
    "sparse5": "tab:purple",
    "sparse6": "tab:orange",
}


def _simple_axes(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def step_arrays(signal: BangBangSignal):
    t = np.array(signal.switch_times)
    u = np.append(signal.interval_values(), 0.0)
    return t, u


def plot_signal(signal: BangBangSignal, spikes: SpikeTrain, traj: PiecewiseTrajectory, path):
    """Control step plot, its spike encoding, and the resulting position and velocity."""
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    t, u = step_arrays(signal)
    axes[0].step(np.concatenate(([t[0]], t)), np.concatenate(([0.0], u)), where="post", color="k")
    axes[0].set_ylabel(f"u (order {signal.order})")
    if len(spikes):
        axes[1].stem(spikes.times, spikes.weights, basefmt="k-")
    axes[1].set_ylabel("spike weight")
    grid = np.linspace(traj.start, traj.end, 501)
    axes[2].plot(grid, traj.evaluate(grid), label="x")
    ax2 = axes[2].twinx()
    ax2.plot(grid, traj.evaluate(grid, 1), color="tab:orange", label="v")
    axes[2].set_ylabel("position")
    ax2.set_ylabel("velocity")
    axes[2].set_xlabel("time (s)")
    for ax in axes[:2]:
        _simple_axes(ax)
    fig.tight_layout()
    return save(fig, path)


def plot_controls(times, controls: dict[str, np.ndarray], path, reference: BangBangSignal | None = None):
    """Overlay held control sequences, optionally with the closed-form signal."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, u in controls.items():
        ax.step(times, u, where="post", label=label)
    if reference is not None:
        t, u = step_arrays(reference)
        ax.step(t, u, where="post", color="k", linestyle="--", label="closed form")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("u")
    ax.legend(frameon=False)
    _simple_axes(ax)
    fig.tight_layout()
    return save(fig, path)


def plot_trajectory(traj: PiecewiseTrajectory, path, derivatives: int = 2):
    fig, axes = plt.subplots(derivatives + 1, 1, figsize=(6, 2 + 1.5 * derivatives), sharex=True)
    grid = np.linspace(traj.start, traj.end, 501)
    names = ("position", "velocity", "acceleration", "jerk")
    for k, ax in enumerate(np.atleast_1d(axes)):
        ax.plot(grid, traj.evaluate(grid, k), color="k")
        ax.set_ylabel(names[k] if k < len(names) else f"d{k}")
        _simple_axes(ax)
    np.atleast_1d(axes)[-1].set_xlabel("time (s)")
    fig.tight_layout()
    return save(fig, path)


def plot_mse_bars(rows: Sequence, path):
    """Grouped bars of mean MSE: one group per subject, one bar per model."""
    subjects = sorted({r.subject for r in rows})
    models = sorted({r.model for r in rows}, key=lambda m: (m != "quintic", m))
    means = {s: {} for s in subjects}
    for r in rows:
        # movement types are pooled per subject, weighted by trial count
        acc = means[r.subject].setdefault(r.model, [0.0, 0])
        acc[0] += r.mean_mse * r.n_trials
        acc[1] += r.n_trials
    fig, ax = plt.subplots(figsize=(max(4, 1.5 * len(subjects) + 2), 3.5))
    width = 0.8 / max(1, len(models))
    x = np.arange(len(subjects))
    for i, m in enumerate(models):
        heights = [means[s][m][0] / means[s][m][1] if m in means[s] else 0.0 for s in subjects]
        ax.bar(x + (i - (len(models) - 1) / 2) * width, heights, width,
               label=m, color=MODEL_COLORS.get(m))
    ax.set_xticks(x)
    ax.set_xticklabels([s or "(none)" for s in subjects])
    ax.set_ylabel("mean velocity MSE (m/s)$^2$")
    ax.legend(frameon=False)
    _simple_axes(ax)
    fig.tight_layout()
    return save(fig, path)


def plot_detection(trial: Trial, velocity, onset: int, offset: int, path):
    """Velocity profile of a trial with the detected onset and offset marked."""
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(trial.times, velocity.values, color="k")
    for idx in (onset, offset):
        ax.axvline(trial.times[idx], color="tab:red")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("velocity (m/s)")
    ax.set_title(trial.id)
    _simple_axes(ax)
    fig.tight_layout()
    return save(fig, path)
