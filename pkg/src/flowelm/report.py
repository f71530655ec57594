"""Figure rendering for evaluation reports (file output only, Agg backend)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .equations import Trajectory
from .surrogate import raw_moments


def figure_rse(path: str, times: np.ndarray, values: np.ndarray) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(times, values, lw=1.2)
    ax.axhline(100.0, color="gray", lw=0.8, ls="--", label="mean-field baseline")
    ax.set_xlabel("t")
    ax.set_ylabel("RSE [%]")
    ax.set_title("relative squared error over time")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_rse_band(path: str, times: np.ndarray, per_seed: np.ndarray) -> None:
    """Median and interquartile band of RSE across independent seeds."""
    median = np.median(per_seed, axis=0)
    lo = np.percentile(per_seed, 25, axis=0)
    hi = np.percentile(per_seed, 75, axis=0)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.fill_between(times, lo, hi, alpha=0.3, label="interquartile range")
    ax.plot(times, median, lw=1.2, label="median")
    ax.axhline(100.0, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("RSE [%]")
    ax.set_title(f"RSE across {per_seed.shape[0]} model seeds")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_moments(path: str, sim: Trajectory, pred: Trajectory,
                   orders=(1, 2, 3)) -> None:
    """Per-location raw moment profiles, simulation vs prediction."""
    sim_moments = raw_moments(sim, orders)
    pred_moments = raw_moments(pred, orders)
    if sim.grid.dims == 1:
        x = sim.grid.axis_coordinates()
    else:
        x = np.arange(sim.grid.n_nodes)
    fig, axes = plt.subplots(len(orders), 1, figsize=(6, 2.1 * len(orders)),
                             sharex=True)
    for ax, k in zip(np.atleast_1d(axes), orders):
        ax.plot(x, sim_moments[k].ravel(), lw=1.0, label="simulation")
        ax.plot(x, pred_moments[k].ravel(), lw=1.0, ls="--", label="prediction")
        ax.set_ylabel(f"moment k={k}")
    np.atleast_1d(axes)[-1].set_xlabel("x" if sim.grid.dims == 1 else "node index")
    np.atleast_1d(axes)[0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_comparison(path: str, sim: Trajectory, pred: Trajectory) -> None:
    """Side-by-side heatmaps of simulation, prediction, and absolute error."""
    if sim.grid.dims == 1:
        sim_img, pred_img = sim.stack(), pred.stack()
        err_img = np.abs(sim_img - pred_img)
        extent = (0.0, sim.grid.L, len(sim) * sim.dt_snapshot, 0.0)
        fig, axes = plt.subplots(3, 1, figsize=(6.5, 7), sharex=True)
        titles = ("simulation", "prediction", "absolute error")
        for ax, img, title in zip(axes, (sim_img, pred_img, err_img), titles):
            im = ax.imshow(img, aspect="auto", extent=extent, cmap="viridis")
            ax.set_title(title, fontsize=9)
            ax.set_ylabel("t")
            fig.colorbar(im, ax=ax, shrink=0.9)
        axes[-1].set_xlabel("x")
    else:
        picks = sorted({0, len(sim) // 2, len(sim) - 1})
        fig, axes = plt.subplots(3, len(picks), figsize=(2.6 * len(picks), 7),
                                 squeeze=False)
        rows = (
            ("simulation", [sim.states[i].values for i in picks]),
            ("prediction", [pred.states[i].values for i in picks]),
            ("absolute error",
             [np.abs(sim.states[i].values - pred.states[i].values) for i in picks]),
        )
        for r, (label, images) in enumerate(rows):
            for c, img in enumerate(images):
                ax = axes[r][c]
                im = ax.imshow(img, cmap="viridis")
                ax.set_xticks([])
                ax.set_yticks([])
                if r == 0:
                    ax.set_title(f"t = {picks[c] * sim.dt_snapshot:g}", fontsize=9)
                if c == 0:
                    ax.set_ylabel(label, fontsize=9)
            fig.colorbar(im, ax=axes[r][-1], shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figures(out_dir: str, sim: Trajectory, pred: Trajectory,
                          times: np.ndarray, rse_values: np.ndarray) -> list[str]:
    """Standard evaluation figures written next to the CSV output."""
    paths = []
    for name, renderer in (
        ("rse.png", lambda p: figure_rse(p, times, rse_values)),
        ("moments.png", lambda p: figure_moments(p, sim, pred)),
        ("comparison.png", lambda p: figure_comparison(p, sim, pred)),
    ):
        path = os.path.join(out_dir, name)
        renderer(path)
        paths.append(path)
    return paths
