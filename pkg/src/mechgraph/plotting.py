"""Figure rendering for trajectories and sweep results (headless, file output)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .protocol import NoiseSweepResult, SqueezingSweepResult, Trajectory

_DPI = 150


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def trajectory_figure(traj: Trajectory, path, *, steady: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(traj.times, traj.fidelities, lw=1.5)
    for idx in traj.step_boundaries[:-1]:
        ax.axvline(traj.times[idx], color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("step" if steady else r"time  $\kappa t$")
    ax.set_ylabel("fidelity to target")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def switchtime_figure(t_grid, fidelities, path) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.semilogx(np.asarray(t_grid), np.asarray(fidelities), "o-", ms=4)
    ax.set_xlabel(r"switching time  $\kappa t_s$")
    ax.set_ylabel("final fidelity")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3, which="both")
    return _save(fig, path)


def noise_sweep_figure(result: NoiseSweepResult, path) -> Path:
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    temps = result.temperatures_mK
    gammas = result.gamma_over_kappa
    mesh = ax.pcolormesh(
        temps, gammas, result.fidelity, shading="nearest", vmin=0.0, vmax=1.0
    )
    if len(temps) > 1 and len(gammas) > 1:
        for level, style in ((0.99, "-"), (0.90, "--"), (0.80, ":")):
            if result.fidelity.min() < level < result.fidelity.max():
                ax.contour(
                    temps, gammas, result.fidelity,
                    levels=[level], colors="white", linestyles=style, linewidths=1.2,
                )
    if len(gammas) > 1 and gammas.min() > 0:
        ax.set_yscale("log")
    ax.set_xlabel("bath temperature (mK)")
    ax.set_ylabel(r"damping  $\gamma/\kappa$")
    fig.colorbar(mesh, ax=ax, label="optimised fidelity")
    return _save(fig, path)


def squeezing_sweep_figure(result: SqueezingSweepResult, path) -> Path:
    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    for i, n in enumerate(result.n_nodes):
        ax.plot(result.db_grid, result.fidelity[i], "o-", ms=4, label=f"N = {n}")
    ax.set_xlabel("target squeezing (dB)")
    ax.set_ylabel("optimised fidelity")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _save(fig, path)
