"""Figure builders. Each returns the plotted data alongside the figure so
tests can assert on series rather than pixels."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .series import load_trial_trajectories, moving_average, read_returns

# Simulator frame: x right, y up in top view, z vertical in 3D.
ARENA_HALF = 5.0
Z_MAX = 5.0
START = (0.0, 0.0, 2.5)
OBSTACLES_ENV2 = ((1.5, 1.5, 0.35), (-1.5, 1.5, 0.35),
                  (-1.5, -1.5, 0.35), (1.5, -1.5, 0.35))

OUTCOME_COLORS = {"arrived": "tab:green", "collided": "tab:red",
                  "timeout": "tab:orange", "running": "tab:gray"}


def _label_for(path: str) -> str:
    parent = os.path.basename(os.path.dirname(os.path.abspath(path)))
    return parent or os.path.basename(path)


def plot_rewards(csv_paths, window: int = 300, out_path: str = "rewards.svg",
                 labels=None):
    """One smoothed curve per episodes.csv, colored in input order."""
    if not csv_paths:
        raise ValueError("no input csv files given")
    labels = labels or [_label_for(p) for p in csv_paths]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    data = {}
    for i, (path, label) in enumerate(zip(csv_paths, labels)):
        smoothed = moving_average(read_returns(path), window)
        data[label] = smoothed
        ax.plot(range(1, len(smoothed) + 1), smoothed, label=label,
                color=f"C{i}")
    ax.set_xlabel("episode")
    ax.set_ylabel(f"return (moving average, window {window})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return data


def _draw_arena_top(ax, env_id: int):
    ax.plot([-ARENA_HALF, ARENA_HALF, ARENA_HALF, -ARENA_HALF, -ARENA_HALF],
            [-ARENA_HALF, -ARENA_HALF, ARENA_HALF, ARENA_HALF, -ARENA_HALF],
            color="black", linewidth=1.2)
    if env_id == 2:
        for cx, cy, r in OBSTACLES_ENV2:
            ax.add_patch(plt.Circle((cx, cy), r, color="dimgray"))
    ax.plot([START[0]], [START[1]], marker="s", color="tab:blue",
            markersize=7, linestyle="none")


def plot_trajectories(trials_path: str, kind: str = "traj-top",
                      env_id: int = 1, out_path: str = "traj.svg",
                      limit: int = 100, warn=print):
    """Overlay up to `limit` trial trajectories (top view or 3D)."""
    if kind not in ("traj-top", "traj-3d"):
        raise ValueError(f"unknown figure kind {kind!r}")
    trajs = load_trial_trajectories(trials_path, limit, warn=warn)
    if not trajs:
        raise FileNotFoundError(
            f"no trajectory files found for {trials_path}")

    if kind == "traj-top":
        fig, ax = plt.subplots(figsize=(6, 6))
        _draw_arena_top(ax, env_id)
        for traj in trajs:
            color = OUTCOME_COLORS.get(traj["outcome"], "tab:gray")
            ax.plot(traj["x"], traj["y"], color=color, alpha=0.35,
                    linewidth=0.8)
            if traj["outcome"] == "arrived":
                ax.plot([traj["x"][-1]], [traj["y"][-1]], marker="*",
                        color="tab:green", markersize=6, linestyle="none")
        ax.set_xlim(-ARENA_HALF - 0.5, ARENA_HALF + 0.5)
        ax.set_ylim(-ARENA_HALF - 0.5, ARENA_HALF + 0.5)
        ax.set_aspect("equal")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
    else:
        fig = plt.figure(figsize=(7, 6))
        ax = fig.add_subplot(projection="3d")
        for traj in trajs:
            color = OUTCOME_COLORS.get(traj["outcome"], "tab:gray")
            ax.plot(traj["x"], traj["y"], traj["z"], color=color, alpha=0.35,
                    linewidth=0.8)
        if env_id == 2:
            import numpy as np
            theta = np.linspace(0, 2 * np.pi, 24)
            for cx, cy, r in OBSTACLES_ENV2:
                for z in (0.0, Z_MAX):
                    ax.plot(cx + r * np.cos(theta), cy + r * np.sin(theta),
                            z, color="dimgray", linewidth=0.8)
        ax.scatter([START[0]], [START[1]], [START[2]], marker="s",
                   color="tab:blue", s=40)
        ax.set_xlim(-ARENA_HALF, ARENA_HALF)
        ax.set_ylim(-ARENA_HALF, ARENA_HALF)
        ax.set_zlim(0, Z_MAX)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_zlabel("z (m)")

    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return trajs
