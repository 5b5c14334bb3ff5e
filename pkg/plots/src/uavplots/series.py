"""Readers for the run-log file formats, plus the smoothing used in figures."""

from __future__ import annotations

import json
import os

import numpy as np

EPISODES_COLUMNS = ["episode", "steps", "return", "outcome", "wall_ms"]
TRAJECTORY_COLUMNS = ["step", "t", "x", "y", "z", "yaw", "v_lin", "d_yaw",
                      "v_alt", "reward", "outcome"]


class SchemaError(ValueError):
    pass


def _check_header(line: str, expected: list[str], path: str) -> None:
    got = line.strip().split(",")
    for i, name in enumerate(expected):
        if i >= len(got) or got[i] != name:
            found = got[i] if i < len(got) else "<missing>"
            raise SchemaError(f"{path}: column {i} is {found!r}, "
                              f"expected {name!r}")
    if len(got) > len(expected):
        raise SchemaError(f"{path}: unexpected extra column {got[len(expected)]!r}")


def moving_average(series, window: int = 300) -> np.ndarray:
    """Trailing-window mean with an expanding head, identical to the
    definition the training harness logs against."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    if len(x) == 0:
        return x
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def read_returns(path: str) -> np.ndarray:
    """Episode returns from an episodes.csv file."""
    with open(path) as f:
        _check_header(f.readline(), EPISODES_COLUMNS, path)
        returns = []
        for line in f:
            if line.strip():
                returns.append(float(line.split(",")[2]))
    return np.asarray(returns)


def read_trajectory(path: str) -> dict[str, np.ndarray]:
    """Positions and outcome column from a trajectory CSV."""
    with open(path) as f:
        _check_header(f.readline(), TRAJECTORY_COLUMNS, path)
        xs, ys, zs, outcomes = [], [], [], []
        for line in f:
            if not line.strip():
                continue
            parts = line.strip().split(",")
            xs.append(float(parts[2]))
            ys.append(float(parts[3]))
            zs.append(float(parts[4]))
            outcomes.append(parts[10])
    return {"x": np.asarray(xs), "y": np.asarray(ys), "z": np.asarray(zs),
            "outcome": outcomes[-1] if outcomes else "running"}


def read_trials(path: str) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def load_trial_trajectories(trials_path: str, limit: int = 100,
                            warn=print) -> list[dict]:
    """Resolve and load each trial's trajectory CSV; skip missing files."""
    base = os.path.dirname(os.path.abspath(trials_path))
    out = []
    for rec in read_trials(trials_path)[:limit]:
        rel = rec.get("trajectory_path")
        if not rel:
            warn(f"trial {rec.get('trial_index')}: no trajectory recorded")
            continue
        full = os.path.join(base, rel)
        if not os.path.isfile(full):
            warn(f"trial {rec.get('trial_index')}: missing {full}")
            continue
        traj = read_trajectory(full)
        traj["record"] = rec
        out.append(traj)
    return out
