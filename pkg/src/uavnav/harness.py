"""Training and evaluation orchestration, metric aggregation, and run logs.

File contracts owned here:
  episodes.csv   episode,steps,return,outcome,wall_ms
  trials.jsonl   one TrialRecord object per line
  summary.json   metrics + config echo + build id
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .agents import BaseAgent, make_agent, train_step
from .bug2 import Bug2Params, Bug2Policy
from .checkpoint import save_checkpoint
from .env import (
    TIMEOUT_GOAL,
    NavEnv,
    TaskSpec,
    TrajectoryLogger,
    path_percentage,
    sample_goal,
    waypoint_task,
)
from .world import obstacles_for_env

PROTOCOL_SEED = 20200  # fixed seed for the shared pre-registered goal set

EPISODES_HEADER = "episode,steps,return,outcome,wall_ms"


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    outcome: str
    steps: int
    elapsed_s: float
    waypoints_reached: int
    trajectory_path: str | None = None


@dataclass
class Metrics:
    success_rate: float
    mean_time_s: float | None
    std_time_s: float | None
    mean_path_percentage: float | None


def moving_average(series, window: int = 300) -> np.ndarray:
    """Mean of the trailing `window` elements, expanding at the head."""
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    if len(x) == 0:
        return x
    c = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def compute_metrics(records: list[TrialRecord],
                    total_waypoints: int | None = None) -> Metrics:
    n = len(records)
    successes = [r for r in records if r.outcome == "arrived"]
    rate = 100.0 * len(successes) / n if n else 0.0
    if successes:
        times = np.array([r.elapsed_s for r in successes])
        mean_t = float(times.mean())
        std_t = float(times.std(ddof=1)) if len(times) > 1 else 0.0
    else:
        mean_t = std_t = None
    if total_waypoints:
        pct = float(np.mean([path_percentage(r.waypoints_reached,
                                             total_waypoints)
                             for r in records]))
    else:
        pct = None
    return Metrics(rate, mean_t, std_t, pct)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train_run(agent: BaseAgent, env: NavEnv, episodes: int, out_dir: str,
              checkpoint_every: int = 50,
              rolling_window: int = 50) -> list[dict]:
    """Run episodic training; write episodes.csv and checkpoints under
    out_dir. Returns the per-episode log rows."""
    os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)
    rows = []
    outcomes = []
    best_rate = -1.0
    step_index = 0
    for ep in range(1, episodes + 1):
        obs = env.reset()
        obs_vec = obs.vector()
        agent.observe_reset(obs_vec)
        hidden = agent.initial_hidden()
        ep_return = 0.0
        steps = 0
        while True:
            step_index += 1
            obs_vec, hidden, res, _ = train_step(agent, env, obs_vec, hidden,
                                                 step_index)
            ep_return += res.reward
            steps += 1
            if res.done:
                break
        # wall_ms is simulated wall time (steps * dt); a measured clock would
        # break the byte-identical reproducibility contract of this log.
        rows.append({"episode": ep, "steps": steps, "return": ep_return,
                     "outcome": res.outcome,
                     "wall_ms": int(round(steps * env.dt * 1000))})
        outcomes.append(res.outcome)
        recent = outcomes[-rolling_window:]
        rate = recent.count("arrived") / len(recent)
        if len(outcomes) >= rolling_window and rate > best_rate:
            best_rate = rate
            save_checkpoint(agent.all_tensors(),
                            os.path.join(out_dir, "checkpoints", "best"))
        if checkpoint_every and ep % checkpoint_every == 0:
            save_checkpoint(agent.all_tensors(),
                            os.path.join(out_dir, "checkpoints", f"ep_{ep:06d}"))
    save_checkpoint(agent.all_tensors(),
                    os.path.join(out_dir, "checkpoints", "final"))
    if best_rate < 0:  # short runs: fall back to the final parameters
        save_checkpoint(agent.all_tensors(),
                        os.path.join(out_dir, "checkpoints", "best"))
    write_episodes_csv(os.path.join(out_dir, "episodes.csv"), rows)
    return rows


def write_episodes_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w") as f:
        f.write(EPISODES_HEADER + "\n")
        for r in rows:
            f.write(f"{r['episode']},{r['steps']},{r['return']:.1f},"
                    f"{r['outcome']},{r['wall_ms']}\n")


def read_episodes_csv(path: str) -> list[dict]:
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header != EPISODES_HEADER:
            raise ValueError(f"unexpected episodes.csv header: {header!r}")
        for line in f:
            ep, steps, ret, outcome, wall = line.strip().split(",")
            rows.append({"episode": int(ep), "steps": int(steps),
                         "return": float(ret), "outcome": outcome,
                         "wall_ms": int(wall)})
    return rows


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class AgentPolicy:
    """Exploit-mode wrapper; recurrent hidden state resets every trial."""

    def __init__(self, agent: BaseAgent):
        self.agent = agent
        self._hidden = None

    def start_trial(self, env):
        self._hidden = self.agent.initial_hidden()

    def act(self, env, obs):
        action, _, self._hidden = self.agent.select_action(
            obs.vector(), explore=False, hidden=self._hidden)
        return action


def eval_goals(env_id: int, n: int, protocol_seed: int = PROTOCOL_SEED,
               clearance: float = 0.5):
    """The pre-registered goal set shared by every approach."""
    rng = np.random.default_rng(protocol_seed)
    obstacles = obstacles_for_env(env_id)
    return [sample_goal(rng, obstacles, clearance) for _ in range(n)]


_EVAL_CTX = None


def _run_eval_trial(spec):
    trial_index, seed, task = spec
    ctx = _EVAL_CTX
    env = NavEnv(ctx["env_id"], task=task, seed=seed, wind_on=ctx["wind_on"])
    policy = ctx["policy"]
    obs = env.reset()
    policy.start_trial(env)
    traj = TrajectoryLogger() if ctx["save_traj"] else None
    steps = 0
    while True:
        res = env.step(policy.act(env, obs))
        steps += 1
        if traj is not None:
            traj.log(steps, env.dt, env.state, res.reward, res.outcome)
        obs = res.observation
        if res.done:
            break
    traj_name = f"trial_{trial_index:04d}.csv" if traj is not None else None
    record = TrialRecord(trial_index, seed, res.outcome, steps,
                         steps * env.dt, res.waypoint_index,
                         f"trajectories/{traj_name}" if traj_name else None)
    return record, (traj.rows if traj is not None else None)


def evaluate(policy, env_id: int, task_kind: str = "goal",
             n_trials: int = 100, base_seed: int = 0, wind_on: bool = True,
             protocol_seed: int = PROTOCOL_SEED, workers: int = 1,
             save_trajectories: bool = False, out_dir: str | None = None):
    """Run the 100-trial protocol. Trial i uses seed base_seed + i; results
    are merged in trial order so serial and parallel runs match exactly."""
    global _EVAL_CTX
    if task_kind == "goal":
        goals = eval_goals(env_id, n_trials, protocol_seed)
        tasks = [TaskSpec("goal", (g,), TIMEOUT_GOAL) for g in goals]
        total_wp = None
    elif task_kind == "waypoint":
        tasks = [waypoint_task() for _ in range(n_trials)]
        total_wp = len(tasks[0].goals)
    else:
        raise ValueError(f"unknown task kind {task_kind!r}")

    specs = [(i, base_seed + i, tasks[i]) for i in range(n_trials)]
    _EVAL_CTX = {"env_id": env_id, "wind_on": wind_on, "policy": policy,
                 "save_traj": save_trajectories}
    try:
        if workers <= 1:
            results = [_run_eval_trial(s) for s in specs]
        else:
            # fork inherits _EVAL_CTX; per-trial state is reset in the worker
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_eval_trial, specs))
    finally:
        _EVAL_CTX = None

    records = [r for r, _ in results]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        if save_trajectories:
            tdir = os.path.join(out_dir, "trajectories")
            os.makedirs(tdir, exist_ok=True)
            from .env import TRAJECTORY_HEADER
            for record, rows in results:
                with open(os.path.join(out_dir, record.trajectory_path),
                          "w") as f:
                    f.write(TRAJECTORY_HEADER + "\n")
                    f.write("\n".join(rows) + "\n")
        write_trials_jsonl(os.path.join(out_dir, "trials.jsonl"), records)
    metrics = compute_metrics(records, total_wp)
    return metrics, records


def write_trials_jsonl(path: str, records: list[TrialRecord]) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(asdict(r)) + "\n")


def read_trials_jsonl(path: str) -> list[TrialRecord]:
    records = []
    with open(path) as f:
        for line in f:
            if line.strip():
                records.append(TrialRecord(**json.loads(line)))
    return records


def build_id() -> str:
    from . import __version__
    return f"uavnav-{__version__}"


def write_summary(path: str, metrics: Metrics, config_echo: dict) -> None:
    payload = {"metrics": asdict(metrics), "config": config_echo,
               "build_id": build_id()}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
