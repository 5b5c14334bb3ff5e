import json

import numpy as np
import pytest

from uavnav.agents import TrainConfig, make_agent
from uavnav.bug2 import Bug2Policy
from uavnav.env import NavEnv
from uavnav.harness import (
    Metrics,
    TrialRecord,
    compute_metrics,
    eval_goals,
    evaluate,
    moving_average,
    read_episodes_csv,
    read_trials_jsonl,
    train_run,
    write_trials_jsonl,
)

TINY = TrainConfig(batch_size=4, min_fill=120, hidden=(8, 8), lstm_cells=8,
                   window_len=4, seq_batch=2)


class TestMovingAverage:
    def test_constant_series(self):
        assert np.allclose(moving_average([5.0] * 40, 300), 5.0)

    def test_expanding_head(self):
        assert np.allclose(moving_average([0.0, 100.0], 300), [0.0, 50.0])

    def test_window_one_is_identity(self):
        x = [3.0, -1.0, 7.0]
        assert np.allclose(moving_average(x, 1), x)

    def test_trailing_window(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert np.allclose(moving_average(x, 2), [1.0, 1.5, 2.5, 3.5])

    def test_bad_window_rejected(self):
        with pytest.raises(ValueError):
            moving_average([1.0], 0)


class TestMetrics:
    def _rec(self, i, outcome, t, wp=0):
        return TrialRecord(i, i, outcome, int(t * 10), t, wp)

    def test_all_arrived(self):
        recs = [self._rec(i, "arrived", 10.0) for i in range(4)]
        m = compute_metrics(recs)
        assert m.success_rate == 100.0

    def test_mixed_outcomes_mean_and_sample_std(self):
        recs = [self._rec(0, "arrived", 10.0), self._rec(1, "arrived", 20.0),
                self._rec(2, "arrived", 30.0), self._rec(3, "collided", 5.0)]
        m = compute_metrics(recs)
        assert m.success_rate == 75.0
        assert m.mean_time_s == pytest.approx(20.0)
        assert m.std_time_s == pytest.approx(10.0)  # ddof=1 over {10,20,30}

    def test_no_successes(self):
        recs = [self._rec(0, "collided", 5.0), self._rec(1, "timeout", 100.0)]
        m = compute_metrics(recs)
        assert m.success_rate == 0.0
        assert m.mean_time_s is None and m.std_time_s is None

    def test_waypoint_percentage(self):
        counts = [8, 4, 0, 8]
        recs = [self._rec(i, "arrived" if c == 8 else "timeout", 50.0, c)
                for i, c in enumerate(counts)]
        m = compute_metrics(recs, total_waypoints=8)
        assert m.mean_path_percentage == pytest.approx(62.5)
        # success iff the full path was navigated
        assert m.success_rate == pytest.approx(50.0)

    def test_metrics_recomputable_from_jsonl(self, tmp_path):
        recs = [self._rec(0, "arrived", 12.3), self._rec(1, "collided", 4.0)]
        path = tmp_path / "trials.jsonl"
        write_trials_jsonl(path, recs)
        again = read_trials_jsonl(path)
        assert again == recs
        assert compute_metrics(again) == compute_metrics(recs)


class TestTrainRun:
    def test_zero_episodes(self, tmp_path):
        agent = make_agent("ddpg-mlp", seed=1, train_cfg=TINY)
        env = NavEnv(env_id=1, seed=1)
        rows = train_run(agent, env, 0, str(tmp_path))
        assert rows == []
        csv = (tmp_path / "episodes.csv").read_text()
        assert csv == "episode,steps,return,outcome,wall_ms\n"
        assert (tmp_path / "checkpoints" / "final" / "weights.bin").exists()

    def test_episode_rows_and_roundtrip(self, tmp_path):
        agent = make_agent("ddpg-mlp", seed=1, train_cfg=TINY)
        env = NavEnv(env_id=1, seed=1)
        rows = train_run(agent, env, 3, str(tmp_path), checkpoint_every=2)
        assert len(rows) == 3
        back = read_episodes_csv(tmp_path / "episodes.csv")
        assert [r["episode"] for r in back] == [1, 2, 3]
        for r in back:
            assert r["wall_ms"] == r["steps"] * 100
            assert r["outcome"] in ("arrived", "collided", "timeout")
        assert (tmp_path / "checkpoints" / "ep_000002").exists()

    def test_byte_identical_reruns(self, tmp_path):
        def run(d):
            agent = make_agent("td3-lstm", seed=5, train_cfg=TINY)
            env = NavEnv(env_id=1, seed=5)
            train_run(agent, env, 2, str(d))
            return (d / "episodes.csv").read_bytes()

        assert run(tmp_path / "a") == run(tmp_path / "b")


class TestEvaluate:
    def test_protocol_goals_shared_and_deterministic(self):
        g1 = eval_goals(2, 10)
        g2 = eval_goals(2, 10)
        assert all(np.array_equal(a, b) for a, b in zip(g1, g2))

    def test_bug2_serial_parallel_identical(self, tmp_path):
        m1, r1 = evaluate(Bug2Policy(), env_id=1, n_trials=6, base_seed=3,
                          workers=1, out_dir=str(tmp_path / "serial"))
        m2, r2 = evaluate(Bug2Policy(), env_id=1, n_trials=6, base_seed=3,
                          workers=3, out_dir=str(tmp_path / "parallel"))
        assert (tmp_path / "serial" / "trials.jsonl").read_bytes() == \
            (tmp_path / "parallel" / "trials.jsonl").read_bytes()
        assert m1 == m2

    def test_trial_seeds_disjoint_and_derived(self, tmp_path):
        _, recs = evaluate(Bug2Policy(), env_id=1, n_trials=5, base_seed=10)
        assert [r.seed for r in recs] == [10, 11, 12, 13, 14]
        assert [r.trial_index for r in recs] == list(range(5))

    def test_elapsed_matches_steps(self):
        _, recs = evaluate(Bug2Policy(), env_id=1, n_trials=3, base_seed=0)
        for r in recs:
            assert r.elapsed_s == r.steps * 0.1

    def test_trajectories_written_when_requested(self, tmp_path):
        evaluate(Bug2Policy(), env_id=1, n_trials=2, base_seed=0,
                 save_trajectories=True, out_dir=str(tmp_path))
        recs = read_trials_jsonl(tmp_path / "trials.jsonl")
        for r in recs:
            assert r.trajectory_path is not None
            tpath = tmp_path / r.trajectory_path
            assert tpath.exists()
            header = tpath.read_text().split("\n", 1)[0]
            assert header == "step,t,x,y,z,yaw,v_lin,d_yaw,v_alt,reward,outcome"
        # one row per step plus header and the initial pose row
        assert len(tpath.read_text().strip().split("\n")) == recs[-1].steps + 2

    def test_waypoint_success_consistency(self):
        m, recs = evaluate(Bug2Policy(), env_id=1, task_kind="waypoint",
                           n_trials=4, base_seed=2)
        full = sum(1 for r in recs if r.waypoints_reached == 8)
        assert m.success_rate == pytest.approx(100.0 * full / len(recs))

    def test_agent_policy_hidden_reset_each_trial(self):
        from uavnav.harness import AgentPolicy
        agent = make_agent("td3-lstm", seed=0, train_cfg=TINY)
        policy = AgentPolicy(agent)
        m1, r1 = evaluate(policy, env_id=1, n_trials=3, base_seed=4)
        m2, r2 = evaluate(policy, env_id=1, n_trials=3, base_seed=4)
        assert r1 == r2  # no hidden-state leakage across trials or calls


def test_summary_round_trip(tmp_path):
    from uavnav.harness import write_summary
    m = Metrics(50.0, 12.0, 3.0, None)
    write_summary(tmp_path / "summary.json", m, {"run": {"seed": 1}})
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["metrics"]["success_rate"] == 50.0
    assert data["config"]["run"]["seed"] == 1
    assert "build_id" in data
