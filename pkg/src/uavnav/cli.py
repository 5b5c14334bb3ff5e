"""Command-line entry point: train, eval, gradcheck, selfcheck.

Every run writes config_resolved.toml (with per-key provenance) into its
output directory so results are reproducible from the echo alone.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, load_config


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--agent", help="ddpg-mlp|sac-mlp|td3-lstm|sac-lstm|bug2")
    p.add_argument("--env", type=int, dest="env_id", help="environment 1 or 2")
    p.add_argument("--task", help="goal|waypoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--wind", choices=["on", "off"])
    p.add_argument("--out", dest="out_dir", help="output root directory")
    p.add_argument("--run-id", dest="run_id")
    p.add_argument("--set", action="append", default=[], dest="assignments",
                   metavar="SECTION.KEY=VALUE",
                   help="override any config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavnav",
        description="Train and evaluate mapless-navigation agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run episodic training")
    _add_common(p_train)
    p_train.add_argument("--episodes", type=int)

    p_eval = sub.add_parser("eval", help="run the 100-trial evaluation")
    _add_common(p_eval)
    p_eval.add_argument("--trials", type=int)
    p_eval.add_argument("--checkpoint", help="checkpoint directory "
                        "(required for learned agents)")
    p_eval.add_argument("--workers", type=int)
    p_eval.add_argument("--save-trajectories", action="store_true",
                        default=None)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient "
                            "verification")
    p_grad.add_argument("--precision", choices=["f64", "f32"], default="f64")
    p_grad.add_argument("--tol", type=float, default=None)
    p_grad.add_argument("--seed", type=int, default=20240)

    sub.add_parser("selfcheck", help="quick world/reward oracle checks")
    return parser


def _flags_from_args(args) -> dict:
    flags = {}
    for key in ("agent", "env_id", "task", "seed", "out_dir", "run_id",
                "episodes", "trials", "checkpoint", "workers"):
        if hasattr(args, key) and getattr(args, key) is not None:
            section = "run"
            flags[(section, key)] = getattr(args, key)
    if getattr(args, "wind", None) is not None:
        flags[("run", "wind")] = args.wind == "on"
    if getattr(args, "save_trajectories", None):
        flags[("run", "save_trajectories")] = True
    return flags


def _prepare_out(cfg) -> str:
    out = os.path.join(cfg.get("run", "out_dir"), cfg.run_id())
    os.makedirs(out, exist_ok=True)
    cfg.write_resolved(os.path.join(out, "config_resolved.toml"))
    return out


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.assignments, _flags_from_args(args))
    agent_kind = cfg.get("run", "agent")
    if agent_kind == "bug2":
        print("error: BUG2 is not trainable; pick a learning agent",
              file=sys.stderr)
        return 2
    if cfg.get("run", "task") != "goal":
        print("error: training uses the single-goal task; the waypoint "
              "circuit is evaluation-only", file=sys.stderr)
        return 2
    from .agents import make_agent
    from .env import NavEnv
    from .harness import train_run

    out = _prepare_out(cfg)
    ss = np.random.SeedSequence(cfg.get("run", "seed"))
    env_seed, agent_seed = ss.spawn(2)
    env = NavEnv(task=None, seed=env_seed, **cfg.env_kwargs())
    agent = make_agent(agent_kind, agent_seed.generate_state(1)[0],
                       cfg.td3_config(), cfg.sac_config(), cfg.train_config())
    train_run(agent, env, cfg.get("run", "episodes"), out,
              checkpoint_every=cfg.get("run", "checkpoint_every"))
    expected = [os.path.join(out, "episodes.csv"),
                os.path.join(out, "checkpoints", "final")]
    if not all(os.path.exists(p) for p in expected):
        print("error: training outputs missing", file=sys.stderr)
        return 1
    print(f"training complete: {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config, args.assignments, _flags_from_args(args))
    agent_kind = cfg.get("run", "agent")
    from .harness import evaluate, write_summary

    if agent_kind == "bug2":
        from .bug2 import Bug2Policy
        policy = Bug2Policy(cfg.bug2_params())
    else:
        ckpt = cfg.get("run", "checkpoint")
        if not ckpt:
            print("error: --checkpoint is required for learned agents",
                  file=sys.stderr)
            return 2
        try:
            policy = load_agent_policy(agent_kind, ckpt, cfg)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3

    out = _prepare_out(cfg)
    metrics, _records = evaluate(
        policy,
        env_id=cfg.get("run", "env_id"),
        task_kind=cfg.get("run", "task"),
        n_trials=cfg.get("run", "trials"),
        base_seed=cfg.get("run", "seed"),
        wind_on=cfg.get("run", "wind"),
        protocol_seed=cfg.get("eval", "protocol_seed"),
        workers=cfg.get("run", "workers"),
        save_trajectories=cfg.get("run", "save_trajectories"),
        out_dir=out)
    write_summary(os.path.join(out, "summary.json"), metrics, cfg.echo_dict())
    if not os.path.isfile(os.path.join(out, "trials.jsonl")):
        print("error: evaluation outputs missing", file=sys.stderr)
        return 1
    print(f"success_rate={metrics.success_rate:.1f}% "
          f"mean_time={metrics.mean_time_s} -> {out}")
    return 0


def load_agent_policy(agent_kind: str, ckpt: str, cfg):
    from .agents import make_agent
    from .checkpoint import load_checkpoint, restore_network
    from .harness import AgentPolicy

    values = load_checkpoint(ckpt)
    agent = make_agent(agent_kind, seed=0, td3_cfg=cfg.td3_config(),
                       sac_cfg=cfg.sac_config(), train_cfg=cfg.train_config())
    for net in agent.networks().values():
        restore_network(net, values)
    return AgentPolicy(agent)


def cmd_gradcheck(args) -> int:
    from .gradcheck import DEFAULT_TOL, run_all

    dtype = np.float64 if args.precision == "f64" else np.float32
    tol = args.tol if args.tol is not None else DEFAULT_TOL
    errors = run_all(dtype, seed=args.seed)
    for name, err in errors.items():
        print(f"{name:28s} {err:.3e}")
    worst = max(errors.values())
    print(f"max relative error: {worst:.3e} ({args.precision}, tol {tol:g})")
    return 0 if worst < tol else 1


def cmd_selfcheck(_args) -> int:
    from .selfcheck import run_selfcheck
    return 0 if run_selfcheck() else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "gradcheck":
            return cmd_gradcheck(args)
        if args.command == "selfcheck":
            return cmd_selfcheck(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
