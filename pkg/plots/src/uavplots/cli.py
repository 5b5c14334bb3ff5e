"""`plots` command line: reward curves and trajectory overlays."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_rewards, plot_trajectories
from .series import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render figures from uavnav run logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_reward = sub.add_parser("reward", help="reward moving-average curves")
    p_reward.add_argument("csvs", nargs="+", help="episodes.csv files")
    p_reward.add_argument("--window", type=int, default=300)
    p_reward.add_argument("--out", default="rewards.svg")
    p_reward.add_argument("--labels", nargs="*", default=None)

    p_traj = sub.add_parser("traj", help="trajectory overlays")
    p_traj.add_argument("trials", help="trials.jsonl file")
    p_traj.add_argument("--kind", choices=["top", "3d"], default="top")
    p_traj.add_argument("--env", type=int, default=1, choices=[1, 2])
    p_traj.add_argument("--out", default="traj.svg")
    p_traj.add_argument("--limit", type=int, default=100)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reward":
            if args.window < 1:
                print("error: --window must be >= 1", file=sys.stderr)
                return 2
            plot_rewards(args.csvs, args.window, args.out, args.labels)
            print(f"wrote {args.out}")
            return 0
        if args.command == "traj":
            kind = "traj-top" if args.kind == "top" else "traj-3d"
            plot_trajectories(args.trials, kind, args.env, args.out,
                              args.limit,
                              warn=lambda m: print(f"warning: {m}",
                                                   file=sys.stderr))
            print(f"wrote {args.out}")
            return 0
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
