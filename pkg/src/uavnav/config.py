"""Run configuration: schema, provenance tags, and layered overrides.

Precedence is defaults < config file < CLI flags < UAVNAV_* environment
variables. Unknown sections or keys are rejected. Every default carries a
source tag (paper-backed value vs artifact decision); values changed by any
override layer are echoed with source "user" in config_resolved.toml.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ENV_PREFIX = "UAVNAV_"

# section -> key -> (type, default, source)
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "agent": (str, "td3-lstm", "decision"),
        "env_id": (int, 1, "paper"),
        "task": (str, "goal", "paper"),
        "episodes": (int, 1000, "paper"),
        "trials": (int, 100, "paper"),
        "seed": (int, 1, "decision"),
        "wind": (bool, True, "paper"),
        "out_dir": (str, "runs", "decision"),
        "run_id": (str, "", "decision"),
        "workers": (int, 1, "decision"),
        "save_trajectories": (bool, False, "decision"),
        "checkpoint": (str, "", "decision"),
        "checkpoint_every": (int, 50, "decision"),
    },
    "world": {
        "dt": (float, 0.1, "decision"),
        "half_extent_xy": (float, 5.0, "paper"),
        "z_min": (float, 0.0, "decision"),
        "z_max": (float, 5.0, "decision"),
        "r_max": (float, 12.0, "decision"),
        "ou_theta": (float, 0.15, "decision"),
        "ou_sigma": (float, 0.08, "decision"),
        "ou_clamp": (float, 0.175, "paper"),
    },
    "env": {
        "d_norm": (float, 10.0, "decision"),
        "c_d": (float, 0.5, "paper"),
        "c_o": (float, 0.5, "paper"),
        "r_arrive": (float, 100.0, "paper"),
        "r_collide": (float, -10.0, "paper"),
        "timeout_goal": (int, 1000, "decision"),
        "timeout_waypoint": (int, 3000, "decision"),
    },
    "agent": {
        "gamma": (float, 0.99, "decision"),
        "tau": (float, 0.005, "decision"),
        "actor_lr": (float, 1e-4, "decision"),
        "critic_lr": (float, 1e-3, "decision"),
        "batch_size": (int, 64, "decision"),
        "buffer_capacity": (int, 500_000, "decision"),
        "episode_capacity": (int, 5000, "decision"),
        "min_fill": (int, 2000, "decision"),
        "mlp_hidden": (int, 512, "paper"),
        "mlp_layers": (int, 3, "paper"),
        "lstm_cells": (int, 32, "paper"),
        "window_len": (int, 16, "decision"),
        "seq_batch": (int, 16, "decision"),
        "warmup_random": (bool, True, "decision"),
        "grad_clip": (float, 0.0, "decision"),
        "policy_delay": (int, 2, "decision"),
        "target_noise_sigma": (float, 0.2, "decision"),
        "target_noise_clip": (float, 0.5, "decision"),
        "exploration_sigma": (float, 0.1, "decision"),
        "alpha": (float, 0.2, "decision"),
    },
    "bug2": {
        "d_trigger": (float, 1.0, "decision"),
        "standoff": (float, 0.8, "decision"),
        "eps_line": (float, 0.15, "decision"),
        "eps_progress": (float, 0.2, "decision"),
        "k_z": (float, 0.5, "decision"),
        "k_side": (float, 0.8, "decision"),
        "k_bearing": (float, 0.5, "decision"),
        "d_safe": (float, 0.8, "decision"),
        "k_avoid": (float, 2.5, "decision"),
        "slow_radius": (float, 2.0, "decision"),
    },
    "eval": {
        "protocol_seed": (int, 20200, "decision"),
    },
}

AGENT_CHOICES = ("ddpg-mlp", "sac-mlp", "td3-lstm", "sac-lstm", "bug2")
TASK_CHOICES = ("goal", "waypoint")


class ConfigError(ValueError):
    pass


def _coerce(section, key, value, typ):
    if typ is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            low = value.strip().lower()
            if low in ("1", "true", "on", "yes"):
                return True
            if low in ("0", "false", "off", "no"):
                return False
        raise ConfigError(f"{section}.{key}: expected a boolean, got {value!r}")
    if typ is int:
        if isinstance(value, bool):
            raise ConfigError(f"{section}.{key}: expected an integer")
        try:
            i = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected an integer, "
                              f"got {value!r}") from None
        if isinstance(value, float) and value != i:
            raise ConfigError(f"{section}.{key}: expected an integer, "
                              f"got {value!r}")
        return i
    if typ is float:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected a number, "
                              f"got {value!r}") from None
    return str(value)


@dataclass
class RunConfig:
    values: dict
    sources: dict

    @classmethod
    def defaults(cls) -> "RunConfig":
        values, sources = {}, {}
        for section, keys in SCHEMA.items():
            values[section] = {k: spec[1] for k, spec in keys.items()}
            sources[section] = {k: spec[2] for k, spec in keys.items()}
        return cls(values, sources)

    def set(self, section: str, key: str, value):
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        typ = SCHEMA[section][key][0]
        self.values[section][key] = _coerce(section, key, value, typ)
        self.sources[section][key] = "user"

    def get(self, section: str, key: str):
        return self.values[section][key]

    # -- override layers ------------------------------------------------------

    def apply_file(self, path: str):
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, "rb") as f:
            data = tomllib.load(f)
        for section, keys in data.items():
            if not isinstance(keys, dict):
                raise ConfigError(f"top-level key {section!r} is not a section")
            for key, value in keys.items():
                self.set(section, key, value)

    def apply_assignments(self, assignments):
        """Apply ["section.key=value", ...] pairs (CLI --set)."""
        for item in assignments:
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(
                    f"bad --set {item!r}; expected section.key=value")
            target, value = item.split("=", 1)
            section, key = target.split(".", 1)
            self.set(section.strip(), key.strip(), value.strip())

    def apply_environ(self, environ=os.environ):
        for name, value in sorted(environ.items()):
            if not name.startswith(ENV_PREFIX):
                continue
            rest = name[len(ENV_PREFIX):].lower()
            for section in SCHEMA:
                prefix = section + "_"
                if rest.startswith(prefix) and \
                        rest[len(prefix):] in SCHEMA[section]:
                    self.set(section, rest[len(prefix):], value)
                    break
            else:
                raise ConfigError(f"environment variable {name} does not "
                                  f"match any config key")

    # -- validation and output --------------------------------------------------

    def validate(self):
        if self.get("run", "agent") not in AGENT_CHOICES:
            raise ConfigError(f"run.agent must be one of {AGENT_CHOICES}")
        if self.get("run", "task") not in TASK_CHOICES:
            raise ConfigError(f"run.task must be one of {TASK_CHOICES}")
        if self.get("run", "env_id") not in (1, 2):
            raise ConfigError("run.env_id must be 1 or 2")
        if self.get("run", "episodes") < 0:
            raise ConfigError("run.episodes must be >= 0")
        if self.get("run", "trials") < 1:
            raise ConfigError("run.trials must be >= 1")
        if self.get("run", "workers") < 1:
            raise ConfigError("run.workers must be >= 1")
        if self.get("agent", "policy_delay") < 1:
            raise ConfigError("agent.policy_delay must be >= 1")
        if self.get("agent", "alpha") <= 0:
            raise ConfigError("agent.alpha must be positive")
        if self.get("env", "c_d") <= 0 or self.get("env", "c_o") <= 0:
            raise ConfigError("env.c_d and env.c_o must be positive")

    def run_id(self) -> str:
        rid = self.get("run", "run_id")
        if rid:
            return rid
        return (f"{self.get('run', 'agent')}-env{self.get('run', 'env_id')}-"
                f"{self.get('run', 'task')}-seed{self.get('run', 'seed')}")

    def resolved_toml(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                value = self.values[section][key]
                source = self.sources[section][key]
                if isinstance(value, bool):
                    rep = "true" if value else "false"
                elif isinstance(value, str):
                    rep = f'"{value}"'
                else:
                    rep = repr(value)
                lines.append(f"{key} = {rep}  # source: {source}")
            lines.append("")
        return "\n".join(lines)

    def write_resolved(self, path: str):
        with open(path, "w") as f:
            f.write(self.resolved_toml())

    def echo_dict(self) -> dict:
        return {s: dict(keys) for s, keys in self.values.items()}

    # -- typed views -------------------------------------------------------------

    def train_config(self):
        from .agents import TrainConfig
        a = self.values["agent"]
        return TrainConfig(
            actor_lr=a["actor_lr"], critic_lr=a["critic_lr"],
            batch_size=a["batch_size"], buffer_capacity=a["buffer_capacity"],
            episode_capacity=a["episode_capacity"], min_fill=a["min_fill"],
            hidden=tuple([a["mlp_hidden"]] * a["mlp_layers"]),
            lstm_cells=a["lstm_cells"], window_len=a["window_len"],
            seq_batch=a["seq_batch"], warmup_random=a["warmup_random"],
            grad_clip=a["grad_clip"])

    def td3_config(self):
        from .agents import Td3Config
        a = self.values["agent"]
        return Td3Config(gamma=a["gamma"], tau=a["tau"],
                         policy_delay=a["policy_delay"],
                         target_noise_sigma=a["target_noise_sigma"],
                         target_noise_clip=a["target_noise_clip"],
                         exploration_sigma=a["exploration_sigma"])

    def sac_config(self):
        from .agents import SacConfig
        a = self.values["agent"]
        return SacConfig(gamma=a["gamma"], tau=a["tau"], alpha=a["alpha"])

    def bug2_params(self):
        from .bug2 import Bug2Params
        b = self.values["bug2"]
        return Bug2Params(**b)

    def env_kwargs(self) -> dict:
        from .env import RewardParams
        from .world import Arena
        w, e = self.values["world"], self.values["env"]
        return {
            "env_id": self.get("run", "env_id"),
            "wind_on": self.get("run", "wind"),
            "reward_params": RewardParams(e["r_arrive"], e["r_collide"],
                                          e["c_d"], e["c_o"]),
            "arena": Arena(w["half_extent_xy"], w["z_min"], w["z_max"]),
            "dt": w["dt"],
            "r_max": w["r_max"],
            "ou_theta": w["ou_theta"],
            "ou_sigma": w["ou_sigma"],
            "ou_clamp": w["ou_clamp"],
        }


def load_config(file_path: str | None, assignments=(), flags: dict = (),
                environ=os.environ) -> RunConfig:
    """Build a config with the documented precedence chain."""
    cfg = RunConfig.defaults()
    if file_path:
        cfg.apply_file(file_path)
    if flags:
        for (section, key), value in dict(flags).items():
            if value is not None:
                cfg.set(section, key, value)
    if assignments:
        cfg.apply_assignments(assignments)
    cfg.apply_environ(environ)
    cfg.validate()
    return cfg
