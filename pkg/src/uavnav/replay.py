"""Replay storage: a flat transition ring for feed-forward agents and an
episode ring with windowed sampling for the recurrent ones.

Actions are stored in normalized [-1, 1] coordinates; the done flag marks
terminal-by-outcome transitions only (timeout truncation keeps bootstrapping).
"""

from __future__ import annotations

import numpy as np

from .env import ACT_DIM, OBS_DIM


class ReplayBuffer:
    """Uniform-sampling ring of single transitions."""

    def __init__(self, capacity: int = 500_000, obs_dim: int = OBS_DIM,
                 act_dim: int = ACT_DIM):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.act = np.zeros((capacity, act_dim), dtype=np.float32)
        self.rew = np.zeros(capacity, dtype=np.float32)
        self.obs2 = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def push(self, obs, act_u, rew, obs2, done: bool):
        i = self._next
        self.obs[i] = obs
        self.act[i] = act_u
        self.rew[i] = rew
        self.obs2[i] = obs2
        self.done[i] = 1.0 if done else 0.0
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch)
        return (self.obs[idx], self.act[idx], self.rew[idx],
                self.obs2[idx], self.done[idx])


class EpisodeBuffer:
    """Ring of whole episodes for recurrent agents.

    Each stored episode keeps the observation sequence (T+1 rows, so next
    observations are a shifted view), the normalized actions, rewards and
    bootstrap-done flags.
    """

    def __init__(self, capacity_episodes: int = 5000):
        self.capacity = capacity_episodes
        self.episodes: list[dict] = []
        self._next = 0
        self.total_steps = 0

    def __len__(self):
        return len(self.episodes)

    def start_episode(self, obs0):
        self._cur = {"obs": [np.asarray(obs0, dtype=np.float32)],
                     "act": [], "rew": [], "done": []}

    def push_step(self, act_u, rew, obs2, done: bool):
        self._cur["obs"].append(np.asarray(obs2, dtype=np.float32))
        self._cur["act"].append(np.asarray(act_u, dtype=np.float32))
        self._cur["rew"].append(float(rew))
        self._cur["done"].append(1.0 if done else 0.0)

    def end_episode(self):
        ep = {
            "obs": np.stack(self._cur["obs"]),
            "act": np.stack(self._cur["act"]),
            "rew": np.asarray(self._cur["rew"], dtype=np.float32),
            "done": np.asarray(self._cur["done"], dtype=np.float32),
        }
        if len(ep["act"]) == 0:
            return
        if len(self.episodes) < self.capacity:
            self.episodes.append(ep)
        else:
            self.total_steps -= len(self.episodes[self._next]["act"])
            self.episodes[self._next] = ep
        self._next = (self._next + 1) % self.capacity
        self.total_steps += len(ep["act"])


def recurrent_batch(buffer: EpisodeBuffer, window_len: int, batch: int,
                    rng: np.random.Generator, min_fill: int = 0):
    """Sample padded windows of window_len steps from whole episodes.

    Returns (obs, act, rew, next_obs, done, mask), each with a leading
    (batch, window_len) layout. Shorter episodes are zero-padded and masked.
    """
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if buffer.total_steps < min_fill or len(buffer) == 0:
        raise ValueError("buffer below min_fill; cannot sample yet")
    obs_dim = buffer.episodes[0]["obs"].shape[1]
    act_dim = buffer.episodes[0]["act"].shape[1]
    L = window_len
    obs = np.zeros((batch, L, obs_dim), dtype=np.float32)
    nxt = np.zeros((batch, L, obs_dim), dtype=np.float32)
    act = np.zeros((batch, L, act_dim), dtype=np.float32)
    rew = np.zeros((batch, L), dtype=np.float32)
    done = np.zeros((batch, L), dtype=np.float32)
    mask = np.zeros((batch, L), dtype=np.float32)
    ep_idx = rng.integers(0, len(buffer), size=batch)
    for b, e in enumerate(ep_idx):
        ep = buffer.episodes[e]
        T = len(ep["act"])
        if T <= L:
            start, n = 0, T
        else:
            start = int(rng.integers(0, T - L + 1))
            n = L
        obs[b, :n] = ep["obs"][start:start + n]
        nxt[b, :n] = ep["obs"][start + 1:start + n + 1]
        act[b, :n] = ep["act"][start:start + n]
        rew[b, :n] = ep["rew"][start:start + n]
        done[b, :n] = ep["done"][start:start + n]
        mask[b, :n] = 1.0
    return obs, act, rew, nxt, done, mask
