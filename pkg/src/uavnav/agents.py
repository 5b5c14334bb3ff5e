"""The four learning agents and their update rules.

  ddpg-mlp  single critic, deterministic MLP actor
  sac-mlp   twin critics + state-value network, stochastic MLP actor
  td3-lstm  twin critics, delayed deterministic recurrent actor
  sac-lstm  recurrent variant of sac-mlp

Agents act in normalized [-1, 1]^3 coordinates; scaling to the physical
action box happens at the environment boundary. Replay stores normalized
actions and a done flag that excludes timeouts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import scale_action
from .nets import (
    ACT_DIM,
    OBS_DIM,
    Adam,
    LstmActor,
    LstmCritic,
    LstmGaussianActor,
    LstmValue,
    MlpActor,
    MlpCritic,
    MlpGaussianActor,
    MlpValue,
    polyak_update,
)
from .replay import EpisodeBuffer, ReplayBuffer, recurrent_batch

AGENT_KINDS = ("ddpg-mlp", "sac-mlp", "td3-lstm", "sac-lstm")


@dataclass(frozen=True)
class Td3Config:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise_sigma: float = 0.2
    target_noise_clip: float = 0.5
    exploration_sigma: float = 0.1

    def __post_init__(self):
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        if self.target_noise_clip <= 0:
            raise ValueError("target_noise_clip must be positive")


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.99
    tau: float = 0.005
    alpha: float = 0.2

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class TrainConfig:
    """Sizing and optimizer knobs shared by all agents (none from the paper)."""

    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 500_000
    episode_capacity: int = 5000
    min_fill: int = 2000
    hidden: tuple = (512, 512, 512)
    lstm_cells: int = 32
    window_len: int = 16
    seq_batch: int = 16
    warmup_random: bool = True   # uniform actions until the buffer fills
    grad_clip: float = 0.0       # joint L2 gradient clip, 0 disables


class BaseAgent:
    kind = "base"
    is_recurrent = False

    def __init__(self, seed: int, train_cfg: TrainConfig):
        self.rng = np.random.default_rng(seed)
        self.tc = train_cfg
        self._nets: dict = {}
        self.debug_last: dict = {}   # update internals exposed for tests

    # -- acting --------------------------------------------------------------

    def initial_hidden(self):
        return None

    def select_action(self, obs_vec, explore: bool, hidden=None):
        """Returns (physical action, normalized action u, hidden')."""
        raise NotImplementedError

    # -- experience ----------------------------------------------------------

    def observe_reset(self, obs0):
        pass

    def observe_step(self, obs, u, reward, obs2, done_bootstrap: bool,
                     episode_end: bool):
        raise NotImplementedError

    def ready(self) -> bool:
        raise NotImplementedError

    def update(self, step_index: int):
        raise NotImplementedError

    # -- persistence ---------------------------------------------------------

    def networks(self) -> dict:
        return self._nets

    def all_tensors(self):
        ts = []
        for net in self._nets.values():
            ts.extend(net.tensors())
        return ts


def _explore_noise(u, rng, sigma):
    u = u + rng.normal(0.0, sigma, size=u.shape)
    return np.clip(u, -1.0, 1.0)


# ---------------------------------------------------------------------------
# Feed-forward agents
# ---------------------------------------------------------------------------


class DdpgMlpAgent(BaseAgent):
    kind = "ddpg-mlp"

    def __init__(self, seed: int, cfg: Td3Config = Td3Config(),
                 train_cfg: TrainConfig = TrainConfig()):
        super().__init__(seed, train_cfg)
        self.cfg = cfg
        h = train_cfg.hidden
        init = np.random.default_rng(seed + 1)
        self.actor = MlpActor("actor", init, h)
        self.critic = MlpCritic("critic", init, h)
        self.target_actor = MlpActor("target_actor", init, h)
        self.target_critic = MlpCritic("target_critic", init, h)
        self.target_actor.copy_params_from(self.actor)
        self.target_critic.copy_params_from(self.critic)
        self.adam_actor = Adam(self.actor.tensors(), train_cfg.actor_lr,
                          grad_clip=train_cfg.grad_clip)
        self.adam_critic = Adam(self.critic.tensors(), train_cfg.critic_lr,
                           grad_clip=train_cfg.grad_clip)
        self.buffer = ReplayBuffer(train_cfg.buffer_capacity)
        self._nets = {"actor": self.actor, "critic": self.critic,
                      "target_actor": self.target_actor,
                      "target_critic": self.target_critic}

    def select_action(self, obs_vec, explore: bool, hidden=None):
        u = self.actor.forward(np.asarray(obs_vec, dtype=np.float32)[None])[0]
        if explore:
            u = _explore_noise(u, self.rng, self.cfg.exploration_sigma)
        return scale_action(u), u, None

    def observe_step(self, obs, u, reward, obs2, done_bootstrap, episode_end):
        self.buffer.push(obs, u, reward, obs2, done_bootstrap)

    def ready(self):
        return len(self.buffer) >= self.tc.min_fill

    def update(self, step_index: int):
        if not self.ready():
            return None
        B = self.tc.batch_size
        s, a, r, s2, d = self.buffer.sample(B, self.rng)
        a2 = self.target_actor.forward(s2)
        q2 = self.target_critic.forward(s2, a2)
        y = r + self.cfg.gamma * (1.0 - d) * q2
        self.debug_last = {"y": y, "rew": r, "done": d}

        q = self.critic.forward(s, a)
        diff = q - y
        critic_loss = float(np.mean(diff * diff))
        self.critic.backward(2.0 * diff / B)
        self.adam_critic.step()

        u = self.actor.forward(s)
        q_pi = self.critic.forward(s, u)
        actor_loss = -float(np.mean(q_pi))
        dact = self.critic.backward(np.full(B, -1.0 / B, dtype=q_pi.dtype))
        self.actor.backward(dact)
        self.adam_actor.step()
        self.critic.zero_grads()

        polyak_update(self.target_actor, self.actor, self.cfg.tau)
        polyak_update(self.target_critic, self.critic, self.cfg.tau)
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}


class SacMlpAgent(BaseAgent):
    kind = "sac-mlp"

    def __init__(self, seed: int, cfg: SacConfig = SacConfig(),
                 train_cfg: TrainConfig = TrainConfig()):
        super().__init__(seed, train_cfg)
        self.cfg = cfg
        h = train_cfg.hidden
        init = np.random.default_rng(seed + 1)
        self.actor = MlpGaussianActor("actor", init, h)
        self.critic1 = MlpCritic("critic1", init, h)
        self.critic2 = MlpCritic("critic2", init, h)
        self.value = MlpValue("value", init, h)
        self.target_value = MlpValue("target_value", init, h)
        self.target_value.copy_params_from(self.value)
        self.adam_actor = Adam(self.actor.tensors(), train_cfg.actor_lr,
                          grad_clip=train_cfg.grad_clip)
        self.adam_c1 = Adam(self.critic1.tensors(), train_cfg.critic_lr,
                        grad_clip=train_cfg.grad_clip)
        self.adam_c2 = Adam(self.critic2.tensors(), train_cfg.critic_lr,
                        grad_clip=train_cfg.grad_clip)
        self.adam_value = Adam(self.value.tensors(), train_cfg.critic_lr,
                           grad_clip=train_cfg.grad_clip)
        self.buffer = ReplayBuffer(train_cfg.buffer_capacity)
        self._nets = {"actor": self.actor, "critic1": self.critic1,
                      "critic2": self.critic2, "value": self.value,
                      "target_value": self.target_value}

    def select_action(self, obs_vec, explore: bool, hidden=None):
        obs = np.asarray(obs_vec, dtype=np.float32)[None]
        if explore:
            eps = self.rng.standard_normal((1, ACT_DIM)).astype(np.float32)
            u, _ = self.actor.sample(obs, eps)
        else:
            u = self.actor.mean_action(obs)
        return scale_action(u[0]), u[0], None

    def observe_step(self, obs, u, reward, obs2, done_bootstrap, episode_end):
        self.buffer.push(obs, u, reward, obs2, done_bootstrap)

    def ready(self):
        return len(self.buffer) >= self.tc.min_fill

    def update(self, step_index: int):
        if not self.ready():
            return None
        B = self.tc.batch_size
        alpha = self.cfg.alpha
        s, a, r, s2, d = self.buffer.sample(B, self.rng)

        # Twin critics regress to the target-value bootstrap.
        v2 = self.target_value.forward(s2)
        y = r + self.cfg.gamma * (1.0 - d) * v2
        self.debug_last = {"y": y, "rew": r, "done": d}
        critic_losses = []
        for critic, adam in ((self.critic1, self.adam_c1),
                             (self.critic2, self.adam_c2)):
            q = critic.forward(s, a)
            diff = q - y
            critic_losses.append(float(np.mean(diff * diff)))
            critic.backward(2.0 * diff / B)
            adam.step()

        # One fresh reparameterized sample serves value and actor updates.
        eps = self.rng.standard_normal((B, ACT_DIM)).astype(s.dtype)
        a_new, logp = self.actor.sample(s, eps)
        q1 = self.critic1.forward(s, a_new)
        q2 = self.critic2.forward(s, a_new)
        qmin = np.minimum(q1, q2)

        v = self.value.forward(s)
        diff_v = v - (qmin - alpha * logp)
        value_loss = float(np.mean(diff_v * diff_v))
        self.value.backward(2.0 * diff_v / B)
        self.adam_value.step()

        # Actor: minimize E[alpha*logp - min(Q1, Q2)].
        actor_loss = float(np.mean(alpha * logp - qmin))
        self.debug_last["entropy_term"] = float(np.mean(alpha * logp))
        self.debug_last["q_term"] = -float(np.mean(qmin))
        pick1 = (q1 <= q2).astype(s.dtype)
        dact = self.critic1.backward(-pick1 / B)
        dact = dact + self.critic2.backward(-(1.0 - pick1) / B)
        self.actor.backward_sample(dact, np.full(B, alpha / B, dtype=s.dtype))
        self.adam_actor.step()
        self.critic1.zero_grads()
        self.critic2.zero_grads()

        polyak_update(self.target_value, self.value, self.cfg.tau)
        return {"critic1_loss": critic_losses[0],
                "critic2_loss": critic_losses[1],
                "value_loss": value_loss, "actor_loss": actor_loss}


# ---------------------------------------------------------------------------
# Recurrent agents
# ---------------------------------------------------------------------------


class Td3LstmAgent(BaseAgent):
    kind = "td3-lstm"
    is_recurrent = True

    def __init__(self, seed: int, cfg: Td3Config = Td3Config(),
                 train_cfg: TrainConfig = TrainConfig()):
        super().__init__(seed, train_cfg)
        self.cfg = cfg
        cells = train_cfg.lstm_cells
        init = np.random.default_rng(seed + 1)
        self.actor = LstmActor("actor", init, cells)
        self.critic1 = LstmCritic("critic1", init, cells)
        self.critic2 = LstmCritic("critic2", init, cells)
        self.target_actor = LstmActor("target_actor", init, cells)
        self.target_critic1 = LstmCritic("target_critic1", init, cells)
        self.target_critic2 = LstmCritic("target_critic2", init, cells)
        self.target_actor.copy_params_from(self.actor)
        self.target_critic1.copy_params_from(self.critic1)
        self.target_critic2.copy_params_from(self.critic2)
        self.adam_actor = Adam(self.actor.tensors(), train_cfg.actor_lr,
                          grad_clip=train_cfg.grad_clip)
        self.adam_c1 = Adam(self.critic1.tensors(), train_cfg.critic_lr,
                        grad_clip=train_cfg.grad_clip)
        self.adam_c2 = Adam(self.critic2.tensors(), train_cfg.critic_lr,
                        grad_clip=train_cfg.grad_clip)
        self.buffer = EpisodeBuffer(train_cfg.episode_capacity)
        self._nets = {"actor": self.actor, "critic1": self.critic1,
                      "critic2": self.critic2,
                      "target_actor": self.target_actor,
                      "target_critic1": self.target_critic1,
                      "target_critic2": self.target_critic2}

    def initial_hidden(self):
        return self.actor.zero_state(1)

    def select_action(self, obs_vec, explore: bool, hidden=None):
        if hidden is None:
            hidden = self.initial_hidden()
        obs = np.asarray(obs_vec, dtype=np.float32)[None]
        u, hidden = self.actor.step(obs, hidden)
        u = u[0]
        if explore:
            u = _explore_noise(u, self.rng, self.cfg.exploration_sigma)
        return scale_action(u), u, hidden

    def observe_reset(self, obs0):
        self.buffer.start_episode(obs0)

    def observe_step(self, obs, u, reward, obs2, done_bootstrap, episode_end):
        self.buffer.push_step(u, reward, obs2, done_bootstrap)
        if episode_end:
            self.buffer.end_episode()

    def ready(self):
        return self.buffer.total_steps >= self.tc.min_fill

    def update(self, step_index: int):
        if not self.ready():
            return None
        cfg = self.cfg
        obs, act, rew, nxt, done, mask = recurrent_batch(
            self.buffer, self.tc.window_len, self.tc.seq_batch, self.rng)
        n_valid = mask.sum()

        a2, _ = self.target_actor.forward(nxt)
        noise = np.clip(
            self.rng.normal(0.0, cfg.target_noise_sigma, size=a2.shape),
            -cfg.target_noise_clip, cfg.target_noise_clip).astype(a2.dtype)
        a2 = np.clip(a2 + noise, -1.0, 1.0)
        q1t, _ = self.target_critic1.forward(nxt, a2)
        q2t, _ = self.target_critic2.forward(nxt, a2)
        qt = np.minimum(q1t, q2t)
        y = rew + cfg.gamma * (1.0 - done) * qt
        self.debug_last = {"q1t": q1t, "q2t": q2t, "qt": qt, "y": y,
                           "target_action": a2, "mask": mask,
                           "rew": rew, "done": done}

        critic_losses = []
        for critic, adam in ((self.critic1, self.adam_c1),
                             (self.critic2, self.adam_c2)):
            q, _ = critic.forward(obs, act)
            diff = (q - y) * mask
            critic_losses.append(float((diff * diff).sum() / n_valid))
            critic.backward(2.0 * diff / n_valid)
            adam.step()

        losses = {"critic1_loss": critic_losses[0],
                  "critic2_loss": critic_losses[1]}
        if step_index % cfg.policy_delay == 0:
            u, _ = self.actor.forward(obs)
            q1, _ = self.critic1.forward(obs, u)
            losses["actor_loss"] = -float((q1 * mask).sum() / n_valid)
            dact = self.critic1.backward(-mask / n_valid)
            self.actor.backward(dact)
            self.adam_actor.step()
            self.critic1.zero_grads()
            polyak_update(self.target_actor, self.actor, cfg.tau)
            polyak_update(self.target_critic1, self.critic1, cfg.tau)
            polyak_update(self.target_critic2, self.critic2, cfg.tau)
        return losses


class SacLstmAgent(BaseAgent):
    kind = "sac-lstm"
    is_recurrent = True

    def __init__(self, seed: int, cfg: SacConfig = SacConfig(),
                 train_cfg: TrainConfig = TrainConfig()):
        super().__init__(seed, train_cfg)
        self.cfg = cfg
        cells = train_cfg.lstm_cells
        init = np.random.default_rng(seed + 1)
        self.actor = LstmGaussianActor("actor", init, cells)
        self.critic1 = LstmCritic("critic1", init, cells)
        self.critic2 = LstmCritic("critic2", init, cells)
        self.value = LstmValue("value", init, cells)
        self.target_value = LstmValue("target_value", init, cells)
        self.target_value.copy_params_from(self.value)
        self.adam_actor = Adam(self.actor.tensors(), train_cfg.actor_lr,
                          grad_clip=train_cfg.grad_clip)
        self.adam_c1 = Adam(self.critic1.tensors(), train_cfg.critic_lr,
                        grad_clip=train_cfg.grad_clip)
        self.adam_c2 = Adam(self.critic2.tensors(), train_cfg.critic_lr,
                        grad_clip=train_cfg.grad_clip)
        self.adam_value = Adam(self.value.tensors(), train_cfg.critic_lr,
                           grad_clip=train_cfg.grad_clip)
        self.buffer = EpisodeBuffer(train_cfg.episode_capacity)
        self._nets = {"actor": self.actor, "critic1": self.critic1,
                      "critic2": self.critic2, "value": self.value,
                      "target_value": self.target_value}

    def initial_hidden(self):
        return self.actor.zero_state(1)

    def select_action(self, obs_vec, explore: bool, hidden=None):
        if hidden is None:
            hidden = self.initial_hidden()
        obs = np.asarray(obs_vec, dtype=np.float32)[None]
        if explore:
            eps = self.rng.standard_normal((1, ACT_DIM)).astype(np.float32)
            u, hidden = self.actor.step_sample(obs, hidden, eps)
        else:
            u, hidden = self.actor.step_mean(obs, hidden)
        return scale_action(u[0]), u[0], hidden

    def observe_reset(self, obs0):
        self.buffer.start_episode(obs0)

    def observe_step(self, obs, u, reward, obs2, done_bootstrap, episode_end):
        self.buffer.push_step(u, reward, obs2, done_bootstrap)
        if episode_end:
            self.buffer.end_episode()

    def ready(self):
        return self.buffer.total_steps >= self.tc.min_fill

    def update(self, step_index: int):
        if not self.ready():
            return None
        cfg = self.cfg
        alpha = cfg.alpha
        obs, act, rew, nxt, done, mask = recurrent_batch(
            self.buffer, self.tc.window_len, self.tc.seq_batch, self.rng)
        n_valid = mask.sum()

        v2, _ = self.target_value.forward(nxt)
        y = rew + cfg.gamma * (1.0 - done) * v2
        self.debug_last = {"y": y, "rew": rew, "done": done, "mask": mask}
        critic_losses = []
        for critic, adam in ((self.critic1, self.adam_c1),
                             (self.critic2, self.adam_c2)):
            q, _ = critic.forward(obs, act)
            diff = (q - y) * mask
            critic_losses.append(float((diff * diff).sum() / n_valid))
            critic.backward(2.0 * diff / n_valid)
            adam.step()

        eps = self.rng.standard_normal(act.shape).astype(act.dtype)
        a_new, logp, _ = self.actor.sample(obs, eps)
        q1, _ = self.critic1.forward(obs, a_new)
        q2, _ = self.critic2.forward(obs, a_new)
        qmin = np.minimum(q1, q2)

        v, _ = self.value.forward(obs)
        diff_v = (v - (qmin - alpha * logp)) * mask
        value_loss = float((diff_v * diff_v).sum() / n_valid)
        self.value.backward(2.0 * diff_v / n_valid)
        self.adam_value.step()

        actor_loss = float(((alpha * logp - qmin) * mask).sum() / n_valid)
        pick1 = (q1 <= q2).astype(obs.dtype)
        dact = self.critic1.backward(-pick1 * mask / n_valid)
        dact = dact + self.critic2.backward(-(1.0 - pick1) * mask / n_valid)
        self.actor.backward_sample(dact, alpha * mask / n_valid)
        self.adam_actor.step()
        self.critic1.zero_grads()
        self.critic2.zero_grads()

        polyak_update(self.target_value, self.value, cfg.tau)
        return {"critic1_loss": critic_losses[0],
                "critic2_loss": critic_losses[1],
                "value_loss": value_loss, "actor_loss": actor_loss}


# ---------------------------------------------------------------------------


def make_agent(kind: str, seed: int, td3_cfg: Td3Config = Td3Config(),
               sac_cfg: SacConfig = SacConfig(),
               train_cfg: TrainConfig = TrainConfig()) -> BaseAgent:
    if kind == "ddpg-mlp":
        return DdpgMlpAgent(seed, td3_cfg, train_cfg)
    if kind == "sac-mlp":
        return SacMlpAgent(seed, sac_cfg, train_cfg)
    if kind == "td3-lstm":
        return Td3LstmAgent(seed, td3_cfg, train_cfg)
    if kind == "sac-lstm":
        return SacLstmAgent(seed, sac_cfg, train_cfg)
    raise ValueError(f"unknown agent kind {kind!r}")


def train_step(agent: BaseAgent, env, obs_vec, hidden, step_index: int):
    """One interaction step: act (explore), step the env, store, learn."""
    a_phys, u, hidden = agent.select_action(obs_vec, explore=True,
                                            hidden=hidden)
    if agent.tc.warmup_random and not agent.ready():
        u = agent.rng.uniform(-1.0, 1.0, 3).astype(np.float32)
        a_phys = scale_action(u)
    res = env.step(a_phys)
    obs2 = res.observation.vector()
    done_bootstrap = res.done and res.outcome in ("arrived", "collided")
    agent.observe_step(obs_vec, u, res.reward, obs2, done_bootstrap,
                       episode_end=res.done)
    losses = agent.update(step_index)
    return obs2, hidden, res, losses
