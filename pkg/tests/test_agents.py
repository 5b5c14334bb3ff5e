import numpy as np
import pytest

from uavnav.agents import (
    DdpgMlpAgent,
    SacConfig,
    SacMlpAgent,
    SacLstmAgent,
    Td3Config,
    Td3LstmAgent,
    TrainConfig,
    make_agent,
    train_step,
)
from uavnav.env import NavEnv, TaskSpec
from uavnav.nets import MlpCritic, MlpGaussianActor

SMALL = TrainConfig(batch_size=8, min_fill=8, hidden=(8, 8), lstm_cells=8,
                    window_len=4, seq_batch=4)


def zero_all(agent):
    for net in agent.networks().values():
        for p in net.tensors():
            p.values[...] = 0.0


def fill_flat(agent, n=32, r=0.0, done=False, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        agent.buffer.push(rng.normal(size=26).astype(np.float32),
                          rng.uniform(-1, 1, 3).astype(np.float32),
                          r, rng.normal(size=26).astype(np.float32), done)


def fill_episodes(agent, n_episodes=6, ep_len=6, r=0.0, done_last=False,
                  seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_episodes):
        agent.buffer.start_episode(rng.normal(size=26).astype(np.float32))
        for t in range(ep_len):
            agent.buffer.push_step(rng.uniform(-1, 1, 3).astype(np.float32),
                                   r, rng.normal(size=26).astype(np.float32),
                                   done_last and t == ep_len - 1)
        agent.buffer.end_episode()


def snapshot(net):
    return [p.values.copy() for p in net.tensors()]


def unchanged(net, snap):
    return all(np.array_equal(p.values, s)
               for p, s in zip(net.tensors(), snap))


class TestSelectAction:
    def test_zero_network_exploit_gives_midpoint(self):
        agent = DdpgMlpAgent(0, train_cfg=SMALL)
        zero_all(agent)
        obs = np.random.default_rng(1).normal(size=26).astype(np.float32)
        for _ in range(3):
            a, u, _ = agent.select_action(obs, explore=False)
            assert np.allclose(a, [0.125, 0.0, 0.0])
            assert np.all(u == 0.0)

    def test_exploration_noise_is_centered(self):
        agent = DdpgMlpAgent(3, train_cfg=SMALL)
        zero_all(agent)  # deterministic output 0, noise never clips
        obs = np.zeros(26, dtype=np.float32)
        n = 40_000
        acc = np.zeros(3)
        for _ in range(n):
            _, u, _ = agent.select_action(obs, explore=True)
            acc += u
        mean = acc / n
        se = agent.cfg.exploration_sigma / np.sqrt(n)
        assert np.all(np.abs(mean) < 3 * se)

    @pytest.mark.parametrize("kind", ["ddpg-mlp", "sac-mlp", "td3-lstm",
                                      "sac-lstm"])
    def test_actions_always_in_box(self, kind):
        agent = make_agent(kind, seed=2, train_cfg=SMALL)
        rng = np.random.default_rng(5)
        hidden = agent.initial_hidden()
        for explore in (True, False):
            for _ in range(50):
                obs = rng.normal(scale=3.0, size=26).astype(np.float32)
                a, u, hidden = agent.select_action(obs, explore, hidden)
                assert 0.0 <= a[0] <= 0.25
                assert abs(a[1]) <= 0.25 and abs(a[2]) <= 0.25
                assert np.all(np.abs(u) <= 1.0)


class TestDdpgUpdate:
    def test_terminal_transition_target_is_reward(self):
        agent = DdpgMlpAgent(0, train_cfg=SMALL)
        fill_flat(agent, r=-10.0, done=True)
        agent.update(1)
        assert np.allclose(agent.debug_last["y"], -10.0)

    def test_gamma_zero_target_is_reward(self):
        agent = DdpgMlpAgent(0, cfg=Td3Config(gamma=0.0), train_cfg=SMALL)
        fill_flat(agent, r=3.0, done=False)
        agent.update(1)
        assert np.allclose(agent.debug_last["y"], 3.0)

    def test_hand_set_bias_target_and_loss_decrease(self):
        agent = DdpgMlpAgent(0, train_cfg=SMALL)
        zero_all(agent)
        agent.target_critic.mlp.out.b.values[...] = 4.0
        fill_flat(agent, r=1.0, done=False)
        agent.update(1)
        # y = r + gamma * Q'(s', mu'(s')) = 1 + 0.99 * 4
        assert np.allclose(agent.debug_last["y"], 1.0 + 0.99 * 4.0)

    def test_critic_loss_decreases_on_fixed_batch(self):
        agent = DdpgMlpAgent(1, train_cfg=SMALL)
        fill_flat(agent, r=5.0, done=True, seed=3)
        s = agent.buffer.obs[:8]
        a = agent.buffer.act[:8]
        y = np.full(8, 5.0, dtype=np.float32)

        def mse():
            q = agent.critic.forward(s, a)
            return float(np.mean((q - y) ** 2))

        before = mse()
        for i in range(5):
            agent.update(i + 1)
        assert mse() < before

    def test_targets_move_every_step(self):
        agent = DdpgMlpAgent(1, train_cfg=SMALL)
        fill_flat(agent, seed=2)
        snap = snapshot(agent.target_actor)
        agent.update(1)
        assert not unchanged(agent.target_actor, snap)


class TestTd3Update:
    def _agent(self, **cfg_kw):
        agent = Td3LstmAgent(0, cfg=Td3Config(**cfg_kw), train_cfg=SMALL)
        return agent

    def test_min_of_twin_targets_y_value(self):
        agent = self._agent()
        zero_all(agent)
        agent.target_critic1.out.b.values[...] = 5.0
        agent.target_critic2.out.b.values[...] = 3.0
        fill_episodes(agent, r=0.0)
        agent.update(2)
        d = agent.debug_last
        assert np.allclose(d["q1t"], 5.0) and np.allclose(d["q2t"], 3.0)
        assert np.allclose(d["qt"], 3.0)
        assert np.allclose(d["y"], 0.99 * 3.0)

    def test_min_rule_holds_with_random_nets(self):
        agent = self._agent()
        fill_episodes(agent, seed=4)
        for i in range(1, 6):
            agent.update(i)
            d = agent.debug_last
            assert np.array_equal(d["qt"], np.minimum(d["q1t"], d["q2t"]))

    def test_policy_delay_skips_actor_and_targets(self):
        agent = self._agent(policy_delay=2)
        fill_episodes(agent, seed=5)
        actor_snap = snapshot(agent.actor)
        t_actor_snap = snapshot(agent.target_actor)
        losses = agent.update(1)  # 1 % 2 != 0
        assert unchanged(agent.actor, actor_snap)
        assert unchanged(agent.target_actor, t_actor_snap)
        assert "actor_loss" not in losses
        losses = agent.update(2)
        assert not unchanged(agent.actor, actor_snap)
        assert "actor_loss" in losses

    def test_zero_smoothing_noise_gives_exact_target_action(self):
        agent = self._agent(target_noise_sigma=0.0)
        zero_all(agent)  # mu'(s') = 0 everywhere
        fill_episodes(agent)
        agent.update(2)
        assert np.all(agent.debug_last["target_action"] == 0.0)

    def test_critics_change_every_step(self):
        agent = self._agent()
        fill_episodes(agent, seed=6)
        snap = snapshot(agent.critic1)
        agent.update(1)
        assert not unchanged(agent.critic1, snap)


class TestSacUpdate:
    def test_terminal_target_is_reward(self):
        agent = SacMlpAgent(0, train_cfg=SMALL)
        fill_flat(agent, r=7.0, done=True)
        agent.update(1)
        assert np.allclose(agent.debug_last["y"], 7.0)

    def test_recurrent_terminal_target_is_reward(self):
        agent = SacLstmAgent(0, train_cfg=SMALL)
        fill_episodes(agent, ep_len=3, r=2.0, done_last=True)
        agent.update(1)
        d = agent.debug_last
        terminal = d["done"] == 1.0
        assert terminal.any()
        assert np.allclose(d["y"][terminal], 2.0)

    def test_alpha_scales_entropy_term_only(self):
        batches = {}
        for alpha in (0.2, 0.4):
            agent = SacMlpAgent(9, cfg=SacConfig(alpha=alpha),
                                train_cfg=SMALL)
            fill_flat(agent, r=1.0, seed=11)
            agent.update(1)
            batches[alpha] = (agent.debug_last["entropy_term"],
                              agent.debug_last["q_term"])
        e02, q02 = batches[0.2]
        e04, q04 = batches[0.4]
        assert e04 == pytest.approx(2.0 * e02, rel=1e-6)
        assert q04 == pytest.approx(q02, rel=1e-6)

    def test_alpha_zero_limit_matches_deterministic_q_ascent(self):
        rng = np.random.default_rng(0)
        dtype = np.float64
        actor = MlpGaussianActor("a", rng, hidden=(8, 8), n_in=6, n_out=2,
                                 dtype=dtype)
        c1 = MlpCritic("c1", rng, hidden=(8,), n_obs=6, n_act=2, dtype=dtype)
        c2 = MlpCritic("c2", rng, hidden=(8,), n_obs=6, n_act=2, dtype=dtype)
        s = rng.normal(size=(5, 6))
        B = 5

        # analytic gradient through the sampling path with eps = 0, alpha = 0
        a, logp = actor.sample(s, np.zeros((5, 2)))
        q1 = c1.forward(s, a)
        q2 = c2.forward(s, a)
        pick1 = (q1 <= q2).astype(dtype)
        dact = c1.backward(-pick1 / B) + c2.backward(-(1 - pick1) / B)
        actor.backward_sample(dact, np.zeros(B))
        analytic = [p.grad.copy() for p in actor.tensors()]

        # independent oracle: finite differences of the deterministic
        # objective -mean(min(Q1, Q2)(s, tanh(mu(s))))
        def loss():
            am = actor.mean_action(s)
            return -float(np.mean(np.minimum(c1.forward(s, am),
                                             c2.forward(s, am))))

        h = 1e-6
        for p, ga in zip(actor.tensors(), analytic):
            flat = p.values.reshape(-1)
            gn = np.zeros(flat.size)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                l1 = loss()
                flat[i] = orig - h
                l2 = loss()
                flat[i] = orig
                gn[i] = (l1 - l2) / (2 * h)
            gn = gn.reshape(ga.shape)
            denom = np.maximum(np.abs(ga), 1e-3)
            assert np.all(np.abs(ga - gn) / denom < 1e-6)

    def test_value_target_network_moves(self):
        agent = SacMlpAgent(2, train_cfg=SMALL)
        fill_flat(agent, seed=8)
        snap = snapshot(agent.target_value)
        agent.update(1)
        assert not unchanged(agent.target_value, snap)


class TestTrainStep:
    def _env(self, seed=0):
        return NavEnv(env_id=1, task=TaskSpec(
            "goal", (np.array([2.0, 0.0, 2.5]),), 60), seed=seed)

    def test_no_updates_below_min_fill(self):
        cfg = TrainConfig(batch_size=8, min_fill=10_000, hidden=(8,),
                          lstm_cells=8)
        agent = make_agent("ddpg-mlp", seed=1, train_cfg=cfg)
        snaps = {k: snapshot(n) for k, n in agent.networks().items()}
        env = self._env()
        obs = env.reset().vector()
        agent.observe_reset(obs)
        hidden = agent.initial_hidden()
        for i in range(20):
            obs, hidden, res, losses = train_step(agent, env, obs, hidden, i)
            assert losses is None
            if res.done:
                obs = env.reset().vector()
                agent.observe_reset(obs)
        for k, net in agent.networks().items():
            assert unchanged(net, snaps[k])

    def test_buffer_grows_by_episode_length(self):
        cfg = TrainConfig(min_fill=10_000, hidden=(8,))
        agent = make_agent("ddpg-mlp", seed=1, train_cfg=cfg)
        env = self._env()
        obs = env.reset().vector()
        agent.observe_reset(obs)
        hidden = None
        steps = 0
        while True:
            obs, hidden, res, _ = train_step(agent, env, obs, hidden, steps)
            steps += 1
            if res.done:
                break
        assert len(agent.buffer) == steps

    def test_actions_stored_normalized(self):
        cfg = TrainConfig(min_fill=10_000, hidden=(8,))
        agent = make_agent("ddpg-mlp", seed=1, train_cfg=cfg)
        env = self._env()
        obs = env.reset().vector()
        agent.observe_reset(obs)
        for i in range(30):
            obs, _, res, _ = train_step(agent, env, obs, None, i)
            if res.done:
                break
        stored = agent.buffer.act[:len(agent.buffer)]
        assert np.all(stored >= -1.0) and np.all(stored <= 1.0)

    @pytest.mark.parametrize("kind", ["ddpg-mlp", "td3-lstm"])
    def test_fixed_seed_runs_are_bit_identical(self, kind):
        def checksum(kind, seed):
            cfg = TrainConfig(batch_size=4, min_fill=50, hidden=(8, 8),
                              lstm_cells=8, window_len=4, seq_batch=2)
            agent = make_agent(kind, seed=seed, train_cfg=cfg)
            env = self._env(seed=seed)
            obs = env.reset().vector()
            agent.observe_reset(obs)
            hidden = agent.initial_hidden()
            for i in range(1, 180):
                obs, hidden, res, _ = train_step(agent, env, obs, hidden, i)
                if res.done:
                    obs = env.reset().vector()
                    agent.observe_reset(obs)
                    hidden = agent.initial_hidden()
            return np.concatenate([p.values.ravel()
                                   for p in agent.all_tensors()])

        c1 = checksum(kind, 7)
        c2 = checksum(kind, 7)
        assert np.array_equal(c1, c2)

    def test_timeout_keeps_bootstrap_flag_clear(self):
        cfg = TrainConfig(min_fill=10_000, hidden=(8,))
        agent = make_agent("ddpg-mlp", seed=1, train_cfg=cfg)
        env = NavEnv(env_id=1, task=TaskSpec(
            "goal", (np.array([3.0, 0.0, 2.5]),), 5), seed=0, wind_on=False)
        obs = env.reset().vector()
        agent.observe_reset(obs)
        for i in range(5):
            obs, _, res, _ = train_step(agent, env, obs, None, i)
        assert res.outcome == "timeout"
        assert np.all(agent.buffer.done[:5] == 0.0)


class TestLearningRateContinuity:
    @pytest.mark.parametrize("kind", ["ddpg-mlp", "sac-mlp", "td3-lstm",
                                      "sac-lstm"])
    def test_tiny_lr_leaves_parameters_nearly_unchanged(self, kind):
        cfg = TrainConfig(batch_size=4, min_fill=4, hidden=(8, 8),
                          lstm_cells=8, window_len=4, seq_batch=2,
                          actor_lr=1e-12, critic_lr=1e-12)
        agent = make_agent(kind, seed=3, train_cfg=cfg)
        if agent.is_recurrent:
            fill_episodes(agent)
        else:
            fill_flat(agent)
        before = {k: snapshot(n) for k, n in agent.networks().items()}
        agent.update(2)
        for k, net in agent.networks().items():
            for p, old in zip(net.tensors(), before[k]):
                assert np.max(np.abs(p.values - old)) < 1e-6
