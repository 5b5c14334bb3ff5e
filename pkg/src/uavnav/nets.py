"""Minimal neural-network engine for the navigation agents.

Hand-written forward/backward for dense and LSTM layers, squashed-Gaussian
sampling for the stochastic actors, Adam, and Polyak target updates. The
engine is dtype-parametric: float32 for training, float64 for gradient
checking. No general autodiff; every network class owns its backward pass,
verified against central finite differences (see gradcheck).
"""

from __future__ import annotations

import math

import numpy as np

OBS_DIM = 26
ACT_DIM = 3

LOG_STD_MIN = -6.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6

_LOG_2PI = math.log(2.0 * math.pi)


class ParamTensor:
    """Named parameter array with a gradient buffer of the same shape."""

    __slots__ = ("name", "values", "grad")

    def __init__(self, name: str, values: np.ndarray):
        self.name = name
        self.values = values
        self.grad = np.zeros_like(values)

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad[...] = 0.0


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            shape, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Dense:
    def __init__(self, name: str, n_in: int, n_out: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.W = ParamTensor(f"{name}.W",
                             _glorot(rng, n_in, n_out, (n_in, n_out), dtype))
        self.b = ParamTensor(f"{name}.b", np.zeros(n_out, dtype=dtype))
        self._x = None

    def tensors(self):
        return [self.W, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.W.values + self.b.values

    def backward(self, dy: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError("backward called before forward")
        x = self._x
        x2 = x.reshape(-1, x.shape[-1])
        dy2 = dy.reshape(-1, dy.shape[-1])
        self.W.grad += x2.T @ dy2
        self.b.grad += dy2.sum(axis=0)
        return dy @ self.W.values.T


class Lstm:
    """Single LSTM layer over (batch, time, features) sequences.

    Gate order in the packed weight matrices is input, forget, candidate,
    output. Forget-gate bias starts at 1 so fresh cells remember by default.
    """

    def __init__(self, name: str, n_in: int, n_hidden: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.n_in = n_in
        self.n_hidden = n_hidden
        self.Wx = ParamTensor(f"{name}.Wx",
                              _glorot(rng, n_in, n_hidden,
                                      (n_in, 4 * n_hidden), dtype))
        self.Wh = ParamTensor(f"{name}.Wh",
                              _glorot(rng, n_hidden, n_hidden,
                                      (n_hidden, 4 * n_hidden), dtype))
        b = np.zeros(4 * n_hidden, dtype=dtype)
        b[n_hidden:2 * n_hidden] = 1.0
        self.b = ParamTensor(f"{name}.b", b)
        self._cache = None

    def tensors(self):
        return [self.Wx, self.Wh, self.b]

    def zero_state(self, batch: int, dtype=None):
        dtype = dtype or self.Wx.values.dtype
        return (np.zeros((batch, self.n_hidden), dtype=dtype),
                np.zeros((batch, self.n_hidden), dtype=dtype))

    def forward(self, x: np.ndarray, state=None) -> tuple[np.ndarray, tuple]:
        """x: (B, T, n_in) -> hidden outputs (B, T, H) and final (h, c)."""
        B, T, _ = x.shape
        H = self.n_hidden
        if state is None:
            state = self.zero_state(B, x.dtype)
        h, c = state
        xp = x.reshape(B * T, -1) @ self.Wx.values + self.b.values
        xp = xp.reshape(B, T, 4 * H)
        hs = np.empty((B, T, H), dtype=x.dtype)
        gates, cells = [], []
        for t in range(T):
            z = xp[:, t, :] + h @ self.Wh.values
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            gates.append((i, f, g, o, tc, c, h))
            cells.append(c_new)
            h, c = h_new, c_new
            hs[:, t, :] = h
        self._cache = (x, gates, cells)
        return hs, (h, c)

    def step(self, x: np.ndarray, state) -> tuple[np.ndarray, tuple]:
        """Single inference step, x: (B, n_in). No cache is kept."""
        h, c = state
        H = self.n_hidden
        z = x @ self.Wx.values + h @ self.Wh.values + self.b.values
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        return h, (h, c)

    def backward(self, dhs: np.ndarray) -> np.ndarray:
        """dhs: (B, T, H) upstream gradient on every hidden output."""
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        x, gates, cells = self._cache
        B, T, _ = x.shape
        H = self.n_hidden
        dz_all = np.empty((B, T, 4 * H), dtype=x.dtype)
        dh_next = np.zeros((B, H), dtype=x.dtype)
        dc_next = np.zeros((B, H), dtype=x.dtype)
        for t in range(T - 1, -1, -1):
            i, f, g, o, tc, c_prev, _h_prev = gates[t]
            dh = dhs[:, t, :] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            do = dh * tc
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = dz_all[:, t, :]
            dz[:, :H] = di * i * (1.0 - i)
            dz[:, H:2 * H] = df * f * (1.0 - f)
            dz[:, 2 * H:3 * H] = dg * (1.0 - g * g)
            dz[:, 3 * H:] = do * o * (1.0 - o)
            dh_next = dz @ self.Wh.values.T
            dc_next = dc * f
        # Parameter gradients in two big matmuls.
        x2 = x.reshape(B * T, -1)
        dz2 = dz_all.reshape(B * T, 4 * H)
        self.Wx.grad += x2.T @ dz2
        self.b.grad += dz2.sum(axis=0)
        h_prev = np.stack([gates[t][6] for t in range(T)], axis=1)
        self.Wh.grad += h_prev.reshape(B * T, H).T @ dz2
        return (dz2 @ self.Wx.values.T).reshape(B, T, -1)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class _Relu:
    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask


class Network:
    """Base: ordered parameter access, cloning, target-copy support."""

    name = "net"

    def tensors(self) -> list[ParamTensor]:
        raise NotImplementedError

    def zero_grads(self):
        for p in self.tensors():
            p.zero_grad()

    def copy_params_from(self, other: "Network"):
        for dst, src in zip(self.tensors(), other.tensors()):
            dst.values[...] = src.values


def polyak_update(target: Network | list[ParamTensor],
                  online: Network | list[ParamTensor], tau: float):
    """theta' <- tau * theta + (1 - tau) * theta', element-wise."""
    tgt = target.tensors() if isinstance(target, Network) else target
    src = online.tensors() if isinstance(online, Network) else online
    if len(tgt) != len(src):
        raise ValueError("parameter lists differ in length")
    for pt, po in zip(tgt, src):
        if pt.values.shape != po.values.shape:
            raise ValueError(f"shape mismatch for {pt.name}: "
                             f"{pt.values.shape} vs {po.values.shape}")
        pt.values *= (1.0 - tau)
        pt.values += tau * po.values


class Mlp(Network):
    """Dense trunk with ReLU between layers; no output activation."""

    def __init__(self, name: str, n_in: int, hidden: tuple, n_out: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.name = name
        self.layers = []
        self.relus = []
        last = n_in
        for k, h in enumerate(hidden):
            self.layers.append(Dense(f"{name}.fc{k}", last, h, rng, dtype))
            self.relus.append(_Relu())
            last = h
        self.out = Dense(f"{name}.out", last, n_out, rng, dtype)

    def tensors(self):
        ts = []
        for layer in self.layers:
            ts.extend(layer.tensors())
        ts.extend(self.out.tensors())
        return ts

    def forward(self, x):
        for layer, relu in zip(self.layers, self.relus):
            x = relu.forward(layer.forward(x))
        return self.out.forward(x)

    def backward(self, dy):
        dx = self.out.backward(dy)
        for layer, relu in zip(reversed(self.layers), reversed(self.relus)):
            dx = layer.backward(relu.backward(dx))
        return dx


class MlpActor(Network):
    """Deterministic actor: obs -> tanh action in [-1, 1]^3."""

    def __init__(self, name: str, rng, hidden=(512, 512, 512),
                 n_in=OBS_DIM, n_out=ACT_DIM, dtype=np.float32):
        self.name = name
        self.mlp = Mlp(name, n_in, hidden, n_out, rng, dtype)
        self._u = None

    def tensors(self):
        return self.mlp.tensors()

    def forward(self, obs):
        self._u = np.tanh(self.mlp.forward(obs))
        return self._u

    def backward(self, du):
        return self.mlp.backward(du * (1.0 - self._u * self._u))


class MlpCritic(Network):
    """Q network: concatenated (obs, normalized action) -> scalar."""

    def __init__(self, name: str, rng, hidden=(512, 512, 512),
                 n_obs=OBS_DIM, n_act=ACT_DIM, dtype=np.float32):
        self.name = name
        self.n_obs = n_obs
        self.mlp = Mlp(name, n_obs + n_act, hidden, 1, rng, dtype)

    def tensors(self):
        return self.mlp.tensors()

    def forward(self, obs, act):
        return self.mlp.forward(np.concatenate([obs, act], axis=-1))[:, 0]

    def backward(self, dq):
        """dq: (B,). Returns gradient w.r.t. the action input, (B, n_act)."""
        dx = self.mlp.backward(dq[:, None])
        return dx[:, self.n_obs:]


class MlpValue(Network):
    """State-value network for SAC: obs -> scalar."""

    def __init__(self, name: str, rng, hidden=(512, 512, 512),
                 n_obs=OBS_DIM, dtype=np.float32):
        self.name = name
        self.mlp = Mlp(name, n_obs, hidden, 1, rng, dtype)

    def tensors(self):
        return self.mlp.tensors()

    def forward(self, obs):
        return self.mlp.forward(obs)[:, 0]

    def backward(self, dv):
        return self.mlp.backward(dv[:, None])


def _soft_clamp_log_std(raw):
    t = np.tanh(raw)
    ls = LOG_STD_MIN + 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (t + 1.0)
    dls_draw = 0.5 * (LOG_STD_MAX - LOG_STD_MIN) * (1.0 - t * t)
    return ls, dls_draw


def _squash_sample(mu, log_std, eps):
    std = np.exp(log_std)
    u = mu + std * eps
    a = np.tanh(u)
    one_m_a2 = 1.0 - a * a
    logp = (-0.5 * eps * eps - log_std - 0.5 * _LOG_2PI
            - np.log(one_m_a2 + SQUASH_EPS)).sum(axis=-1)
    return a, logp, (u, a, one_m_a2)


def _squash_backward(da, dlogp, mu, cache):
    """Gradients of (a, logp) w.r.t. mu and log_std with eps held fixed."""
    u, a, one_m_a2 = cache
    denom = one_m_a2 + SQUASH_EPS
    du = da * one_m_a2 + dlogp[..., None] * (2.0 * a * one_m_a2 / denom)
    dmu = du
    dls = du * (u - mu) - dlogp[..., None]
    return dmu, dls


def squashed_logp_from_u(mu, log_std, u):
    """Log-density of a = tanh(u) under the squashed Gaussian policy.

    Used by the quadrature check that the 1-D action density integrates to 1.
    """
    std = np.exp(log_std)
    a = np.tanh(u)
    z = (u - mu) / std
    return (-0.5 * z * z - log_std - 0.5 * _LOG_2PI
            - np.log(1.0 - a * a + SQUASH_EPS))


class MlpGaussianActor(Network):
    """SAC actor: obs -> squashed-Gaussian action sample and log-density."""

    def __init__(self, name: str, rng, hidden=(512, 512, 512),
                 n_in=OBS_DIM, n_out=ACT_DIM, dtype=np.float32):
        self.name = name
        self.n_out = n_out
        self.trunk = Mlp(f"{name}.trunk", n_in, hidden[:-1], hidden[-1],
                         rng, dtype)
        self._trunk_relu = _Relu()
        self.mu_head = Dense(f"{name}.mu", hidden[-1], n_out, rng, dtype)
        self.ls_head = Dense(f"{name}.ls", hidden[-1], n_out, rng, dtype)
        self._cache = None

    def tensors(self):
        return (self.trunk.tensors() + self.mu_head.tensors()
                + self.ls_head.tensors())

    def _features(self, obs):
        return self._trunk_relu.forward(self.trunk.forward(obs))

    def mean_action(self, obs):
        f = self._features(obs)
        return np.tanh(self.mu_head.forward(f))

    def sample(self, obs, eps):
        """eps: standard-normal draw of shape (B, n_out), held fixed."""
        f = self._features(obs)
        mu = self.mu_head.forward(f)
        ls, dls_draw = _soft_clamp_log_std(self.ls_head.forward(f))
        a, logp, sq = _squash_sample(mu, ls, eps)
        self._cache = (mu, dls_draw, sq)
        return a, logp

    def backward_sample(self, da, dlogp):
        if self._cache is None:
            raise RuntimeError("backward_sample called before sample")
        mu, dls_draw, sq = self._cache
        dmu, dls = _squash_backward(da, dlogp, mu, sq)
        dfeat = self.mu_head.backward(dmu)
        dfeat = dfeat + self.ls_head.backward(dls * dls_draw)
        return self.trunk.backward(self._trunk_relu.backward(dfeat))


class LstmActor(Network):
    """Recurrent deterministic actor: LSTM(32) -> ReLU -> dense -> tanh."""

    def __init__(self, name: str, rng, cells=32, n_in=OBS_DIM,
                 n_out=ACT_DIM, dtype=np.float32):
        self.name = name
        self.lstm = Lstm(f"{name}.lstm", n_in, cells, rng, dtype)
        self._relu = _Relu()
        self.out = Dense(f"{name}.out", cells, n_out, rng, dtype)
        self._u = None

    def tensors(self):
        return self.lstm.tensors() + self.out.tensors()

    def zero_state(self, batch=1):
        return self.lstm.zero_state(batch)

    def forward(self, obs_seq, state=None):
        hs, final = self.lstm.forward(obs_seq, state)
        self._u = np.tanh(self.out.forward(self._relu.forward(hs)))
        return self._u, final

    def step(self, obs, state):
        h, state = self.lstm.step(obs, state)
        u = np.tanh(self.out.forward(np.maximum(h, 0.0)))
        return u, state

    def backward(self, du):
        dh = self._relu.backward(
            self.out.backward(du * (1.0 - self._u * self._u)))
        return self.lstm.backward(dh)


class LstmCritic(Network):
    """Recurrent Q network over (obs, action) step sequences."""

    def __init__(self, name: str, rng, cells=32, n_obs=OBS_DIM,
                 n_act=ACT_DIM, dtype=np.float32):
        self.name = name
        self.n_obs = n_obs
        self.lstm = Lstm(f"{name}.lstm", n_obs + n_act, cells, rng, dtype)
        self._relu = _Relu()
        self.out = Dense(f"{name}.out", cells, 1, rng, dtype)

    def tensors(self):
        return self.lstm.tensors() + self.out.tensors()

    def forward(self, obs_seq, act_seq, state=None):
        x = np.concatenate([obs_seq, act_seq], axis=-1)
        hs, final = self.lstm.forward(x, state)
        q = self.out.forward(self._relu.forward(hs))[..., 0]
        return q, final

    def backward(self, dq):
        """dq: (B, T). Returns gradient w.r.t. the action inputs (B, T, n_act)."""
        dh = self._relu.backward(self.out.backward(dq[..., None]))
        dx = self.lstm.backward(dh)
        return dx[..., self.n_obs:]


class LstmValue(Network):
    """Recurrent state-value network for SAC."""

    def __init__(self, name: str, rng, cells=32, n_obs=OBS_DIM,
                 dtype=np.float32):
        self.name = name
        self.lstm = Lstm(f"{name}.lstm", n_obs, cells, rng, dtype)
        self._relu = _Relu()
        self.out = Dense(f"{name}.out", cells, 1, rng, dtype)

    def tensors(self):
        return self.lstm.tensors() + self.out.tensors()

    def forward(self, obs_seq, state=None):
        hs, final = self.lstm.forward(obs_seq, state)
        return self.out.forward(self._relu.forward(hs))[..., 0], final

    def backward(self, dv):
        dh = self._relu.backward(self.out.backward(dv[..., None]))
        self.lstm.backward(dh)


class LstmGaussianActor(Network):
    """Recurrent SAC actor: LSTM features, per-step mu / log_std heads."""

    def __init__(self, name: str, rng, cells=32, n_in=OBS_DIM,
                 n_out=ACT_DIM, dtype=np.float32):
        self.name = name
        self.n_out = n_out
        self.lstm = Lstm(f"{name}.lstm", n_in, cells, rng, dtype)
        self._relu = _Relu()
        self.mu_head = Dense(f"{name}.mu", cells, n_out, rng, dtype)
        self.ls_head = Dense(f"{name}.ls", cells, n_out, rng, dtype)
        self._cache = None

    def tensors(self):
        return (self.lstm.tensors() + self.mu_head.tensors()
                + self.ls_head.tensors())

    def zero_state(self, batch=1):
        return self.lstm.zero_state(batch)

    def sample(self, obs_seq, eps, state=None):
        hs, final = self.lstm.forward(obs_seq, state)
        f = self._relu.forward(hs)
        mu = self.mu_head.forward(f)
        ls, dls_draw = _soft_clamp_log_std(self.ls_head.forward(f))
        a, logp, sq = _squash_sample(mu, ls, eps)
        self._cache = (mu, dls_draw, sq)
        return a, logp, final

    def step_sample(self, obs, state, eps):
        h, state = self.lstm.step(obs, state)
        f = np.maximum(h, 0.0)
        mu = f @ self.mu_head.W.values + self.mu_head.b.values
        ls, _ = _soft_clamp_log_std(f @ self.ls_head.W.values
                                    + self.ls_head.b.values)
        a = np.tanh(mu + np.exp(ls) * eps)
        return a, state

    def step_mean(self, obs, state):
        h, state = self.lstm.step(obs, state)
        f = np.maximum(h, 0.0)
        return np.tanh(f @ self.mu_head.W.values + self.mu_head.b.values), state

    def backward_sample(self, da, dlogp):
        if self._cache is None:
            raise RuntimeError("backward_sample called before sample")
        mu, dls_draw, sq = self._cache
        dmu, dls = _squash_backward(da, dlogp, mu, sq)
        dfeat = self.mu_head.backward(dmu)
        dfeat = dfeat + self.ls_head.backward(dls * dls_draw)
        self.lstm.backward(self._relu.backward(dfeat))


class Adam:
    """Adam with bias correction; zeroes gradients after each step.

    grad_clip > 0 rescales the joint gradient to that L2 norm first.
    """

    def __init__(self, tensors: list[ParamTensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 grad_clip: float = 0.0):
        self.tensors = tensors
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.grad_clip = grad_clip
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in tensors]
        self.v = [np.zeros_like(p.values) for p in tensors]

    def step(self):
        if self.grad_clip > 0.0:
            total = math.sqrt(sum(float((p.grad * p.grad).sum())
                                  for p in self.tensors))
            if total > self.grad_clip:
                scale = self.grad_clip / total
                for p in self.tensors:
                    p.grad *= scale
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.tensors, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.values -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
            p.zero_grad()


def clone_target(net_ctor, net: Network) -> Network:
    """Build a frozen copy with identical parameters (tau=1 Polyak)."""
    target = net_ctor()
    target.copy_params_from(net)
    return target
