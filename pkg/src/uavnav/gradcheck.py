"""Finite-difference verification of every hand-written backward pass.

Each case pairs a pure scalar loss with a forward+backward routine over the
same parameters; central differences are compared element-wise against the
accumulated analytic gradients. Cases cover dense trunks, tanh actor heads,
twin-critic min routing, LSTM recurrences (masked and unmasked), and the
squashed-Gaussian sampling path.
"""

from __future__ import annotations

import numpy as np

from .nets import (
    Lstm,
    LstmActor,
    LstmCritic,
    LstmGaussianActor,
    LstmValue,
    Mlp,
    MlpActor,
    MlpCritic,
    MlpGaussianActor,
    MlpValue,
)

# The acceptance tolerance applies to the 64-bit mode; 32-bit runs are
# informational (float32 FD noise and ReLU kink crossings dominate there).
DEFAULT_TOL = 1e-4


class CheckCase:
    def __init__(self, name, tensors, loss_fn, grad_fn):
        self.name = name
        self.tensors = tensors
        self.loss = loss_fn       # pure: () -> float
        self.grad = grad_fn       # () -> None, accumulates into .grad


def _rel_error(analytic, numeric):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-4)
    return np.abs(analytic - numeric) / denom


def run_case(case: CheckCase, h: float) -> float:
    for p in case.tensors:
        p.zero_grad()
    case.grad()
    analytic = [p.grad.copy() for p in case.tensors]
    worst = 0.0
    for p, ga in zip(case.tensors, analytic):
        flat = p.values.reshape(-1)
        gn = np.zeros_like(ga).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            l1 = case.loss()
            flat[i] = orig - h
            l2 = case.loss()
            flat[i] = orig
            gn[i] = (l1 - l2) / (2.0 * h)
        worst = max(worst, float(_rel_error(ga, gn.reshape(ga.shape)).max()))
        p.zero_grad()
    return worst


def build_cases(dtype=np.float64, seed: int = 20240) -> list[CheckCase]:
    rng = np.random.default_rng(seed)
    cases = []

    def rand(*shape):
        return rng.normal(0.0, 1.0, size=shape).astype(dtype)

    # -- dense trunk ---------------------------------------------------------
    mlp = Mlp("mlp", 5, (7, 6), 4, rng, dtype)
    x = rand(3, 5)
    w = rand(3, 4)

    def mlp_loss():
        return float(np.sum(np.tanh(mlp.forward(x)) * w))

    def mlp_grad():
        y = np.tanh(mlp.forward(x))
        mlp.backward(w * (1.0 - y * y))

    cases.append(CheckCase("dense-trunk", mlp.tensors(), mlp_loss, mlp_grad))

    # -- deterministic actor head --------------------------------------------
    actor = MlpActor("actor", rng, hidden=(8, 8), n_in=6, n_out=3, dtype=dtype)
    xa = rand(4, 6)
    wa = rand(4, 3)
    cases.append(CheckCase(
        "mlp-actor-tanh-head", actor.tensors(),
        lambda: float(np.sum(actor.forward(xa) * wa)),
        lambda: (actor.forward(xa), actor.backward(wa))))

    # -- critic and value ------------------------------------------------------
    critic = MlpCritic("critic", rng, hidden=(8, 8), n_obs=6, n_act=3,
                       dtype=dtype)
    xc, ac_in = rand(4, 6), rand(4, 3)
    wc = rand(4)
    cases.append(CheckCase(
        "mlp-critic", critic.tensors(),
        lambda: float(np.sum(critic.forward(xc, ac_in) * wc)),
        lambda: (critic.forward(xc, ac_in), critic.backward(wc))))

    value = MlpValue("value", rng, hidden=(8, 8), n_obs=6, dtype=dtype)
    cases.append(CheckCase(
        "mlp-value", value.tensors(),
        lambda: float(np.sum(value.forward(xc) * wc)),
        lambda: (value.forward(xc), value.backward(wc))))

    # -- twin-critic min routing ----------------------------------------------
    c1 = MlpCritic("q1", rng, hidden=(8,), n_obs=6, n_act=3, dtype=dtype)
    c2 = MlpCritic("q2", rng, hidden=(8,), n_obs=6, n_act=3, dtype=dtype)

    def twin_loss():
        return float(np.sum(np.minimum(c1.forward(xc, ac_in),
                                       c2.forward(xc, ac_in)) * wc))

    def twin_grad():
        q1 = c1.forward(xc, ac_in)
        q2 = c2.forward(xc, ac_in)
        pick1 = (q1 <= q2).astype(dtype)
        c1.backward(wc * pick1)
        c2.backward(wc * (1.0 - pick1))

    cases.append(CheckCase("twin-critic-min", c1.tensors() + c2.tensors(),
                           twin_loss, twin_grad))

    # -- SAC squashed-Gaussian log-prob path ------------------------------------
    sac = MlpGaussianActor("sac", rng, hidden=(8, 8), n_in=6, n_out=3,
                           dtype=dtype)
    eps = rand(4, 3)
    was, wl = rand(4, 3), rand(4)

    def sac_loss():
        a, logp = sac.sample(xa, eps)
        return float(np.sum(a * was) + np.sum(logp * wl))

    def sac_grad():
        sac.sample(xa, eps)
        sac.backward_sample(was, wl)

    cases.append(CheckCase("sac-logprob-path", sac.tensors(),
                           sac_loss, sac_grad))

    # -- raw LSTM over a sequence ----------------------------------------------
    lstm = Lstm("lstm", 4, 5, rng, dtype)
    xs = rand(3, 8, 4)
    ws = rand(3, 8, 5)

    def lstm_loss():
        hs, _ = lstm.forward(xs)
        return float(np.sum(hs * ws))

    def lstm_grad():
        lstm.forward(xs)
        lstm.backward(ws)

    cases.append(CheckCase("lstm-sequence", lstm.tensors(),
                           lstm_loss, lstm_grad))

    # -- recurrent actor ---------------------------------------------------------
    ractor = LstmActor("ractor", rng, cells=6, n_in=5, n_out=3, dtype=dtype)
    xr = rand(2, 7, 5)
    wr = rand(2, 7, 3)
    cases.append(CheckCase(
        "lstm-actor", ractor.tensors(),
        lambda: float(np.sum(ractor.forward(xr)[0] * wr)),
        lambda: (ractor.forward(xr), ractor.backward(wr))))

    # -- recurrent twin critics with a padding mask -------------------------------
    rc1 = LstmCritic("rq1", rng, cells=6, n_obs=5, n_act=3, dtype=dtype)
    rc2 = LstmCritic("rq2", rng, cells=6, n_obs=5, n_act=3, dtype=dtype)
    ar = rand(2, 7, 3)
    mask = np.ones((2, 7), dtype=dtype)
    mask[0, 5:] = 0.0
    wq = rand(2, 7) * mask

    def rtwin_loss():
        q1, _ = rc1.forward(xr, ar)
        q2, _ = rc2.forward(xr, ar)
        return float(np.sum(np.minimum(q1, q2) * wq))

    def rtwin_grad():
        q1, _ = rc1.forward(xr, ar)
        q2, _ = rc2.forward(xr, ar)
        pick1 = (q1 <= q2).astype(dtype)
        rc1.backward(wq * pick1)
        rc2.backward(wq * (1.0 - pick1))

    cases.append(CheckCase("lstm-twin-critic-masked",
                           rc1.tensors() + rc2.tensors(),
                           rtwin_loss, rtwin_grad))

    rvalue = LstmValue("rvalue", rng, cells=6, n_obs=5, dtype=dtype)
    cases.append(CheckCase(
        "lstm-value", rvalue.tensors(),
        lambda: float(np.sum(rvalue.forward(xr)[0] * wq)),
        lambda: (rvalue.forward(xr), rvalue.backward(wq))))

    # -- recurrent SAC actor -------------------------------------------------------
    rsac = LstmGaussianActor("rsac", rng, cells=6, n_in=5, n_out=3,
                             dtype=dtype)
    eps_r = rand(2, 7, 3)
    war, wlr = rand(2, 7, 3), rand(2, 7)

    def rsac_loss():
        a, logp, _ = rsac.sample(xr, eps_r)
        return float(np.sum(a * war) + np.sum(logp * wlr))

    def rsac_grad():
        rsac.sample(xr, eps_r)
        rsac.backward_sample(war, wlr)

    cases.append(CheckCase("lstm-sac-logprob-path", rsac.tensors(),
                           rsac_loss, rsac_grad))

    return cases


def run_all(dtype=np.float64, h: float | None = None,
            seed: int = 20240) -> dict[str, float]:
    if h is None:
        h = 1e-5 if dtype == np.float64 else 1e-2
    return {case.name: run_case(case, h)
            for case in build_cases(dtype, seed)}
