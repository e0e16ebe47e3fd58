"""Goal-conditioned Soft Actor-Critic with twin critics.

The policy is a tanh-squashed diagonal Gaussian over actions, scaled to
the action bounds; twin critics regress entropy-adjusted targets with
Polyak-averaged target copies. The state value used for subgoal ranking
is derived from the critics at the mean action rather than a separate
net, so ranking is deterministic.

Rollout-time code uses the plain-numpy forward paths; only the two
update functions build autodiff graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, backward
from .nets import DenseNet, polyak_update
from .optim import AdamState, adam_step, adam_state_arrays, load_adam_state
from .replay import TransitionBatch
from .serialization import load_records, save_records

SacBatch = TransitionBatch

SCALE_FLOOR = 1e-4
SCALE_CAP = 1e2
_LOG_2PI = float(np.log(2.0 * np.pi))
_LN2 = float(np.log(2.0))


def _squash_correction_np(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2) = 2 (ln2 - u - softplus(-2u)), summed over action dims
    return (2.0 * (_LN2 - u - np.logaddexp(0.0, -2.0 * u))).sum(axis=-1)


@dataclass
class SacParams:
    trunk: DenseNet
    mu_head: DenseNet
    scale_head: DenseNet
    q1: DenseNet
    q2: DenseNet
    q1_target: DenseNet
    q2_target: DenseNet
    action_low: np.ndarray
    action_high: np.ndarray
    gamma: float = 0.99
    alpha: float = 0.01
    tau_polyak: float = 0.005
    actor_opt: AdamState = field(default_factory=AdamState)
    critic_opt: AdamState = field(default_factory=AdamState)

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        self._act_scale = (self.action_high - self.action_low) / 2.0
        self._act_mid = (self.action_high + self.action_low) / 2.0

    @property
    def actor_params(self):
        return self.trunk.params + self.mu_head.params + self.scale_head.params

    @property
    def critic_params(self):
        return self.q1.params + self.q2.params


def build_sac(
    state_dim: int,
    action_dim: int,
    goal_dim: int,
    action_low: np.ndarray,
    action_high: np.ndarray,
    hidden: tuple[int, ...] = (64, 64),
    seed: int = 0,
    gamma: float = 0.99,
    alpha: float = 0.01,
    tau_polyak: float = 0.005,
) -> SacParams:
    rng = np.random.default_rng(seed)
    h = list(hidden)
    sg = state_dim + goal_dim
    trunk = DenseNet("actor.trunk", [sg] + h, rng, activation="relu", activate_final=True)
    mu_head = DenseNet("actor.mu", [h[-1], action_dim], rng)
    scale_head = DenseNet("actor.scale", [h[-1], action_dim], rng)
    q1 = DenseNet("q1", [sg + action_dim] + h + [1], rng, activation="relu")
    q2 = DenseNet("q2", [sg + action_dim] + h + [1], rng, activation="relu")
    q1_target = DenseNet("q1t", [sg + action_dim] + h + [1], rng, activation="relu")
    q2_target = DenseNet("q2t", [sg + action_dim] + h + [1], rng, activation="relu")
    q1_target.copy_from(q1)
    q2_target.copy_from(q2)
    return SacParams(
        trunk=trunk,
        mu_head=mu_head,
        scale_head=scale_head,
        q1=q1,
        q2=q2,
        q1_target=q1_target,
        q2_target=q2_target,
        action_low=np.asarray(action_low, dtype=np.float64),
        action_high=np.asarray(action_high, dtype=np.float64),
        gamma=gamma,
        alpha=alpha,
        tau_polyak=tau_polyak,
    )


# ---------------------------------------------------------------------------
# numpy inference paths


def _policy_dist_np(params: SacParams, sg: np.ndarray):
    h = params.trunk.forward_np(sg)
    mu = params.mu_head.forward_np(h)
    raw = params.scale_head.forward_np(h)
    scale = np.minimum(np.logaddexp(0.0, raw) + SCALE_FLOOR, SCALE_CAP)
    return mu, scale


def _log_prob_np(params: SacParams, mu, scale, u):
    z = (u - mu) / scale
    g = (-0.5 * (z * z + _LOG_2PI) - np.log(scale)).sum(axis=-1)
    return g - _squash_correction_np(u) - np.log(params._act_scale).sum()


def policy_action(
    params: SacParams,
    s: np.ndarray,
    g: np.ndarray,
    mode: str = "stochastic",
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
):
    """Action and its log-probability for one (s, g) pair or a batch.

    ``mean`` mode squashes the location with no noise; ``stochastic``
    needs either base noise or an rng to draw it.
    """
    if mode not in ("stochastic", "mean"):
        raise ValueError(f"unknown mode {mode!r}")
    single = s.ndim == 1
    sg = np.concatenate([np.atleast_2d(s), np.atleast_2d(g)], axis=1)
    mu, scale = _policy_dist_np(params, sg)
    if mode == "mean":
        u = mu
    else:
        if noise is None:
            if rng is None:
                raise ValueError("stochastic mode needs noise or an rng")
            noise = rng.standard_normal(mu.shape)
        u = mu + scale * noise
    action = np.tanh(u) * params._act_scale + params._act_mid
    logp = _log_prob_np(params, mu, scale, u)
    if single:
        return action[0], float(logp[0])
    return action, logp


def state_value(params: SacParams, s: np.ndarray, g: np.ndarray):
    """V(s, g): min of the twin critics at the mean action, minus the
    entropy-weighted log-probability of that action. Deterministic."""
    single = s.ndim == 1
    sg = np.concatenate([np.atleast_2d(s), np.atleast_2d(g)], axis=1)
    mu, scale = _policy_dist_np(params, sg)
    a = np.tanh(mu) * params._act_scale + params._act_mid
    logp = _log_prob_np(params, mu, scale, mu)
    sga = np.concatenate([sg, a], axis=1)
    q = np.minimum(params.q1.forward_np(sga)[:, 0], params.q2.forward_np(sga)[:, 0])
    v = q - params.alpha * logp
    return float(v[0]) if single else v


# ---------------------------------------------------------------------------
# training


def critic_update(
    params: SacParams,
    batch: SacBatch,
    lr: float,
    rng: np.random.Generator | None = None,
    next_noise: np.ndarray | None = None,
) -> tuple[float, float]:
    """One twin-critic regression step toward entropy-adjusted targets,
    then a Polyak pass on the target nets. Returns the two MSE losses."""
    sg_next = np.concatenate([batch.next_states, batch.goals], axis=1)
    mu, scale = _policy_dist_np(params, sg_next)
    if next_noise is None:
        if rng is None:
            raise ValueError("critic_update needs next-action noise or an rng")
        next_noise = rng.standard_normal(mu.shape)
    u = mu + scale * next_noise
    a_next = np.tanh(u) * params._act_scale + params._act_mid
    logp = _log_prob_np(params, mu, scale, u)
    sga = np.concatenate([sg_next, a_next], axis=1)
    q_min = np.minimum(
        params.q1_target.forward_np(sga)[:, 0], params.q2_target.forward_np(sga)[:, 0]
    )
    y = batch.rewards + params.gamma * (1.0 - batch.dones) * (q_min - params.alpha * logp)
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("critic target contains non-finite values")

    sga_now = np.concatenate([batch.states, batch.goals, batch.actions], axis=1)
    x = Tensor(sga_now)
    yt = y[:, None]
    d1 = ad.sub(params.q1.forward(x), yt)
    d2 = ad.sub(params.q2.forward(x), yt)
    l1 = ad.meant(ad.square(d1))
    l2 = ad.meant(ad.square(d2))
    loss = ad.add(l1, l2)
    grads = backward(loss, params.critic_params)
    adam_step(params.critic_params, grads, params.critic_opt, lr)
    polyak_update(params.q1_target, params.q1, params.tau_polyak)
    polyak_update(params.q2_target, params.q2, params.tau_polyak)
    return float(l1.value), float(l2.value)


def actor_update(
    params: SacParams,
    batch: SacBatch,
    lr: float,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> float:
    """Reparameterized policy step minimizing E[alpha log pi - min Q]."""
    n = len(batch)
    sg = np.concatenate([batch.states, batch.goals], axis=1)
    if noise is None:
        if rng is None:
            raise ValueError("actor_update needs action noise or an rng")
        noise = rng.standard_normal((n, params.mu_head.sizes[-1]))

    h = params.trunk.forward(Tensor(sg))
    mu = params.mu_head.forward(h)
    raw = params.scale_head.forward(h)
    scale = ad.minimum(
        ad.add(ad.softplus(raw), SCALE_FLOOR), Tensor(np.full(raw.shape, SCALE_CAP))
    )
    u = ad.add(mu, ad.mul(scale, noise))
    a = ad.tanh(u)
    # log pi(a|s,g): Gaussian density at the reparameterized pre-squash
    # sample, minus squash and bound-scaling corrections. Built from the
    # same u/mu/scale nodes so the pathwise gradient is exact.
    z = ad.div(ad.sub(u, mu), scale)
    gauss = ad.sumt(
        ad.sub(ad.mul(ad.square(z), -0.5) - (0.5 * _LOG_2PI), ad.log(scale)), axis=-1
    )
    squash = ad.sumt(ad.tanh_squash_log_det(u), axis=-1)
    logp = ad.sub(ad.sub(gauss, squash), float(np.log(params._act_scale).sum()))

    a_scaled = ad.add(ad.mul(a, params._act_scale), params._act_mid)
    sga = ad.concat([Tensor(sg), a_scaled], axis=1)
    q = ad.minimum(params.q1.forward(sga), params.q2.forward(sga))
    loss = ad.meant(ad.sub(ad.mul(logp, params.alpha), ad.sumt(q, axis=-1)))
    grads = backward(loss, params.actor_params)
    adam_step(params.actor_params, grads, params.actor_opt, lr)
    return float(loss.value)


# ---------------------------------------------------------------------------
# checkpointing


def sac_state_arrays(params: SacParams) -> dict[str, np.ndarray]:
    out = {}
    for net in (params.trunk, params.mu_head, params.scale_head, params.q1, params.q2, params.q1_target, params.q2_target):
        out.update(net.state_dict())
    for prefix, opt in (("actor", params.actor_opt), ("critic", params.critic_opt)):
        for k, v in adam_state_arrays(opt).items():
            out[f"{prefix}.{k}"] = v
    out["action_low"] = params.action_low
    out["action_high"] = params.action_high
    return out


def save_sac(path, params: SacParams) -> None:
    meta = {
        "kind": "sac",
        "version": 1,
        "gamma": params.gamma,
        "alpha": params.alpha,
        "tau_polyak": params.tau_polyak,
        "sizes": {
            "trunk": params.trunk.sizes,
            "mu": params.mu_head.sizes,
            "scale": params.scale_head.sizes,
            "q": params.q1.sizes,
        },
    }
    save_records(path, meta, sac_state_arrays(params))


def load_sac(path) -> SacParams:
    meta, arrays = load_records(path)
    if meta.get("kind") != "sac":
        raise ValueError(f"{path}: not a sac checkpoint")
    sizes = meta["sizes"]
    rng = np.random.default_rng(0)
    params = SacParams(
        trunk=DenseNet("actor.trunk", sizes["trunk"], rng, activation="relu", activate_final=True),
        mu_head=DenseNet("actor.mu", sizes["mu"], rng),
        scale_head=DenseNet("actor.scale", sizes["scale"], rng),
        q1=DenseNet("q1", sizes["q"], rng, activation="relu"),
        q2=DenseNet("q2", sizes["q"], rng, activation="relu"),
        q1_target=DenseNet("q1t", sizes["q"], rng, activation="relu"),
        q2_target=DenseNet("q2t", sizes["q"], rng, activation="relu"),
        action_low=arrays["action_low"],
        action_high=arrays["action_high"],
        gamma=float(meta["gamma"]),
        alpha=float(meta["alpha"]),
        tau_polyak=float(meta["tau_polyak"]),
    )
    for net in (params.trunk, params.mu_head, params.scale_head, params.q1, params.q2, params.q1_target, params.q2_target):
        net.load_state_dict(arrays)
    load_adam_state(params.actor_opt, {k[len("actor.") :]: v for k, v in arrays.items() if k.startswith("actor.adam.")})
    load_adam_state(params.critic_opt, {k[len("critic.") :]: v for k, v in arrays.items() if k.startswith("critic.adam.")})
    return params
