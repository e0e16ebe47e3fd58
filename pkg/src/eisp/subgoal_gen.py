"""Conditional subgoal generator trained with a hybrid objective.

The encoder maps (state, goal) to a distribution over subgoals in goal
space; the decoder reconstructs the goal from (state, subgoal). The
latent space and the subgoal space are the same thing, which is what
lets a hindsight term supervise the encoder directly: waypoints actually
visited between an anchor state and an achieved goal are treated as
subgoals the encoder should assign high density.

Total objective: L = L_hybrid + beta * L_hindsight, where L_hybrid is a
single-sample ELBO (unit-variance Gaussian reconstruction plus KL to a
standard prior) and L_hindsight is the mean negative log-density of
recorded waypoints under the encoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor, backward
from .distributions import (
    FAMILIES,
    LocScaleDist,
    kl_to_standard_t,
    log_prob_t,
    standard_noise,
)
from .nets import DenseNet
from .optim import AdamState, adam_step, adam_state_arrays, load_adam_state
from .serialization import load_records, save_records

SCALE_FLOOR = 1e-4
SCALE_CAP = 1e2
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GeneratorParams:
    trunk: DenseNet
    mu_head: DenseNet
    scale_head: DenseNet
    decoder: DenseNet
    family: str = "laplace"
    opt: AdamState = field(default_factory=AdamState)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def params(self):
        return (
            self.trunk.params
            + self.mu_head.params
            + self.scale_head.params
            + self.decoder.params
        )

    @property
    def goal_dim(self) -> int:
        return self.mu_head.sizes[-1]


def build_generator(
    state_dim: int,
    goal_dim: int,
    hidden: tuple[int, ...] = (64, 64),
    family: str = "laplace",
    seed: int = 0,
) -> GeneratorParams:
    rng = np.random.default_rng(seed)
    h = list(hidden)
    trunk = DenseNet(
        "gen.trunk", [state_dim + goal_dim] + h, rng, activation="relu", activate_final=True
    )
    mu_head = DenseNet("gen.mu", [h[-1], goal_dim], rng)
    scale_head = DenseNet("gen.scale", [h[-1], goal_dim], rng)
    decoder = DenseNet("gen.dec", [state_dim + goal_dim] + h + [goal_dim], rng, activation="relu")
    return GeneratorParams(
        trunk=trunk, mu_head=mu_head, scale_head=scale_head, decoder=decoder, family=family
    )


# ---------------------------------------------------------------------------
# numpy inference


def encode(params: GeneratorParams, s: np.ndarray, g: np.ndarray) -> LocScaleDist:
    """Subgoal distribution for one (s, g) pair or a batch of them."""
    sg = np.concatenate([np.atleast_2d(s), np.atleast_2d(g)], axis=1)
    h = params.trunk.forward_np(sg)
    loc = params.mu_head.forward_np(h)
    raw = params.scale_head.forward_np(h)
    scale = np.minimum(np.logaddexp(0.0, raw) + SCALE_FLOOR, SCALE_CAP)
    if s.ndim == 1:
        loc, scale = loc[0], scale[0]
    return LocScaleDist(params.family, loc, scale)


def sample_subgoals(
    dist: LocScaleDist,
    K: int,
    rng: np.random.Generator | None = None,
    zero_noise: bool = False,
) -> np.ndarray:
    """K candidate subgoals from an encoder distribution, shape (K, goal_dim).

    ``zero_noise`` collapses every candidate onto the location, which is
    what deterministic evaluation uses.
    """
    if K < 1:
        raise ValueError("K must be positive")
    loc = np.atleast_1d(np.asarray(dist.loc, dtype=np.float64))
    if loc.ndim != 1:
        raise ValueError("sample_subgoals expects a single distribution, not a batch")
    if zero_noise:
        return np.tile(loc, (K, 1))
    if rng is None:
        raise ValueError("sampling needs an rng unless zero_noise is set")
    noise = standard_noise(dist.family, (K, loc.shape[0]), rng)
    return loc[None, :] + np.atleast_1d(dist.scale)[None, :] * noise


def decode(params: GeneratorParams, s: np.ndarray, subgoal: np.ndarray) -> np.ndarray:
    """Mean of the goal reconstruction given (state, subgoal)."""
    single = s.ndim == 1
    x = np.concatenate([np.atleast_2d(s), np.atleast_2d(subgoal)], axis=1)
    out = params.decoder.forward_np(x)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# losses (graph mode)


def _encode_t(params: GeneratorParams, sg: np.ndarray):
    h = params.trunk.forward(Tensor(sg))
    loc = params.mu_head.forward(h)
    raw = params.scale_head.forward(h)
    scale = ad.minimum(
        ad.add(ad.softplus(raw), SCALE_FLOOR), Tensor(np.full(raw.shape, SCALE_CAP))
    )
    return loc, scale


def hybrid_loss(
    params: GeneratorParams,
    states: np.ndarray,
    goals: np.ndarray,
    noise: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
):
    """Single-sample ELBO: unit-variance Gaussian reconstruction NLL plus
    KL to the standard prior. Returns (loss, recon, kl) graph nodes."""
    states = np.atleast_2d(states)
    goals = np.atleast_2d(goals)
    sg = np.concatenate([states, goals], axis=1)
    loc, scale = _encode_t(params, sg)
    if noise is None:
        if rng is None:
            raise ValueError("hybrid_loss needs noise or an rng")
        noise = standard_noise(params.family, loc.shape, rng)
    subgoal = ad.add(loc, ad.mul(scale, noise))
    dec_in = ad.concat([Tensor(states), subgoal], axis=1)
    recon_mu = params.decoder.forward(dec_in)
    d = goals.shape[1]
    sq = ad.sumt(ad.square(ad.sub(recon_mu, goals)), axis=-1)
    recon = ad.meant(ad.add(ad.mul(sq, 0.5), 0.5 * _LOG_2PI * d))
    kl = ad.meant(kl_to_standard_t(params.family, loc, scale))
    return ad.add(recon, kl), recon, kl


def hindsight_loss(
    params: GeneratorParams,
    anchors: np.ndarray,
    goals: np.ndarray,
    waypoints: np.ndarray,
):
    """Mean negative log-density of visited waypoints under the encoder."""
    anchors = np.atleast_2d(anchors)
    goals = np.atleast_2d(goals)
    waypoints = np.atleast_2d(waypoints)
    sg = np.concatenate([anchors, goals], axis=1)
    loc, scale = _encode_t(params, sg)
    return ad.mul(ad.meant(log_prob_t(params.family, loc, scale, waypoints)), -1.0)


@dataclass(frozen=True)
class GeneratorLossReport:
    recon_nll: float
    kl_term: float
    l_hy: float
    l_hs: float
    beta: float
    total: float


def generator_update(
    params: GeneratorParams,
    states: np.ndarray,
    goals: np.ndarray,
    anchors: np.ndarray | None,
    hs_goals: np.ndarray | None,
    waypoints: np.ndarray | None,
    beta: float,
    lr: float,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> GeneratorLossReport:
    """One optimization step on L = L_hybrid + beta * L_hindsight.

    The hindsight triple may be None (or beta zero) to train the hybrid
    term alone; the report always satisfies total = l_hy + beta * l_hs.
    """
    if beta < 0.0:
        raise ValueError("beta must be non-negative")
    l_hy, recon, kl = hybrid_loss(params, states, goals, noise=noise, rng=rng)
    use_hs = beta != 0.0 and anchors is not None and len(anchors) > 0
    if use_hs:
        l_hs = hindsight_loss(params, anchors, hs_goals, waypoints)
        loss = ad.add(l_hy, ad.mul(l_hs, beta))
        l_hs_v = float(l_hs.value)
    else:
        loss = l_hy
        l_hs_v = 0.0
    if not np.isfinite(loss.value):
        raise FloatingPointError("generator loss is non-finite")
    grads = backward(loss, params.params)
    adam_step(params.params, grads, params.opt, lr)
    return GeneratorLossReport(
        recon_nll=float(recon.value),
        kl_term=float(kl.value),
        l_hy=float(l_hy.value),
        l_hs=l_hs_v,
        beta=beta,
        total=float(loss.value),
    )


# ---------------------------------------------------------------------------
# checkpointing


def generator_state_arrays(params: GeneratorParams) -> dict[str, np.ndarray]:
    out = {}
    for net in (params.trunk, params.mu_head, params.scale_head, params.decoder):
        out.update(net.state_dict())
    out.update(adam_state_arrays(params.opt))
    return out


def save_generator(path, params: GeneratorParams) -> None:
    meta = {
        "kind": "generator",
        "version": 1,
        "family": params.family,
        "sizes": {
            "trunk": params.trunk.sizes,
            "mu": params.mu_head.sizes,
            "scale": params.scale_head.sizes,
            "dec": params.decoder.sizes,
        },
    }
    save_records(path, meta, generator_state_arrays(params))


def load_generator(path) -> GeneratorParams:
    meta, arrays = load_records(path)
    if meta.get("kind") != "generator":
        raise ValueError(f"{path}: not a generator checkpoint")
    sizes = meta["sizes"]
    rng = np.random.default_rng(0)
    params = GeneratorParams(
        trunk=DenseNet("gen.trunk", sizes["trunk"], rng, activation="relu", activate_final=True),
        mu_head=DenseNet("gen.mu", sizes["mu"], rng),
        scale_head=DenseNet("gen.scale", sizes["scale"], rng),
        decoder=DenseNet("gen.dec", sizes["dec"], rng, activation="relu"),
        family=meta["family"],
    )
    for net in (params.trunk, params.mu_head, params.scale_head, params.decoder):
        net.load_state_dict(arrays)
    load_adam_state(params.opt, arrays)
    return params
