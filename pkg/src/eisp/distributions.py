"""Diagonal location-scale distributions: normal and laplace.

Two layers of API. ``LocScaleDist`` plus the plain-numpy ``dist_*``
functions serve sampling and density evaluation outside the autodiff
graph. The ``*_t`` functions mirror the same math on graph ``Tensor``s
for use inside losses, taking the data points as numpy constants.

Densities are over vectors with independent components: log-probs sum
over the trailing axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

FAMILIES = ("normal", "laplace")

_LOG_2PI = float(np.log(2.0 * np.pi))
_LOG_2 = float(np.log(2.0))


@dataclass(frozen=True)
class LocScaleDist:
    family: str
    loc: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "loc", np.asarray(self.loc, dtype=np.float64))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        if self.loc.shape != self.scale.shape:
            raise ValueError(
                f"loc shape {self.loc.shape} != scale shape {self.scale.shape}"
            )
        if not np.all(self.scale > 0.0):
            raise ValueError("scale must be strictly positive")


def dist_log_prob(d: LocScaleDist, x: np.ndarray) -> np.ndarray:
    """Joint log-density of ``x`` (..., dim), summed over the last axis."""
    x = np.asarray(x, dtype=np.float64)
    if d.family == "normal":
        z = (x - d.loc) / d.scale
        per = -0.5 * (z * z + _LOG_2PI) - np.log(d.scale)
    else:
        per = -np.abs(x - d.loc) / d.scale - _LOG_2 - np.log(d.scale)
    return per.sum(axis=-1)


def standard_noise(family: str, shape: tuple, rng: np.random.Generator) -> np.ndarray:
    """Draw base noise: standard normal, or uniform(-1/2, 1/2) mapped through
    the laplace inverse CDF."""
    if family == "normal":
        return rng.standard_normal(shape)
    if family == "laplace":
        u = rng.uniform(-0.5, 0.5, size=shape)
        return -np.sign(u) * np.log1p(-2.0 * np.abs(u))
    raise ValueError(f"unknown family {family!r}")


def dist_rsample(d: LocScaleDist, noise: np.ndarray) -> np.ndarray:
    """Reparameterized sample loc + scale * noise; the median of the base
    noise maps to the location."""
    return d.loc + d.scale * noise


def dist_sample(d: LocScaleDist, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    shape = d.loc.shape if n is None else (n,) + d.loc.shape
    return dist_rsample(d, standard_noise(d.family, shape, rng))


def kl_divergence(
    q: LocScaleDist,
    p: LocScaleDist,
    mc_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """KL(q || p), closed form for matching families, summed over the last axis.

    Normal:  ln(s2/s1) + (s1^2 + dm^2) / (2 s2^2) - 1/2
    Laplace: ln(s2/s1) + (s1 exp(-|dm|/s1) + |dm|) / s2 - 1

    Cross-family divergences have no closed form here; they are estimated
    by Monte-Carlo when a sample budget is declared, otherwise rejected.
    """
    if q.family != p.family:
        if mc_samples is None:
            raise ValueError(
                f"KL({q.family} || {p.family}) needs an explicit mc_samples budget"
            )
        if rng is None:
            rng = np.random.default_rng(0)
        x = dist_sample(q, rng, mc_samples)
        return np.asarray((dist_log_prob(q, x) - dist_log_prob(p, x)).mean(axis=0))
    s1, s2 = q.scale, p.scale
    dm = q.loc - p.loc
    if q.family == "normal":
        per = np.log(s2 / s1) + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5
    else:
        a = np.abs(dm)
        per = np.log(s2 / s1) + (s1 * np.exp(-a / s1) + a) / s2 - 1.0
    return per.sum(axis=-1)


def kl_monte_carlo(
    q: LocScaleDist, p: LocScaleDist, n: int, rng: np.random.Generator
) -> tuple[float, float]:
    """MC estimate of KL(q || p) with its standard error."""
    x = dist_sample(q, rng, n)
    d = dist_log_prob(q, x) - dist_log_prob(p, x)
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(n))


# ---------------------------------------------------------------------------
# graph-mode counterparts (loc/scale are Tensors, data points are constants)


def log_prob_t(family: str, loc: Tensor, scale: Tensor, x: np.ndarray) -> Tensor:
    """Graph-mode ``dist_log_prob``; Tensor result summed over the last axis."""
    x = np.asarray(x, dtype=np.float64)
    if family == "normal":
        z = ad.div(ad.mul(loc, -1.0) + x, scale)  # (x - loc) / scale
        per = ad.mul(ad.square(z), -0.5) - (0.5 * _LOG_2PI)
        per = ad.sub(per, ad.log(scale))
    elif family == "laplace":
        per = ad.neg(ad.div(ad.absolute(ad.mul(loc, -1.0) + x), scale))
        per = ad.sub(ad.sub(per, ad.log(scale)), _LOG_2)
    else:
        raise ValueError(f"unknown family {family!r}")
    return ad.sumt(per, axis=-1)


def kl_to_standard_t(family: str, loc: Tensor, scale: Tensor) -> Tensor:
    """Graph-mode KL(q(loc, scale) || standard member), summed over last axis."""
    if family == "normal":
        per = ad.mul(ad.square(scale) + ad.square(loc), 0.5) - ad.log(scale) - 0.5
    elif family == "laplace":
        a = ad.absolute(loc)
        per = ad.mul(scale, ad.exp(ad.div(a, ad.mul(scale, -1.0)))) + a - ad.log(scale) - 1.0
    else:
        raise ValueError(f"unknown family {family!r}")
    return ad.sumt(per, axis=-1)
