"""Learnable concept priors: candidate sampling and log densities.

Box space: each dimension's (min, max) is reparameterized as a point on
the 2-simplex, (x0, x1, x2) = (0.5 - max, min + 0.5, max - min), and
drawn from a shared learnable Dirichlet. Every simplex point yields a
feasible box and every feasible box a positive-coordinate simplex point,
so the density is always defined; the change of variables from
(x0, x1) to (center, offset) contributes log 2 per dimension.

Vector spaces: isotropic Gaussian with a learnable scale.
"""

from __future__ import annotations

import math

import numpy as np

from ..spaces import SpaceConfig, raw_from_box
from ..store import ParamStore

_ALPHA_FLOOR = 1e-3
_SIGMA_FLOOR = 1e-3
_X_FLOOR = 1e-12
_LOG_2PI = math.log(2.0 * math.pi)


def _inv_softplus(y: float) -> float:
    return float(y + math.log1p(-math.exp(-y)))


def init_prior(store: ParamStore, space: SpaceConfig, prefix: str = "prior") -> None:
    if space.kind == "box":
        # softplus(raw) ~= 2.0: mild preference for mid-sized centered boxes
        store.add(f"{prefix}/box_alpha", np.full(3, _inv_softplus(2.0)))
    else:
        store.add(f"{prefix}/vec_sigma", np.array([_inv_softplus(0.5)]))


def _np_softplus(x):
    return np.logaddexp(0.0, x)


def sample_candidates(store: ParamStore, space: SpaceConfig, n: int,
                      rng: np.random.Generator, prefix: str = "prior") -> np.ndarray:
    """n raw-coordinate samples from the current prior, shape (n, raw_size)."""
    if space.kind == "box":
        alpha = _np_softplus(store[f"{prefix}/box_alpha"]) + _ALPHA_FLOOR
        x = rng.dirichlet(alpha, size=(n, space.d))  # (n, d, 3)
        center = 0.5 * (x[..., 1] - x[..., 0])
        offset = np.maximum(0.5 * x[..., 2], 1e-6)
        out = np.empty((n, 2 * space.d))
        for i in range(n):
            out[i] = raw_from_box(center[i], offset[i]).ravel()
        return out
    sigma = float(_np_softplus(store[f"{prefix}/vec_sigma"])[0] + _SIGMA_FLOOR)
    return rng.normal(0.0, sigma, size=(n, space.d))


def _box_simplex(ops, box):
    """Per-dimension simplex handles (x0, x1, x2) of a BoxH, floored away
    from zero so saturated boxes cannot put log(0) on the tape."""
    coords = []
    for mn, mx in zip(box.mins, box.maxs):
        x0 = ops.maximum(ops.sub(0.5, mx), _X_FLOOR)
        x1 = ops.maximum(ops.add(mn, 0.5), _X_FLOOR)
        x2 = ops.maximum(ops.sub(mx, mn), _X_FLOOR)
        coords.append((x0, x1, x2))
    return coords


def log_prior_density(ops, store: ParamStore, space: SpaceConfig, emb,
                      prefix: str = "prior"):
    """log p_theta(embedding); differentiable in both theta and the embedding.

    `emb` is a BoxH (box space) or a handle list (vector spaces).
    """
    if space.kind == "box":
        raw = ops.leaves_for(f"{prefix}/box_alpha", store[f"{prefix}/box_alpha"])
        alphas = [ops.add(ops.softplus(r, 1.0), _ALPHA_FLOOR) for r in raw]
        alpha_sum = ops.sum_(alphas)
        # log B(alpha) is constant across dimensions
        log_beta = ops.sub(ops.sum_([ops.lgamma(a) for a in alphas]),
                           ops.lgamma(alpha_sum))
        total = 0.0
        for x in _box_simplex(ops, emb):
            terms = [ops.mul(ops.sub(alphas[i], 1.0), ops.log(x[i]))
                     for i in range(3)]
            total = ops.add(total, ops.sub(ops.sum_(terms), log_beta))
            total = ops.add(total, math.log(2.0))
        return total
    raw = ops.leaves_for(f"{prefix}/vec_sigma", store[f"{prefix}/vec_sigma"])
    sigma = ops.add(ops.softplus(raw[0], 1.0), _SIGMA_FLOOR)
    log_sigma = ops.log(sigma)
    var2 = ops.mul(2.0, ops.mul(sigma, sigma))
    total = 0.0
    for v in emb:
        quad = ops.div(ops.mul(v, v), var2)
        total = ops.sub(total, ops.add(ops.add(0.5 * _LOG_2PI, log_sigma), quad))
    return total


def np_log_prior_density(store: ParamStore, space: SpaceConfig,
                         raw: np.ndarray, prefix: str = "prior") -> float:
    """Float mirror of log_prior_density on raw coordinates (one concept)."""
    from ..spaces import np_box_from_raw
    from scipy.special import gammaln
    if space.kind == "box":
        alpha = _np_softplus(store[f"{prefix}/box_alpha"]) + _ALPHA_FLOOR
        mins, maxs = np_box_from_raw(raw.reshape(2, space.d))
        x = np.stack([0.5 - maxs, mins + 0.5, maxs - mins], axis=-1)
        x = np.maximum(x, _X_FLOOR)
        log_beta = float(np.sum(gammaln(alpha)) - gammaln(alpha.sum()))
        per_dim = np.sum((alpha - 1.0) * np.log(x), axis=-1) - log_beta + math.log(2.0)
        return float(np.sum(per_dim))
    sigma = float(_np_softplus(store[f"{prefix}/vec_sigma"])[0] + _SIGMA_FLOOR)
    return float(np.sum(-0.5 * _LOG_2PI - math.log(sigma)
                        - raw ** 2 / (2.0 * sigma ** 2)))
