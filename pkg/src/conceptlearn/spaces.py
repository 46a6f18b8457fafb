"""Geometric concept spaces: boxes, hyperplanes, hypercones.

Concepts are regions; objects are points (degenerate delta-boxes in the box
space).  All score functions are written once against the ops backend from
tape.py, so the same code produces tape nodes during training and plain
floats during evaluation.

Box feasibility is enforced by parameterization, never by clipping: a box is
stored as raw per-dimension coordinates (u, w) and materialized as

    Min = sigmoid(u) - 1/2
    Max = sigmoid(u + softplus(w, 1)) - 1/2

which guarantees -1/2 < Min < Max < 1/2 for any raw values.  Anything that
ingests a numeric box (priors, prototypes, object delta-boxes) converts it to
raw coordinates through the closed-form inverse.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .store import ParamStore
from .tape import softplus as softplus_kernel

SPACE_KINDS = ("box", "hyperplane", "hypercone")


@dataclass(frozen=True)
class SpaceConfig:
    kind: str
    d: int
    tau: float          # smoothing temperature (box) or score temperature (vector)
    gamma: float = 0.0  # margin, vector spaces only
    delta: float = 1e-6  # object box edge length, box space only

    @classmethod
    def make(cls, kind: str, d: int) -> "SpaceConfig":
        if kind == "box":
            return cls("box", d, tau=0.2, delta=1e-6)
        if kind == "hyperplane":
            return cls("hyperplane", d, tau=0.125, gamma=2.0 * d)
        if kind == "hypercone":
            return cls("hypercone", d, tau=0.1, gamma=0.2)
        raise ValueError(f"unknown space kind {kind!r}")

    @property
    def raw_size(self) -> int:
        return 2 * self.d if self.kind == "box" else self.d

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d, "tau": self.tau,
                "gamma": self.gamma, "delta": self.delta}

    @classmethod
    def from_dict(cls, doc: dict) -> "SpaceConfig":
        return cls(doc["kind"], int(doc["d"]), float(doc["tau"]),
                   float(doc.get("gamma", 0.0)), float(doc.get("delta", 1e-6)))


@dataclass
class BoxH:
    """Materialized box on some ops backend: per-dimension corner handles."""
    mins: list
    maxs: list


class UndefinedConditionalError(ValueError):
    """Hard-mode conditional with a zero-volume conditioning box."""


# ---------------------------------------------------------------------------
# raw <-> numeric conversions (floats; used when ingesting numeric boxes)

_BOUND = 0.5 - 1e-9


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def _inv_softplus(y: float) -> float:
    # solve softplus(w, 1) = y for y > 0
    if y > 30.0:
        return y
    return math.log(math.expm1(y))


def raw_from_box(center: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Raw (2, d) coordinates for a numeric box, clamped to the open cube."""
    mn = np.clip(center - offset, -_BOUND, _BOUND - 1e-12)
    mx = np.clip(center + offset, mn + 1e-12, _BOUND)
    u = np.empty_like(mn)
    w = np.empty_like(mn)
    for i in range(len(mn)):
        lo = _logit(mn[i] + 0.5)
        hi = _logit(mx[i] + 0.5)
        u[i] = lo
        w[i] = _inv_softplus(hi - lo)
    return np.stack([u, w])


def box_from_raw(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Numeric (center, offset) for raw coordinates; vectorized mirror of
    materialize_box, for analysis and serialization only."""
    u, w = raw[0], raw[1]
    mins = _np_sigmoid(u) - 0.5
    maxs = _np_sigmoid(u + _np_softplus(w, 1.0)) - 0.5
    return (mins + maxs) / 2.0, (maxs - mins) / 2.0


def materialize_box(ops, raw_handles: list) -> BoxH:
    """raw handles (u_0..u_{d-1}, w_0..w_{d-1}) -> corner handles."""
    d = len(raw_handles) // 2
    mins = []
    maxs = []
    for p in range(d):
        u = raw_handles[p]
        w = raw_handles[d + p]
        mins.append(ops.squash(u, 1.0))
        hi = ops.add(u, ops.softplus(w, 1.0))
        maxs.append(ops.squash(hi, 1.0))
    return BoxH(mins, maxs)


def point_box(ops, centers: list, delta: float) -> BoxH:
    h = delta / 2.0
    return BoxH([ops.sub(c, h) for c in centers], [ops.add(c, h) for c in centers])


# ---------------------------------------------------------------------------
# box calculus

def box_log_volume(ops, box: BoxH, tau: float, smoothed: bool = True):
    """log prod_p edge_p with softplus-smoothed (or hard-rectified) edges."""
    terms = []
    for mn, mx in zip(box.mins, box.maxs):
        edge = ops.sub(mx, mn)
        if smoothed:
            terms.append(ops.log_softplus(edge, tau))
        else:
            terms.append(ops.log(ops.maximum(edge, 0.0)))
    return ops.sum_(terms)


def box_log_joint(ops, a: BoxH, b: BoxH, tau: float, smoothed: bool = True):
    """log volume of the overlap region (smoothed per-dimension)."""
    terms = []
    for p in range(len(a.mins)):
        ov = ops.sub(ops.minimum(a.maxs[p], b.maxs[p]),
                     ops.maximum(a.mins[p], b.mins[p]))
        if smoothed:
            terms.append(ops.log_softplus(ov, tau))
        else:
            terms.append(ops.log(ops.maximum(ov, 0.0)))
    return ops.sum_(terms)


def box_log_conditional(ops, a: BoxH, b: BoxH, tau: float, smoothed: bool = True):
    """log Pr[a | b] = log vol(a & b) - log vol(b), clamped to <= 0."""
    denom = box_log_volume(ops, b, tau, smoothed)
    if not smoothed and ops.value(denom) == -math.inf:
        raise UndefinedConditionalError("conditioning box has zero volume")
    num = box_log_joint(ops, a, b, tau, smoothed)
    if not smoothed and ops.value(num) == -math.inf:
        return -math.inf
    return ops.minimum(ops.sub(num, denom), 0.0)


# ---------------------------------------------------------------------------
# membership and entailment scores, all spaces

def _vec_dot(ops, a: list, b: list):
    return ops.dot(a, b)


def _log_sigmoid(ops, z):
    # ln sigma(z) = -softplus(-z), stable in both tails
    return ops.neg(ops.softplus(ops.neg(z), 1.0))


def membership_log(ops, space: SpaceConfig, concept, point: list, smoothed: bool = True):
    """log Pr[object is an instance of concept].

    `concept` is a BoxH for the box space or a handle list for vector spaces;
    `point` is the object's center/vector handle list.
    """
    if space.kind == "box":
        obj = point_box(ops, point, space.delta)
        return box_log_conditional(ops, concept, obj, space.tau, smoothed)
    if space.kind == "hyperplane":
        z = ops.sub(ops.div(_vec_dot(ops, point, concept), space.tau), space.gamma)
        return _log_sigmoid(ops, z)
    if space.kind == "hypercone":
        na = ops.sqrt(_vec_dot(ops, point, point))
        nb = ops.sqrt(_vec_dot(ops, concept, concept))
        if ops.value(na) == 0.0 or ops.value(nb) == 0.0:
            raise ValueError("zero-norm vector in hypercone membership")
        cos = ops.div(_vec_dot(ops, point, concept), ops.mul(na, nb))
        z = ops.div(ops.sub(cos, space.gamma), space.tau)
        return _log_sigmoid(ops, z)
    raise ValueError(f"unknown space kind {space.kind!r}")


def membership_prob(ops, space: SpaceConfig, concept, point: list, smoothed: bool = True):
    return ops.exp(membership_log(ops, space, concept, point, smoothed))


def entailment_log(ops, space: SpaceConfig, child, parent, smoothed: bool = True):
    """log Pr[parent | child]: does the child concept entail the parent?"""
    if space.kind == "box":
        return box_log_conditional(ops, parent, child, space.tau, smoothed)
    # vector spaces reuse the membership form on the two concept vectors
    return membership_log(ops, space, parent, child, smoothed)


def entailment_prob(ops, space: SpaceConfig, child, parent, smoothed: bool = True):
    return ops.exp(entailment_log(ops, space, child, parent, smoothed))


# ---------------------------------------------------------------------------
# feature projections

def init_projection(store: ParamStore, prefix: str, in_dim: int, space: SpaceConfig,
                    rng: np.random.Generator) -> None:
    w = rng.normal(0.0, 1.0 / math.sqrt(in_dim), size=(space.d, in_dim))
    b = np.zeros(space.d)
    store.add(f"{prefix}/w", w)
    store.add(f"{prefix}/b", b)


def embed_point(ops, store: ParamStore, prefix: str, feats, space: SpaceConfig) -> list:
    """Project a feature vector into the space; box-space outputs are squashed
    so the object delta-box always fits inside the unit cube."""
    w = store[f"{prefix}/w"]
    d, in_dim = w.shape
    if len(feats) != in_dim:
        raise ValueError(f"feature length {len(feats)} != projection input {in_dim}")
    w_ids = ops.leaves_for(f"{prefix}/w", w)
    b_ids = ops.leaves_for(f"{prefix}/b", store[f"{prefix}/b"])
    feats = [float(f) for f in feats]
    out = []
    for i in range(d):
        z = ops.affine(w_ids[i * in_dim:(i + 1) * in_dim], feats, b_ids[i])
        if space.kind == "box":
            out.append(ops.squash(z, 1.0 - space.delta))
        else:
            out.append(z)
    return out


# ---------------------------------------------------------------------------
# concept registry

@dataclass
class ConceptRegistry:
    """Named concept embeddings living in a ParamStore under one prefix."""

    space: SpaceConfig
    store: ParamStore
    prefix: str = "concept"
    names: list = field(default_factory=list)

    def key(self, name: str) -> str:
        return f"{self.prefix}/{name}"

    def __contains__(self, name: str) -> bool:
        return self.key(name) in self.store

    def add(self, name: str, raw: np.ndarray) -> None:
        raw = np.asarray(raw, dtype=np.float64).ravel()
        if raw.size != self.space.raw_size:
            raise ValueError(f"raw size {raw.size} != expected {self.space.raw_size}")
        self.store.add(self.key(name), raw)
        self.names.append(name)

    def raw(self, name: str) -> np.ndarray:
        return self.store[self.key(name)]

    def embedding(self, ops, name: str):
        """Materialized embedding handles on the given backend."""
        ids = ops.leaves_for(self.key(name), self.store[self.key(name)])
        if self.space.kind == "box":
            return materialize_box(ops, ids)
        return ids

    def numeric_box(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        if self.space.kind != "box":
            raise ValueError("numeric_box on a non-box registry")
        raw = self.raw(name).reshape(2, self.space.d)
        return box_from_raw(raw)

    def average_offset(self) -> np.ndarray:
        """Mean per-dimension half-width over registered boxes (prototype rule)."""
        offs = [self.numeric_box(n)[1] for n in self.names]
        if not offs:
            raise ValueError("registry is empty")
        return np.mean(offs, axis=0)

    def meta(self) -> dict:
        return {"space": self.space.to_dict(), "prefix": self.prefix, "names": list(self.names)}

    @classmethod
    def from_meta(cls, doc: dict, store: ParamStore) -> "ConceptRegistry":
        return cls(SpaceConfig.from_dict(doc["space"]), store, doc["prefix"], list(doc["names"]))


# ---------------------------------------------------------------------------
# vectorized numpy mirrors (candidate search, metrics); evaluation only

def _np_sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _np_softplus(x, tau):
    return tau * np.logaddexp(0.0, x / tau)


def np_box_from_raw(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """raw (..., 2, d) -> (mins, maxs), broadcasting over leading axes."""
    u = raw[..., 0, :]
    w = raw[..., 1, :]
    mins = _np_sigmoid(u) - 0.5
    maxs = _np_sigmoid(u + _np_softplus(w, 1.0)) - 0.5
    return mins, maxs


def np_membership_log(space: SpaceConfig, concept, points: np.ndarray,
                      smoothed: bool = True) -> np.ndarray:
    """Batched membership: concept (mins, maxs) or vector, points (..., d)."""
    if space.kind == "box":
        mins, maxs = concept
        lo = points - space.delta / 2.0
        hi = points + space.delta / 2.0
        ov = np.minimum(maxs, hi) - np.maximum(mins, lo)
        if smoothed:
            num = _np_softplus(ov, space.tau)
            den = _np_softplus(np.full_like(ov, space.delta), space.tau)
            return np.minimum(np.sum(np.log(num) - np.log(den), axis=-1), 0.0)
        with np.errstate(divide="ignore"):
            return np.minimum(
                np.sum(np.log(np.maximum(ov, 0.0)) - math.log(space.delta), axis=-1), 0.0)
    if space.kind == "hyperplane":
        z = points @ np.asarray(concept) / space.tau - space.gamma
        return -_np_softplus(-z, 1.0)
    if space.kind == "hypercone":
        c = np.asarray(concept)
        norms = np.linalg.norm(points, axis=-1) * np.linalg.norm(c)
        cos = points @ c / norms
        z = (cos - space.gamma) / space.tau
        return -_np_softplus(-z, 1.0)
    raise ValueError(f"unknown space kind {space.kind!r}")


def np_entailment_log(space: SpaceConfig, child, parent, smoothed: bool = True) -> float:
    """Scalar entailment score via the numpy path (metrics use this)."""
    if space.kind == "box":
        cmin, cmax = child
        pmin, pmax = parent
        ov = np.minimum(cmax, pmax) - np.maximum(cmin, pmin)
        if smoothed:
            num = np.sum(np.log(_np_softplus(ov, space.tau)))
            den = np.sum(np.log(_np_softplus(cmax - cmin, space.tau)))
            return float(min(num - den, 0.0))
        with np.errstate(divide="ignore"):
            num = np.sum(np.log(np.maximum(ov, 0.0)))
            den = np.sum(np.log(np.maximum(cmax - cmin, 0.0)))
        if den == -math.inf:
            raise UndefinedConditionalError("conditioning box has zero volume")
        return float(min(num - den, 0.0))
    child = np.asarray(child, dtype=np.float64)
    return float(np_membership_log(space, parent, child[None, :], smoothed)[0])
