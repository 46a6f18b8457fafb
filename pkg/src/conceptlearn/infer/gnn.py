"""Message-passing refinement of a novel concept embedding.

Only the novel node ever updates: known concepts and example referents
are frozen donors, so a "layer" recomputes the incoming messages against
the refreshed novel state and applies one gated update. Box states are
processed per dimension with shared MLPs (dimension-equivariant); vector
states are processed whole.

Every function exists twice: a tape version for gradients and a batched
numpy version used for candidate search. Both share parameters and the
same arithmetic, and a test pins their agreement.

Update output layers start at zero, so an untrained network is the
identity on the candidate.
"""

from __future__ import annotations

import math

import numpy as np

from ..spaces import SpaceConfig, np_box_from_raw, np_membership_log
from ..store import ParamStore
from .graphs import EDGE_TYPES

H_BOX = 20    # hidden width of per-dimension MLPs
M_BOX = 10    # per-dimension message size


def _dims(space: SpaceConfig) -> tuple[int, int, int, int]:
    """(msg_in, msg_hidden, msg_out, upd_out) for the space."""
    if space.kind == "box":
        return 4, H_BOX, M_BOX, 4
    d = space.d
    return 2 * d, 2 * d, d, 2 * d


def init_gnn(store: ParamStore, space: SpaceConfig, rng: np.random.Generator,
             prefix: str = "gnn", n_layers: int = 2, etypes=EDGE_TYPES) -> None:
    msg_in, hid, msg_out, upd_out = _dims(space)
    upd_in = (2 + msg_out) if space.kind == "box" else 2 * space.d

    def dense(key, rows, cols, zero=False):
        if zero:
            store.add(key, np.zeros((rows, cols)) if cols else np.zeros(rows))
            return
        store.add(key, rng.normal(0.0, 1.0 / math.sqrt(max(cols, 1)),
                                  size=(rows, cols)))

    for layer in range(n_layers):
        for et in etypes:
            base = f"{prefix}/l{layer}/msg/{et}"
            dense(f"{base}/w1", hid, msg_in)
            store.add(f"{base}/b1", np.zeros(hid))
            dense(f"{base}/w2", msg_out, hid)
            store.add(f"{base}/b2", np.zeros(msg_out))
        base = f"{prefix}/l{layer}/upd"
        dense(f"{base}/w1", hid, upd_in)
        store.add(f"{base}/b1", np.zeros(hid))
        dense(f"{base}/w2", upd_out, hid, zero=True)
        store.add(f"{base}/b2", np.zeros(upd_out))


def gnn_param_keys(store: ParamStore, prefix: str = "gnn") -> list:
    return store.keys_with_prefix(f"{prefix}/")


# ---------------------------------------------------------------------------
# tape forward

def _mlp(ops, store, base, x):
    """Two dense layers with a tanh hidden, fused affine per row."""
    w1 = store[f"{base}/w1"]
    w1_ids = ops.leaves_for(f"{base}/w1", w1)
    b1_ids = ops.leaves_for(f"{base}/b1", store[f"{base}/b1"])
    n_in = w1.shape[1]
    h = [ops.tanh(ops.affine(w1_ids[i * n_in:(i + 1) * n_in], x, b1_ids[i]))
         for i in range(w1.shape[0])]
    w2 = store[f"{base}/w2"]
    w2_ids = ops.leaves_for(f"{base}/w2", w2)
    b2_ids = ops.leaves_for(f"{base}/b2", store[f"{base}/b2"])
    n_h = w2.shape[1]
    return [ops.affine(w2_ids[i * n_h:(i + 1) * n_h], h, b2_ids[i])
            for i in range(w2.shape[0])]


def _message(ops, store, base, state, neighbor, space):
    """Messages from one frozen neighbor into the novel state.

    Box: list of d M_BOX-vectors; vector: one d-vector.
    """
    if space.kind == "box":
        d = space.d
        out = []
        for k in range(d):
            x = [state[k], state[d + k], float(neighbor[k]), float(neighbor[d + k])]
            out.append(_mlp(ops, store, base, x))
        return out
    x = list(state) + [float(v) for v in neighbor]
    return _mlp(ops, store, base, x)


def _pool(ops, msgs, space):
    if space.kind == "box":
        d = space.d
        if not msgs:
            return [[0.0] * M_BOX for _ in range(d)]
        return [[ops.max_of([m[k][j] for m in msgs]) for j in range(M_BOX)]
                for k in range(d)]
    if not msgs:
        return [0.0] * space.d
    return [ops.max_of([m[j] for m in msgs]) for j in range(space.d)]


def _update(ops, store, base, state, pooled, space):
    if space.kind == "box":
        d = space.d
        new_u, new_w = [], []
        for k in range(d):
            x = [state[k], state[d + k]] + pooled[k]
            o = _mlp(ops, store, base, x)
            new_u.append(ops.add(state[k], ops.mul(ops.sigmoid(o[0]), o[1])))
            new_w.append(ops.add(state[d + k], ops.mul(ops.sigmoid(o[2]), o[3])))
        return new_u + new_w
    d = space.d
    x = list(state) + list(pooled)
    o = _mlp(ops, store, base, x)
    return [ops.add(state[k], ops.mul(ops.sigmoid(o[k]), o[d + k]))
            for k in range(d)]


def gnn_refine(ops, store: ParamStore, space: SpaceConfig, state, edges,
               prefix: str = "gnn", n_layers: int = 2):
    """Refine the novel state (handle list) against frozen neighbors."""
    state = list(state)
    for layer in range(n_layers):
        msgs = [_message(ops, store, f"{prefix}/l{layer}/msg/{et}", state, nb, space)
                for et, nb in edges]
        pooled = _pool(ops, msgs, space)
        state = _update(ops, store, f"{prefix}/l{layer}/upd", state, pooled, space)
    return state


# ---------------------------------------------------------------------------
# batched numpy forward (candidate search)

def _np_sigmoid(x):
    # same piecewise form as the scalar kernel so both paths agree tightly
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _np_mlp(store, base, x):
    h = np.tanh(x @ store[f"{base}/w1"].T + store[f"{base}/b1"])
    return h @ store[f"{base}/w2"].T + store[f"{base}/b2"]


def np_gnn_refine(store: ParamStore, space: SpaceConfig, states: np.ndarray,
                  edges, prefix: str = "gnn", n_layers: int = 2) -> np.ndarray:
    """states (B, raw_size) -> refined (B, raw_size)."""
    states = np.asarray(states, dtype=np.float64)
    B = states.shape[0]
    d = space.d
    for layer in range(n_layers):
        pooled = None
        for et, nb in edges:
            base = f"{prefix}/l{layer}/msg/{et}"
            if space.kind == "box":
                u, w = states[:, :d], states[:, d:]
                x = np.stack([u, w,
                              np.broadcast_to(nb[:d], (B, d)),
                              np.broadcast_to(nb[d:], (B, d))], axis=-1)
                m = _np_mlp(store, base, x.reshape(B * d, 4)).reshape(B, d, M_BOX)
            else:
                x = np.concatenate([states, np.broadcast_to(nb, (B, d))], axis=-1)
                m = _np_mlp(store, base, x)
            pooled = m if pooled is None else np.maximum(pooled, m)
        if pooled is None:
            pooled = np.zeros((B, d, M_BOX)) if space.kind == "box" \
                else np.zeros((B, d))
        base = f"{prefix}/l{layer}/upd"
        if space.kind == "box":
            u, w = states[:, :d], states[:, d:]
            x = np.concatenate([u[..., None], w[..., None], pooled], axis=-1)
            o = _np_mlp(store, base, x.reshape(B * d, 2 + M_BOX)).reshape(B, d, 4)
            u = u + _np_sigmoid(o[..., 0]) * o[..., 1]
            w = w + _np_sigmoid(o[..., 2]) * o[..., 3]
            states = np.concatenate([u, w], axis=-1)
        else:
            x = np.concatenate([states, pooled], axis=-1)
            o = _np_mlp(store, base, x)
            states = states + _np_sigmoid(o[:, :d]) * o[:, d:]
    return states


def np_sequential_refine(store: ParamStore, space: SpaceConfig,
                         states: np.ndarray, ordered_edges,
                         prefix: str = "rnn") -> np.ndarray:
    """One message+update per edge, in the given order (recurrent cell)."""
    states = np.asarray(states, dtype=np.float64)
    B = states.shape[0]
    d = space.d
    for et, nb in ordered_edges:
        base = f"{prefix}/l0/msg/{et}"
        if space.kind == "box":
            u, w = states[:, :d], states[:, d:]
            x = np.stack([u, w,
                          np.broadcast_to(nb[:d], (B, d)),
                          np.broadcast_to(nb[d:], (B, d))], axis=-1)
            m = _np_mlp(store, base, x.reshape(B * d, 4)).reshape(B, d, M_BOX)
            ubase = f"{prefix}/l0/upd"
            xu = np.concatenate([u[..., None], w[..., None], m], axis=-1)
            o = _np_mlp(store, ubase, xu.reshape(B * d, 2 + M_BOX)).reshape(B, d, 4)
            u = u + _np_sigmoid(o[..., 0]) * o[..., 1]
            w = w + _np_sigmoid(o[..., 2]) * o[..., 3]
            states = np.concatenate([u, w], axis=-1)
        else:
            x = np.concatenate([states, np.broadcast_to(nb, (B, d))], axis=-1)
            m = _np_mlp(store, base, x)
            xu = np.concatenate([states, m], axis=-1)
            o = _np_mlp(store, f"{prefix}/l0/upd", xu)
            states = states + _np_sigmoid(o[:, :d]) * o[:, d:]
    return states


def sequential_refine(ops, store: ParamStore, space: SpaceConfig, state,
                      ordered_edges, prefix: str = "rnn"):
    """Tape twin of np_sequential_refine."""
    state = list(state)
    for et, nb in ordered_edges:
        msg = _message(ops, store, f"{prefix}/l0/msg/{et}", state, nb, space)
        pooled = _pool(ops, [msg], space)
        state = _update(ops, store, f"{prefix}/l0/upd", state, pooled, space)
    return state


def np_score_candidates(space: SpaceConfig, raws: np.ndarray,
                        example_points, smoothed: bool = True) -> np.ndarray:
    """Total log membership of the example referents under each candidate."""
    raws = np.asarray(raws, dtype=np.float64)
    B = raws.shape[0]
    if not example_points:
        return np.zeros(B)
    pts = np.asarray(example_points, dtype=np.float64)
    if space.kind == "box":
        mins, maxs = np_box_from_raw(raws.reshape(B, 2, space.d))
        logs = np_membership_log(space, (mins[:, None, :], maxs[:, None, :]),
                                 pts[None, :, :], smoothed)
        return logs.sum(axis=1)
    out = np.empty(B)
    for b in range(B):
        out[b] = float(np.sum(np_membership_log(space, raws[b], pts, smoothed)))
    return out
