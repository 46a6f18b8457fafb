"""Concept-inference strategies: graph network, recurrent, and prototype.

All three map an InferenceTask to a raw concept embedding. The trained
models run in two phases with shared parameters: `infer_np` does the
cheap batched candidate search in numpy and records every stochastic
choice, and `infer_tape` replays the winning path on a tape so the loss
differentiates through refinement, scoring and the prior. The replay
must reproduce the numpy winner's embedding exactly (modulo float noise
well under any decision threshold); a test pins this.
"""

from __future__ import annotations

import numpy as np

from ..spaces import SpaceConfig, raw_from_box
from ..store import ParamStore
from .gnn import (gnn_refine, init_gnn, np_gnn_refine, np_score_candidates,
                  np_sequential_refine, sequential_refine)
from .graphs import InferenceTask
from .priors import init_prior, sample_candidates

N_CANDIDATES = 16


def _ensure_prior(store: ParamStore, space: SpaceConfig) -> None:
    key = "prior/box_alpha" if space.kind == "box" else "prior/vec_sigma"
    if key not in store:
        init_prior(store, space)


class GraphInference:
    """Candidate search plus message-passing refinement over the full graph."""

    name = "falcon-g"

    def __init__(self, store: ParamStore, space: SpaceConfig,
                 prefix: str = "gnn", n_candidates: int = N_CANDIDATES,
                 n_layers: int = 2):
        self.store = store
        self.space = space
        self.prefix = prefix
        self.n_candidates = n_candidates
        self.n_layers = n_layers

    def init_params(self, rng: np.random.Generator) -> None:
        init_gnn(self.store, self.space, rng, self.prefix, self.n_layers)
        _ensure_prior(self.store, self.space)

    def param_prefixes(self) -> tuple:
        return (f"{self.prefix}/", "prior/")

    def infer_np(self, task: InferenceTask, rng: np.random.Generator) -> dict:
        cands = sample_candidates(self.store, self.space, self.n_candidates, rng)
        edges = task.all_edges()
        refined = np_gnn_refine(self.store, self.space, cands, edges,
                                self.prefix, self.n_layers)
        scores = np_score_candidates(self.space, refined, task.example_points)
        winner = int(np.argmax(scores))
        return {"candidates": cands, "scores": scores, "winner": winner,
                "raw": refined[winner]}

    def infer_tape(self, ops, task: InferenceTask, choice: dict) -> list:
        start = [float(v) for v in choice["candidates"][choice["winner"]]]
        return gnn_refine(ops, self.store, self.space, start, task.all_edges(),
                          self.prefix, self.n_layers)


class SequentialInference:
    """Recurrent variant: one gated update per edge, in a recorded order.

    Concept edges are consumed before example edges; each group is
    shuffled per episode so the cell cannot overfit a fixed arrival
    order. The same single-layer message/update parameters serve every
    step.
    """

    name = "falcon-r"

    def __init__(self, store: ParamStore, space: SpaceConfig,
                 prefix: str = "rnn", n_candidates: int = N_CANDIDATES):
        self.store = store
        self.space = space
        self.prefix = prefix
        self.n_candidates = n_candidates

    def init_params(self, rng: np.random.Generator) -> None:
        init_gnn(self.store, self.space, rng, self.prefix, n_layers=1)
        _ensure_prior(self.store, self.space)

    def param_prefixes(self) -> tuple:
        return (f"{self.prefix}/", "prior/")

    def _edge_order(self, task: InferenceTask, rng: np.random.Generator) -> list:
        edges = task.all_edges()
        concept = [i for i, (et, _) in enumerate(edges) if et != "example"]
        example = [i for i, (et, _) in enumerate(edges) if et == "example"]
        order = [concept[j] for j in rng.permutation(len(concept))]
        order += [example[j] for j in rng.permutation(len(example))]
        return order

    def infer_np(self, task: InferenceTask, rng: np.random.Generator) -> dict:
        cands = sample_candidates(self.store, self.space, self.n_candidates, rng)
        edges = task.all_edges()
        order = self._edge_order(task, rng)
        ordered = [edges[i] for i in order]
        refined = np_sequential_refine(self.store, self.space, cands, ordered,
                                       self.prefix)
        scores = np_score_candidates(self.space, refined, task.example_points)
        winner = int(np.argmax(scores))
        return {"candidates": cands, "scores": scores, "winner": winner,
                "order": order, "raw": refined[winner]}

    def infer_tape(self, ops, task: InferenceTask, choice: dict) -> list:
        edges = task.all_edges()
        ordered = [edges[i] for i in choice["order"]]
        start = [float(v) for v in choice["candidates"][choice["winner"]]]
        return sequential_refine(ops, self.store, self.space, start, ordered,
                                 self.prefix)


class PrototypeBaseline:
    """Embedding straight from example statistics; no learned inference.

    Box space: the bounding box of the example referents, padded per
    dimension to at least the average half-width of the trained base
    concepts (`pad`). Vector spaces: the mean referent vector, rescaled
    to `scale` when given (hypercone additionally normalizes direction
    before rescaling). With `refine=True` the result is passed through a
    trained graph network as a stronger variant.
    """

    name = "prototype"

    def __init__(self, store: ParamStore, space: SpaceConfig,
                 pad=0.1, scale=None, refine: bool = False,
                 gnn_prefix: str = "gnn", n_layers: int = 2):
        self.store = store
        self.space = space
        self.pad = pad
        self.scale = scale
        self.refine = refine
        self.gnn_prefix = gnn_prefix
        self.n_layers = n_layers

    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def param_prefixes(self) -> tuple:
        return ()

    def infer_np(self, task: InferenceTask, rng: np.random.Generator) -> dict:
        if not task.example_points:
            raise ValueError("prototype baseline needs at least one example")
        pts = np.asarray(task.example_points, dtype=np.float64)
        if self.space.kind == "box":
            mn, mx = pts.min(axis=0), pts.max(axis=0)
            center = 0.5 * (mn + mx)
            span = 0.5 * (mx - mn)
            off = np.maximum(span, np.broadcast_to(
                np.asarray(self.pad, dtype=np.float64), span.shape))
            # shrink if the padded box would poke out of the cube
            off = np.minimum(off, 0.5 - np.abs(center) - 1e-4)
            off = np.maximum(off, 1e-4)
            raw = raw_from_box(center, off).ravel()
        else:
            v = pts.mean(axis=0)
            norm = float(np.linalg.norm(v))
            if self.space.kind == "hypercone" and norm > 1e-9:
                v = v / norm
                norm = 1.0
            if self.scale is not None and norm > 1e-9:
                v = v * (float(self.scale) / norm)
            raw = v
        if self.refine:
            raw = np_gnn_refine(self.store, self.space, raw[None, :],
                                task.all_edges(), self.gnn_prefix,
                                self.n_layers)[0]
        return {"raw": raw}

    def infer_tape(self, ops, task: InferenceTask, choice: dict) -> list:
        # nothing to train: the embedding re-enters the tape as constants
        return [float(v) for v in choice["raw"]]


def make_inference(kind: str, store: ParamStore, space: SpaceConfig, **kwargs):
    if kind == "falcon-g":
        return GraphInference(store, space, **kwargs)
    if kind == "falcon-r":
        return SequentialInference(store, space, **kwargs)
    if kind == "prototype":
        return PrototypeBaseline(store, space, **kwargs)
    raise ValueError(f"unknown inference model {kind!r}")
