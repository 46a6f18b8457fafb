"""Concept-graph and example-graph construction for inference.

A graph is flattened to the novel node's point of view: a list of
(edge_type, neighbor_raw_state) pairs. Type I graphs connect the novel
concept to siblings (samekind/cohypernym facts, plus siblings derived
from hypernym facts through the fact store); Type II graphs additionally
make hypernym nodes first-class neighbors with direction-specific edge
types. Example referents join as "example" edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..spaces import SpaceConfig, raw_from_box

EDGE_TYPES = ("sibling", "parent", "child", "example")

# nominal half-width for example nodes inside the GNN, so the raw width
# channel matches the scale of concept boxes; membership scoring still
# uses true delta boxes
EXAMPLE_HALF_WIDTH = 0.05


class FactStore:
    """Committed fact tuples, used to derive siblings across episodes."""

    def __init__(self):
        self._hypernym = {}   # child -> set of parents
        self._related = {}    # concept -> set of samekind/cohypernym peers

    def add(self, a: str, b: str, kind: str) -> None:
        if kind == "hypernym":
            self._hypernym.setdefault(a, set()).add(b)
        elif kind in ("cohypernym", "samekind"):
            self._related.setdefault(a, set()).add(b)
            self._related.setdefault(b, set()).add(a)
        else:
            raise ValueError(f"unknown fact kind {kind!r}")

    def parents(self, concept: str) -> set:
        return set(self._hypernym.get(concept, ()))

    def children(self, concept: str) -> set:
        return {c for c, ps in self._hypernym.items() if concept in ps}

    def related(self, concept: str) -> set:
        return set(self._related.get(concept, ()))

    def co_children(self, concept: str, parent: str) -> set:
        return {c for c, ps in self._hypernym.items()
                if parent in ps and c != concept}


@dataclass
class InferenceTask:
    """Everything an inference network needs for one episode."""
    concept: str
    space: SpaceConfig
    edges: list                    # (etype, raw_state np.ndarray)
    example_states: list           # raw states for the example edges
    example_points: list           # (d,) centers/vectors for candidate scoring
    candidates: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def all_edges(self) -> list:
        return list(self.edges) + [("example", s) for s in self.example_states]


def example_state(space: SpaceConfig, point: np.ndarray) -> np.ndarray:
    """Raw GNN state for an example referent embedding."""
    point = np.asarray(point, dtype=np.float64)
    if space.kind == "box":
        lim = 0.5 - EXAMPLE_HALF_WIDTH - 1e-6
        center = np.clip(point, -lim, lim)
        return raw_from_box(center, np.full(space.d, EXAMPLE_HALF_WIDTH)).ravel()
    return point.copy()


def build_task(concept: str, facts, example_points, space: SpaceConfig,
               known_raw, graph_type: str = "type1",
               fact_store: FactStore | None = None) -> InferenceTask:
    """Flatten facts about `concept` into typed edges.

    `facts` are (a, b, kind) tuples; `known_raw(name)` returns the raw
    embedding of a known concept or None when it has none. `fact_store`
    supplies previously committed facts for sibling derivation.
    """
    if graph_type not in ("type1", "type2"):
        raise ValueError(f"unknown graph type {graph_type!r}")
    siblings = []
    parents = []
    children = []
    for a, b, kind in facts:
        if kind in ("samekind", "cohypernym"):
            if a == concept and b != concept:
                siblings.append(b)
            elif b == concept and a != concept:
                siblings.append(a)
        elif kind == "hypernym":
            if a == concept and b != concept:
                parents.append(b)
                if fact_store is not None:
                    siblings.extend(sorted(fact_store.co_children(concept, b)))
            elif b == concept and a != concept:
                children.append(a)
        else:
            raise ValueError(f"unknown fact kind {kind!r}")

    def dedup(names):
        seen = []
        for n in names:
            if n not in seen:
                seen.append(n)
        return seen

    edges = []
    for name in dedup(siblings):
        raw = known_raw(name)
        if raw is not None:
            edges.append(("sibling", np.asarray(raw, dtype=np.float64)))
    if graph_type == "type2":
        for name in dedup(parents):
            raw = known_raw(name)
            if raw is not None:
                edges.append(("parent", np.asarray(raw, dtype=np.float64)))
        for name in dedup(children):
            raw = known_raw(name)
            if raw is not None:
                edges.append(("child", np.asarray(raw, dtype=np.float64)))

    ex_points = [np.asarray(p, dtype=np.float64) for p in example_points]
    ex_states = [example_state(space, p) for p in ex_points]
    return InferenceTask(concept, space, edges, ex_states, ex_points)
