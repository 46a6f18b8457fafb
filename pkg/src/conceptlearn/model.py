"""Grounded model: spaces, concept registries, and feature projections.

One GroundedModel owns everything the executor needs to run a program
on a scene: the parameter store, the object/relation concept registries,
and the projections from synthetic features into the two embedding
spaces. Inference networks add their own parameters to the same store
under separate prefixes.
"""

from __future__ import annotations

import numpy as np

from .executor import ExecutionContext, ExecutorConfig
from .seeding import rng_for
from .spaces import (
    ConceptRegistry, SpaceConfig, embed_point, init_projection, raw_from_box,
)
from .store import ParamStore, load_checkpoint, save_checkpoint

OBJ_PROJ = "proj/obj"
PAIR_PROJ = "proj/pair"

# prefixes whose parameters belong to slow-learned grounding; everything
# meta-learned lives elsewhere ("gnn/", "rnn/", "prior/")
BASE_PREFIXES = ("concept/", "relation/", "proj/")


def _init_box_raw(space: SpaceConfig, rng: np.random.Generator) -> np.ndarray:
    center = rng.uniform(-0.15, 0.15, size=space.d)
    offset = rng.uniform(0.15, 0.30, size=space.d)
    return raw_from_box(center, offset).ravel()


def _init_vector_raw(space: SpaceConfig, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, 1.0 / np.sqrt(space.d), size=space.d)


def init_concept_raw(space: SpaceConfig, rng: np.random.Generator) -> np.ndarray:
    if space.kind == "box":
        return _init_box_raw(space, rng)
    return _init_vector_raw(space, rng)


class GroundedModel:

    def __init__(self, schema, obj_space: SpaceConfig, rel_space: SpaceConfig,
                 feat_dim: int, store: ParamStore | None = None):
        self.schema = schema
        self.obj_space = obj_space
        self.rel_space = rel_space
        self.feat_dim = feat_dim
        self.store = store if store is not None else ParamStore()
        self.objects = ConceptRegistry(obj_space, self.store, "concept")
        self.relations = ConceptRegistry(rel_space, self.store, "relation")

    @classmethod
    def build(cls, schema, feat_dim: int, space_kind: str = "box",
              d_obj: int = 16, d_rel: int = 16, seed: int = 0) -> "GroundedModel":
        obj_space = SpaceConfig.make(space_kind, d_obj)
        # relational concepts always live in a box space: pair evidence is
        # region-like (sign of an offset), and only object concepts take
        # part in the space comparison
        rel_space = SpaceConfig.make("box", d_rel)
        model = cls(schema, obj_space, rel_space, feat_dim)
        rng = rng_for(seed, "model-init")
        init_projection(model.store, OBJ_PROJ, feat_dim, obj_space, rng)
        pair_dim = 2 * feat_dim + 2
        init_projection(model.store, PAIR_PROJ, pair_dim, rel_space, rng)
        for name in schema.base:
            model.objects.add(name, init_concept_raw(obj_space, rng))
        for rel in schema.relation_concepts:
            model.relations.add(rel, _init_box_raw(rel_space, rng))
        return model

    def clone(self) -> "GroundedModel":
        """Deep copy; continual runs commit concepts without touching the
        shared pretrained model."""
        store = ParamStore()
        for k, v in self.store.items():
            store.add(k, v.copy())
        model = GroundedModel(self.schema, self.obj_space, self.rel_space,
                              self.feat_dim, store)
        model.objects = ConceptRegistry(self.obj_space, store, "concept",
                                        list(self.objects.names))
        model.relations = ConceptRegistry(self.rel_space, store, "relation",
                                          list(self.relations.names))
        return model

    # -- persistence --------------------------------------------------------

    def save(self, path, extra_meta: dict | None = None) -> None:
        meta = {
            "schema": self.schema.to_dict(),
            "obj_space": self.obj_space.to_dict(),
            "rel_space": self.rel_space.to_dict(),
            "feat_dim": self.feat_dim,
            "objects": self.objects.meta(),
            "relations": self.relations.meta(),
        }
        if extra_meta:
            meta.update(extra_meta)
        save_checkpoint(path, self.store, meta)

    @classmethod
    def load(cls, path):
        from .worldgen.schema import Schema
        store, meta = load_checkpoint(path)
        model = cls(
            Schema.from_dict(meta["schema"]),
            SpaceConfig.from_dict(meta["obj_space"]),
            SpaceConfig.from_dict(meta["rel_space"]),
            int(meta["feat_dim"]),
            store=store,
        )
        model.objects = ConceptRegistry.from_meta(meta["objects"], store)
        model.relations = ConceptRegistry.from_meta(meta["relations"], store)
        return model, meta

    # -- execution ----------------------------------------------------------

    def base_digest(self) -> str:
        return self.store.digest(*BASE_PREFIXES)

    def answer_concepts(self, overrides=()) -> dict:
        extra = [n for n in overrides if n not in self.objects]
        out = {}
        for cat, values in self.schema.categories.items():
            names = [v for v in values if v in self.objects or v in extra]
            out[cat] = tuple(names)
        return out

    def context_for(self, ops, scene, synth, overrides=None, config=None,
                    trace=None) -> ExecutionContext:
        feats = synth.synthesize(scene)
        obj_points = [
            embed_point(ops, self.store, OBJ_PROJ, feats[j], self.obj_space)
            for j in range(len(scene))
        ]

        def pair_fn(subj, ref):
            raw = synth.pair_input(feats, scene, subj, ref)
            return embed_point(ops, self.store, PAIR_PROJ, raw, self.rel_space)

        return ExecutionContext(
            ops, self.schema, self.obj_space, self.rel_space,
            obj_points, pair_fn,
            concept_emb=lambda name: self.objects.embedding(ops, name),
            relation_emb=lambda name: self.relations.embedding(ops, name),
            answer_concepts=self.answer_concepts(overrides or {}),
            overrides=overrides,
            config=config or ExecutorConfig(),
            trace=trace,
        )
