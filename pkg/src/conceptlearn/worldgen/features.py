"""Synthetic object-centric features.

Stands in for detector features: each groundable concept owns a random
prototype vector, an object's appearance feature is the sum of its concepts'
prototypes plus Gaussian noise.  Features deliberately carry no position
information (two objects with identical attributes and sigma_f = 0 get
identical features); positions are passed to the relational projection
separately as a relative-offset channel.
"""
from __future__ import annotations

import numpy as np

from ..seeding import rng_for
from .scenes import SceneSpec
from .schema import Schema


class FeatureSynthesizer:
    def __init__(self, schema: Schema, feat_dim: int, sigma_f: float, seed: int):
        self.schema = schema
        self.feat_dim = feat_dim
        self.sigma_f = float(sigma_f)
        rng = rng_for(seed, "prototypes")
        self.prototypes = {
            c: rng.normal(0.0, 1.0, size=feat_dim) / np.sqrt(feat_dim)
            for c in schema.object_concepts
        }

    def object_feature_mean(self, concepts) -> np.ndarray:
        out = np.zeros(self.feat_dim)
        for c in concepts:
            out += self.prototypes[c]
        return out

    def synthesize(self, scene: SceneSpec) -> np.ndarray:
        """(n_objects, feat_dim) appearance features; noise from the scene seed."""
        rng = rng_for(scene.feature_seed, "feat-noise")
        feats = np.stack([self.object_feature_mean(o.concepts(self.schema))
                          for o in scene.objects])
        if self.sigma_f > 0.0:
            feats = feats + rng.normal(0.0, self.sigma_f, size=feats.shape)
        return feats

    def pair_input(self, feats: np.ndarray, scene: SceneSpec, subject: int, reference: int) -> np.ndarray:
        """Relational projection input for the ordered pair (subject, reference)."""
        a, b = scene.objects[subject], scene.objects[reference]
        relpos = np.array([a.pos[0] - b.pos[0], a.pos[1] - b.pos[1]])
        return np.concatenate([feats[subject], feats[reference], relpos])

    @property
    def pair_dim(self) -> int:
        return 2 * self.feat_dim + 2
