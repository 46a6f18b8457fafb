"""Scene specifications and ground-truth relations.

Positions live in [0, 1]^2 and are sampled with a minimum per-axis separation
so every spatial relation holds with a margin; relations are strict
inequalities and therefore never ambiguous.

Relation truth convention used across the whole project (renderer, parser,
executor, oracle): rel_true(scene, r, i, j) answers "is object i <r> of
object j", with left meaning smaller x, front meaning smaller y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import rng_for
from .schema import Schema

MIN_SEPARATION = 0.04


@dataclass
class ObjectSpec:
    attrs: dict           # category -> concept (attribute world) | {"species": leaf}
    pos: tuple

    def concepts(self, schema: Schema) -> list:
        """Every object concept this object instantiates."""
        if schema.kind == "taxonomy_like":
            return schema.ancestry(self.attrs["species"])
        return list(self.attrs.values())


@dataclass
class SceneSpec:
    objects: list
    feature_seed: int

    def __len__(self) -> int:
        return len(self.objects)

    def has_concept(self, i: int, concept: str, schema: Schema) -> bool:
        return concept in self.objects[i].concepts(schema)

    def to_dict(self) -> dict:
        return {
            "objects": [{"attrs": dict(o.attrs), "pos": list(o.pos)} for o in self.objects],
            "feature_seed": self.feature_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneSpec":
        objs = [ObjectSpec(dict(o["attrs"]), tuple(o["pos"])) for o in doc["objects"]]
        return cls(objs, int(doc["feature_seed"]))


def rel_true(scene: SceneSpec, relation: str, i: int, j: int, schema: Schema) -> bool:
    """Ground truth for 'object i is <relation> of object j' (i != j)."""
    if i == j:
        raise ValueError("relations are defined over distinct objects")
    a, b = scene.objects[i], scene.objects[j]
    if relation == "left":
        return a.pos[0] < b.pos[0]
    if relation == "right":
        return a.pos[0] > b.pos[0]
    if relation == "front":
        return a.pos[1] < b.pos[1]
    if relation == "behind":
        return a.pos[1] > b.pos[1]
    if relation.startswith("has_same_"):
        cat = relation[len("has_same_"):]
        return a.attrs[cat] == b.attrs[cat]
    raise KeyError(f"unknown relation {relation!r}")


def _sample_positions(rng: np.random.Generator, n: int) -> np.ndarray:
    """Positions with per-axis separation >= MIN_SEPARATION (strict relations)."""
    for _ in range(500):
        pts = rng.uniform(0.0, 1.0, size=(n, 2))
        ok = True
        for axis in (0, 1):
            vals = np.sort(pts[:, axis])
            if n > 1 and np.min(np.diff(vals)) < MIN_SEPARATION:
                ok = False
                break
        if ok:
            return pts
    raise RuntimeError(f"could not place {n} separated objects")


def compose_scene(schema: Schema, rng: np.random.Generator, fixed: list,
                  n_fillers: int, filler_pools: dict | None = None) -> SceneSpec:
    """Scene with pinned objects plus random fillers, order shuffled.

    `fixed` holds attr dicts (attribute world) or species names (taxonomy).
    `filler_pools` restricts filler attributes the same way `allowed` does
    in sample_scene.
    """
    n = len(fixed) + n_fillers
    pts = _sample_positions(rng, n)
    feature_seed = int(rng.integers(2**31 - 1))
    rows = []
    for f in fixed:
        if schema.kind == "taxonomy_like":
            rows.append({"species": f} if isinstance(f, str) else dict(f))
        else:
            rows.append(dict(f))
    for _ in range(n_fillers):
        if schema.kind == "taxonomy_like":
            pool = (filler_pools or {}).get("species") or schema.leaves()
            rows.append({"species": pool[int(rng.integers(len(pool)))]})
        else:
            attrs = {}
            for cat, values in schema.categories.items():
                pool = (filler_pools or {}).get(cat) or list(values)
                attrs[cat] = pool[int(rng.integers(len(pool)))]
            rows.append(attrs)
    order = rng.permutation(n)
    objs = [ObjectSpec(rows[order[i]], (float(pts[i][0]), float(pts[i][1])))
            for i in range(n)]
    return SceneSpec(objs, feature_seed)


def sample_scene(schema: Schema, seed: int, tag, n_objects: int,
                 allowed: dict | None = None) -> SceneSpec:
    """Draw a scene; `allowed` optionally restricts the concept pool.

    Attribute world: allowed maps category -> list of values.
    Taxonomy world: allowed maps "species" -> list of leaves.
    """
    rng = rng_for(seed, "scene", tag)
    feature_seed = int(rng.integers(2**31 - 1))
    if schema.kind == "taxonomy_like":
        pool = (allowed or {}).get("species") or schema.leaves()
        pts = _sample_positions(rng, n_objects)
        objs = [ObjectSpec({"species": pool[int(rng.integers(len(pool)))]},
                           (float(p[0]), float(p[1]))) for p in pts]
        return SceneSpec(objs, feature_seed)

    pts = _sample_positions(rng, n_objects)
    objs = []
    for p in pts:
        attrs = {}
        for cat, values in schema.categories.items():
            pool = (allowed or {}).get(cat) or list(values)
            attrs[cat] = pool[int(rng.integers(len(pool)))]
        objs.append(ObjectSpec(attrs, (float(p[0]), float(p[1]))))
    return SceneSpec(objs, feature_seed)
