"""Concept vocabularies: an attribute world and a taxonomy world.

The attribute world (clevr_like) has objects carrying one value per category;
hypernyms are the category names themselves (non-prototypical: "color" is not
a region an object can fall into).  The taxonomy world (taxonomy_like) is a
forest of prototypical concepts; an object instantiates a leaf species and
therefore every ancestor as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..seeding import rng_for

SPATIAL_RELATIONS = ("left", "right", "front", "behind")

CLEVR_CATEGORIES = {
    "size": ("small", "large"),
    "color": ("gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"),
    "material": ("rubber", "metal"),
    "shape": ("cube", "sphere", "cylinder"),
}


@dataclass
class Schema:
    kind: str                       # "clevr_like" | "taxonomy_like"
    categories: dict                # category -> ordered tuple of concept names (attribute world)
    parent: dict                    # concept -> hypernym name (or None for roots)
    base: tuple
    val: tuple
    test: tuple
    _children: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._children = {}
        for c, p in self.parent.items():
            if p is not None:
                self._children.setdefault(p, []).append(c)

    # -- vocabulary ----------------------------------------------------------

    @property
    def object_concepts(self) -> tuple:
        return tuple(self.parent.keys())

    @property
    def spatial_relations(self) -> tuple:
        return SPATIAL_RELATIONS

    @property
    def same_relations(self) -> tuple:
        """has_same_<category> relational concepts (attribute world only)."""
        return tuple(f"has_same_{cat}" for cat in self.categories)

    @property
    def relation_concepts(self) -> tuple:
        if self.kind == "clevr_like":
            return self.spatial_relations + self.same_relations
        return ()

    def category_of(self, concept: str) -> str:
        for cat, values in self.categories.items():
            if concept in values:
                return cat
        raise KeyError(f"{concept!r} is not an attribute concept")

    def children(self, name: str) -> list:
        return list(self._children.get(name, ()))

    def siblings(self, concept: str) -> list:
        """Concepts sharing this concept's hypernym, in canonical order."""
        p = self.parent.get(concept)
        if p is None:
            return []
        return [c for c in self._children[p] if c != concept]

    def leaves(self) -> list:
        return [c for c in self.parent if c not in self._children]

    def ancestry(self, concept: str) -> list:
        """concept plus all its ancestors, nearest first."""
        out = [concept]
        p = self.parent.get(concept)
        while p is not None and p in self.parent:
            out.append(p)
            p = self.parent.get(p)
        return out

    def hop(self, concept: str) -> int:
        """Graph distance (over hypernym edges) to the nearest base concept."""
        if concept in self.base:
            return 0
        neigh = {}
        for c, p in self.parent.items():
            if p is None or p not in self.parent:
                continue
            neigh.setdefault(c, set()).add(p)
            neigh.setdefault(p, set()).add(c)
        frontier = {concept}
        seen = set(frontier)
        dist = 0
        base = set(self.base)
        while frontier:
            dist += 1
            frontier = {n for c in frontier for n in neigh.get(c, ()) if n not in seen}
            seen |= frontier
            if frontier & base:
                return dist
        raise ValueError(f"{concept!r} is not connected to any base concept")

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "categories": {k: list(v) for k, v in self.categories.items()},
            "parent": dict(self.parent),
            "base": list(self.base),
            "val": list(self.val),
            "test": list(self.test),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        return cls(
            kind=doc["kind"],
            categories={k: tuple(v) for k, v in doc["categories"].items()},
            parent=dict(doc["parent"]),
            base=tuple(doc["base"]),
            val=tuple(doc["val"]),
            test=tuple(doc["test"]),
        )


def make_schema(preset: str, seed: int, branching: int = 3, depth: int = 3) -> Schema:
    """Build a schema with seeded base/val/test splits.

    clevr_like: fixed 15-concept vocabulary (8 colors, 3 shapes, 2 materials,
    2 sizes); 2 colors go to validation, another 2 colors plus 1 shape to test,
    leaving 10 base concepts.

    taxonomy_like: a forest with `branching` roots and `branching` children per
    node down to `depth` levels.  One mid-level node is held out with all its
    leaves (giving 1-hop and 2-hop test concepts) plus a few standalone leaves.
    """
    rng = rng_for(seed, "schema", preset)
    if preset == "clevr_like":
        categories = {k: tuple(v) for k, v in CLEVR_CATEGORIES.items()}
        parent = {c: cat for cat, values in categories.items() for c in values}
        colors = list(categories["color"])
        picked = [colors[i] for i in rng.choice(len(colors), size=4, replace=False)]
        val = tuple(sorted(picked[:2]))
        test_colors = sorted(picked[2:])
        shapes = list(categories["shape"])
        test_shape = shapes[int(rng.integers(len(shapes)))]
        test = tuple(test_colors + [test_shape])
        base = tuple(c for c in parent if c not in val and c not in test)
        return Schema("clevr_like", categories, parent, base, val, test)

    if preset == "taxonomy_like":
        if depth != 3:
            raise ValueError("taxonomy_like currently generates 3 levels")
        letters = "abcdefghij"
        parent: dict = {}
        mids = []
        leaves = []
        for r in range(branching):
            root = f"group{letters[r]}"
            parent[root] = None
            for i in range(branching):
                mid = f"clade{letters[r]}{i}"
                parent[mid] = root
                mids.append(mid)
                for j in range(branching):
                    leaf = f"bird{letters[r]}{i}{j}"
                    parent[leaf] = mid
                    leaves.append(leaf)
        held_mid = mids[int(rng.integers(len(mids)))]
        held_leaves = [c for c, p in parent.items() if p == held_mid]
        remaining = [l for l in leaves if l not in held_leaves]
        extra = [remaining[i] for i in rng.choice(len(remaining), size=4, replace=False)]
        test = tuple([held_mid] + held_leaves + sorted(extra[:2]))
        val = tuple(sorted(extra[2:]))
        base = tuple(c for c in parent if c not in test and c not in val)
        return Schema("taxonomy_like", {}, parent, base, val, test)

    raise ValueError(f"unknown schema preset {preset!r}")
