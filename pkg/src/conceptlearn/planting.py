"""Hand-constructed embeddings that realize a scene exactly.

Used to test the executor against the symbolic oracle without any
training in the loop: each attribute category gets one embedding
dimension carved into value slots, each spatial relation gets a sign
dimension of the pair embedding. With hard (unsmoothed) membership the
executor then reproduces set semantics exactly.
"""

from __future__ import annotations

from .executor import ExecutionContext, ExecutorConfig
from .spaces import BoxH, SpaceConfig
from .tape import FLOAT_OPS

_FULL = 0.49     # extent of "don't care" dimensions
_GAP = 0.01      # margin between adjacent value slots
_EDGE = 0.005    # sign-dimension boundary for spatial relations
_SAME_LO, _SAME_HI = 0.10, 0.40
_SAME_ON, _SAME_OFF = 0.25, -0.25


def _slot(i: int, m: int) -> tuple[float, float, float]:
    """(lo, hi, center) of value slot i among m slots in one dimension."""
    width = 0.9 / m
    lo = -0.45 + width * i
    return lo + _GAP, lo + width - _GAP, lo + width / 2.0


def plant_context(scene, schema, smoothed: bool = False, trace=None,
                  exist_mode: str = "max") -> ExecutionContext:
    if schema.kind != "clevr_like":
        raise ValueError("planted embeddings are defined for attribute worlds")
    cats = list(schema.categories)
    d_obj = len(cats)
    d_rel = 2 + len(cats)
    obj_space = SpaceConfig.make("box", d_obj)
    rel_space = SpaceConfig.make("box", d_rel)

    def concept_emb(name):
        cat = schema.category_of(name)
        k = cats.index(cat)
        values = schema.categories[cat]
        lo, hi, _ = _slot(values.index(name), len(values))
        mins = [-_FULL] * d_obj
        maxs = [_FULL] * d_obj
        mins[k], maxs[k] = lo, hi
        return BoxH(mins, maxs)

    def relation_emb(rel):
        mins = [-_FULL] * d_rel
        maxs = [_FULL] * d_rel
        if rel in ("left", "right", "front", "behind"):
            axis = 0 if rel in ("left", "right") else 1
            if rel in ("left", "front"):
                mins[axis], maxs[axis] = -_FULL, -_EDGE
            else:
                mins[axis], maxs[axis] = _EDGE, _FULL
        elif rel.startswith("has_same_"):
            cat = rel[len("has_same_"):]
            if cat not in cats:
                raise ValueError(f"unknown category in relation {rel!r}")
            k = 2 + cats.index(cat)
            mins[k], maxs[k] = _SAME_LO, _SAME_HI
        else:
            raise ValueError(f"no planted embedding for relation {rel!r}")
        return BoxH(mins, maxs)

    obj_points = []
    for obj in scene.objects:
        center = []
        for cat in cats:
            values = schema.categories[cat]
            center.append(_slot(values.index(obj.attrs[cat]), len(values))[2])
        obj_points.append(center)

    def pair_fn(subj, ref):
        a, b = scene.objects[subj], scene.objects[ref]
        point = [
            0.5 * (a.pos[0] - b.pos[0]),
            0.5 * (a.pos[1] - b.pos[1]),
        ]
        for cat in cats:
            point.append(_SAME_ON if a.attrs[cat] == b.attrs[cat] else _SAME_OFF)
        return point

    answer_concepts = {cat: tuple(schema.categories[cat]) for cat in cats}
    return ExecutionContext(
        FLOAT_OPS, schema, obj_space, rel_space, obj_points, pair_fn,
        concept_emb, relation_emb, answer_concepts=answer_concepts,
        config=ExecutorConfig(smoothed=smoothed, exist_mode=exist_mode),
        trace=trace,
    )
