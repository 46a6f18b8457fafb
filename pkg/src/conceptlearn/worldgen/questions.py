"""Program sampling over scenes with answer balancing.

Samplers produce canonical programs (modifiers folded innermost-first in
category order, coordination branches restricted to clause-free anchors)
so every sampled program round-trips through the surface templates. The
balancer keeps per-question-kind answer tallies so yes/no and count
answers stay near uniform across a generated set.
"""

from __future__ import annotations

import numpy as np

from .oracle import denotation, symbolic_oracle
from ..lang.programs import (
    Prog, aequery, aerelate, count, count_eq, count_gt, count_lt, exist,
    filt, inter, query, relate, scene as scene_prog, union_,
)
from .schema import SPATIAL_RELATIONS, Schema

QUESTION_KINDS = ("exist", "count", "query", "aequery",
                  "count_gt", "count_lt", "count_eq")

# pretraining mix; compare-count kinds are cheap to answer but slow to
# learn from, so they get less mass
KIND_WEIGHTS = {
    "exist": 0.28, "count": 0.18, "query": 0.22, "aequery": 0.12,
    "count_gt": 0.07, "count_lt": 0.07, "count_eq": 0.06,
}


class AnswerBalancer:
    """Accepts a candidate answer only while its tally is minimal."""

    def __init__(self):
        self._tally = {}

    @staticmethod
    def _bucket(kind: str, answer: str) -> str:
        if answer.isdigit():
            return answer if int(answer) < 3 else "3+"
        return answer

    def ok(self, kind: str, answer: str) -> bool:
        tally = self._tally.get(kind)
        if not tally:
            return True
        b = self._bucket(kind, answer)
        return tally.get(b, 0) <= min(tally.values())

    def note(self, kind: str, answer: str) -> None:
        tally = self._tally.setdefault(kind, {})
        b = self._bucket(kind, answer)
        tally[b] = tally.get(b, 0) + 1


def _pick(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def _weighted(rng: np.random.Generator, table: dict):
    names = list(table)
    probs = np.array([table[n] for n in names], dtype=float)
    probs /= probs.sum()
    return names[int(rng.choice(len(names), p=probs))]


def sample_mods(rng: np.random.Generator, schema: Schema, pools: dict,
                n_mods: int, skip=()) -> list:
    """Distinct-category modifiers in canonical category order."""
    cats = [c for c in schema.categories
            if c not in skip and pools.get(c)]
    if n_mods > len(cats):
        n_mods = len(cats)
    chosen = sorted(rng.choice(len(cats), size=n_mods, replace=False))
    return [_pick(rng, pools[cats[k]]) for k in chosen]


def _with_mods(core: Prog, mods) -> Prog:
    prog = core
    for m in mods:
        prog = filt(prog, m)
    return prog


def sample_np(rng: np.random.Generator, schema: Schema, pools: dict,
              max_hops: int = 2, allow_clauses: bool = True) -> Prog:
    n_mods = int(rng.choice(3, p=[0.25, 0.50, 0.25]))
    mods = sample_mods(rng, schema, pools, n_mods)
    roll = rng.random()
    core = scene_prog()
    if allow_clauses and max_hops > 0:
        if roll < 0.20:
            core = relate(sample_np(rng, schema, pools, max_hops - 1, False),
                          _pick(rng, SPATIAL_RELATIONS))
        elif roll < 0.28:
            a = relate(sample_np(rng, schema, pools, 0, False),
                       _pick(rng, SPATIAL_RELATIONS))
            b = relate(sample_np(rng, schema, pools, 0, False),
                       _pick(rng, SPATIAL_RELATIONS))
            core = inter(a, b)
        elif roll < 0.36:
            a = relate(sample_np(rng, schema, pools, 0, False),
                       _pick(rng, SPATIAL_RELATIONS))
            b = relate(sample_np(rng, schema, pools, 0, False),
                       _pick(rng, SPATIAL_RELATIONS))
            core = union_(a, b)
        elif roll < 0.45:
            core = aerelate(sample_np(rng, schema, pools, max_hops - 1, False),
                            _pick(rng, list(schema.categories)))
    elif max_hops > 0:
        if roll < 0.30:
            core = relate(sample_np(rng, schema, pools, max_hops - 1, False),
                          _pick(rng, SPATIAL_RELATIONS))
    return _with_mods(core, mods)


def sample_question(rng: np.random.Generator, schema: Schema, pools: dict,
                    kind: str, max_hops: int = 2) -> Prog:
    if kind == "exist":
        return exist(sample_np(rng, schema, pools, max_hops))
    if kind == "count":
        return count(sample_np(rng, schema, pools, max_hops))
    if kind == "query":
        cat = _pick(rng, list(schema.categories))
        np_ = sample_np(rng, schema, pools, max_hops)
        return query(np_, cat)
    if kind == "aequery":
        cat = _pick(rng, list(schema.categories))
        return aequery(sample_np(rng, schema, pools, 1),
                       sample_np(rng, schema, pools, 1), cat)
    if kind in ("count_gt", "count_lt", "count_eq"):
        a = sample_np(rng, schema, pools, 1)
        b = sample_np(rng, schema, pools, 1)
        maker = {"count_gt": count_gt, "count_lt": count_lt,
                 "count_eq": count_eq}[kind]
        return maker(a, b)
    raise ValueError(f"unknown question kind {kind!r}")


def balanced_questions(rng: np.random.Generator, scene, schema: Schema,
                       pools: dict, m: int, balancer: AnswerBalancer,
                       max_hops: int = 2, tries: int = 60,
                       kind_weights: dict | None = None) -> list:
    """m (program, answer) pairs on one scene, answers oracle-defined."""
    weights = kind_weights or KIND_WEIGHTS
    out = []
    for _ in range(m):
        kind = _weighted(rng, weights)
        fallback = None
        for _ in range(tries):
            prog = sample_question(rng, schema, pools, kind, max_hops)
            answer = symbolic_oracle(prog, scene, schema)
            if answer is None:
                continue
            if fallback is None:
                fallback = (prog, answer)
            if balancer.ok(kind, answer):
                fallback = (prog, answer)
                break
        if fallback is None:
            continue
        prog, answer = fallback
        balancer.note(kind, answer)
        out.append((prog, answer))
    return out


# ---------------------------------------------------------------------------
# unique-referent search

def _mod_subsets(values):
    n = len(values)
    singles = [[v] for v in values]
    pairs = [[values[i], values[j]] for i in range(n) for j in range(i + 1, n)]
    rest = [list(values)] if n > 2 else []
    return [[]] + singles + pairs + rest


def _modifier_referents(scene, target: int, schema: Schema, forbidden) -> list:
    obj = scene.objects[target]
    usable = [obj.attrs[cat] for cat in schema.categories
              if obj.attrs[cat] not in forbidden]
    out = []
    for mods in _mod_subsets(usable):
        prog = _with_mods(scene_prog(), mods)
        if denotation(prog, scene, schema) == frozenset({target}):
            out.append(prog)
    return out


def _spatial_referent(rng: np.random.Generator, scene, target: int,
                      schema: Schema, forbidden) -> Prog | None:
    """target described relative to a uniquely-identifiable anchor."""
    anchors = [j for j in range(len(scene)) if j != target]
    rng.shuffle(anchors)
    for j in anchors:
        anchor_nps = _modifier_referents(scene, j, schema, forbidden)
        anchor_nps = [p for p in anchor_nps if p.op == "Filter"]
        if not anchor_nps:
            continue
        rels = list(SPATIAL_RELATIONS)
        rng.shuffle(rels)
        for rel in rels:
            core = relate(anchor_nps[0], rel)
            obj = scene.objects[target]
            mod_pool = [obj.attrs[cat] for cat in schema.categories
                        if obj.attrs[cat] not in forbidden]
            for mods in _mod_subsets(mod_pool):
                prog = _with_mods(core, mods)
                if denotation(prog, scene, schema) == frozenset({target}):
                    return prog
    return None


def find_referent(rng: np.random.Generator, scene, target: int,
                  schema: Schema, forbidden=(), p_spatial: float = 0.3) -> Prog | None:
    """A program whose oracle denotation is exactly {target}.

    Never mentions a concept in ``forbidden``. Usually a plain modifier
    chain; with probability p_spatial prefers a spatial form for variety.
    Returns None when nothing on this scene works.
    """
    if schema.kind == "taxonomy_like":
        return scene_prog() if len(scene) == 1 else None
    plain = _modifier_referents(scene, target, schema, forbidden)
    if rng.random() < p_spatial and len(scene) >= 2:
        spatial = _spatial_referent(rng, scene, target, schema, forbidden)
        if spatial is not None:
            return spatial
    if plain:
        return plain[0]
    return _spatial_referent(rng, scene, target, schema, forbidden)
