"""Episode and pretraining-set generation.

An episode is one fast-learning task: a novel concept word, a few
example scenes each paired with a sentence that locates the example
object and names the word, optional supplemental sentences relating the
word to known concepts, and test questions probing the word.

Modes:
- "standard": examples vary freely in the non-target categories.
- "biased": every example object also carries a fixed confounding value
  from another category, so examples alone cannot separate the two
  readings; tests are discriminating scenes where the readings disagree.
- "fewshot": standard examples, no supplemental sentences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .oracle import symbolic_oracle
from ..lang.programs import count, exist, filt, query, scene as scene_prog, to_sexpr
from ..lang.templates import (
    render_description, render_question, render_supplemental,
)
from ..seeding import rng_for
from .questions import (
    AnswerBalancer, balanced_questions, find_referent, _modifier_referents,
    _with_mods,
)
from .scenes import SceneSpec, compose_scene, sample_scene
from .schema import Schema


def base_pools(schema: Schema, exclude=()) -> dict:
    """Per-category pools restricted to base concepts minus `exclude`."""
    banned = set(exclude)
    if schema.kind == "taxonomy_like":
        basekeys = set(schema.base)
        return {"species": [l for l in schema.leaves()
                            if l in basekeys and l not in banned]}
    basekeys = set(schema.base)
    return {cat: [v for v in values if v in basekeys and v not in banned]
            for cat, values in schema.categories.items()}


# ---------------------------------------------------------------------------
# pretraining data

@dataclass
class PretrainItem:
    text: str
    sexpr: str
    answer: str


@dataclass
class PretrainBlock:
    scene: SceneSpec
    phase: int
    items: list

    def to_dict(self) -> dict:
        return {"scene": self.scene.to_dict(), "phase": self.phase,
                "items": [{"text": i.text, "sexpr": i.sexpr, "answer": i.answer}
                          for i in self.items]}

    @classmethod
    def from_dict(cls, doc: dict) -> "PretrainBlock":
        items = [PretrainItem(i["text"], i["sexpr"], i["answer"])
                 for i in doc["items"]]
        return cls(SceneSpec.from_dict(doc["scene"]), int(doc["phase"]), items)


def _taxonomy_exist_items(rng, scene, schema, q_per_scene) -> list:
    species = scene.objects[0].attrs["species"]
    ancestry = set(schema.ancestry(species))
    yes_pool = sorted(ancestry & set(schema.base))
    no_pool = sorted(set(schema.base) - ancestry)
    items = []
    for q in range(q_per_scene):
        pool = yes_pool if q % 2 == 0 else no_pool
        concept = pool[int(rng.integers(len(pool)))]
        prog = exist(filt(scene_prog(), concept))
        answer = symbolic_oracle(prog, scene, schema)
        items.append(PretrainItem(render_question(prog), to_sexpr(prog), answer))
    return items


def make_pretrain_block(schema: Schema, seed: int, index: int, phase: int,
                        balancer: AnswerBalancer | None = None,
                        q_per_scene: int = 5) -> PretrainBlock:
    rng = rng_for(seed, "pretrain", index, phase)
    pools = base_pools(schema)
    if schema.kind == "taxonomy_like":
        scene = compose_scene(schema, rng, [], 1, filler_pools=pools)
        return PretrainBlock(scene, phase,
                             _taxonomy_exist_items(rng, scene, schema, q_per_scene))
    n = int(rng.integers(3, 6 if phase == 0 else 7))
    scene = sample_scene(schema, seed, ("pretrain", index, phase), n, allowed=pools)
    max_hops = 1 if phase == 0 else 2
    qs = balanced_questions(rng, scene, schema, pools, q_per_scene,
                            balancer or AnswerBalancer(), max_hops)
    items = [PretrainItem(render_question(p), to_sexpr(p), a) for p, a in qs]
    return PretrainBlock(scene, phase, items)


# ---------------------------------------------------------------------------
# episodes

@dataclass
class Example:
    scene: SceneSpec
    sentence: str


@dataclass
class TestItem:
    scene: SceneSpec
    question: str
    answer: str


@dataclass
class Episode:
    concept: str
    mode: str
    family: str
    examples: list
    supplemental: list
    tests: list
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "concept": self.concept, "mode": self.mode, "family": self.family,
            "examples": [{"scene": e.scene.to_dict(), "sentence": e.sentence}
                         for e in self.examples],
            "supplemental": list(self.supplemental),
            "tests": [{"scene": t.scene.to_dict(), "question": t.question,
                       "answer": t.answer} for t in self.tests],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Episode":
        return cls(
            doc["concept"], doc["mode"], doc["family"],
            [Example(SceneSpec.from_dict(e["scene"]), e["sentence"])
             for e in doc["examples"]],
            list(doc["supplemental"]),
            [TestItem(SceneSpec.from_dict(t["scene"]), t["question"], t["answer"])
             for t in doc["tests"]],
            dict(doc.get("meta", {})),
        )


def _sorted_mods(schema: Schema, mods) -> list:
    order = {cat: k for k, cat in enumerate(schema.categories)}
    return sorted(mods, key=lambda v: order[schema.category_of(v)])


def _attr_example(schema, seed, concept, mode, family, cat_c, confound,
                  pools, k, n_range):
    """One example scene plus its descriptive sentence."""
    cats = list(schema.categories)
    for attempt in range(80):
        rng = rng_for(seed, "episode-ex", concept, mode, k, attempt)
        target = {cat: pools[cat][int(rng.integers(len(pools[cat])))]
                  for cat in cats}
        target[cat_c] = concept
        if confound is not None:
            target[schema.category_of(confound)] = confound
        n_fill = int(rng.integers(n_range[0], n_range[1] + 1)) - 1
        scene = compose_scene(schema, rng, [target], n_fill, filler_pools=pools)
        t_idx = next(j for j, o in enumerate(scene.objects)
                     if o.attrs[cat_c] == concept)
        if family == "modifier":
            refs = _modifier_referents(scene, t_idx, schema, (concept,))
            ref = next((r for r in refs if r.op == "Filter"), None)
        else:
            ref = find_referent(rng, scene, t_idx, schema, (concept,),
                                p_spatial=0.25)
        if ref is None:
            continue
        return Example(scene, render_description(ref, concept, family))
    raise RuntimeError(f"no example scene admits a unique referent for {concept}")


def _attr_test(schema, seed, concept, mode, cat_c, confound, pools, i,
               kind, want_yes, n_range):
    """One test item; the answer is always checked against the oracle."""
    cats = list(schema.categories)
    rng = rng_for(seed, "episode-test", concept, mode, i)
    n_fill = int(rng.integers(n_range[0], n_range[1] + 1)) - 1

    def draw_target():
        return {cat: pools[cat][int(rng.integers(len(pools[cat])))]
                for cat in cats}

    if mode == "biased":
        target = draw_target()
        ccat = schema.category_of(confound)
        if want_yes:
            target[cat_c] = concept  # carries the word, not the confound
        else:
            target[ccat] = confound  # carries the confound, not the word
        scene = compose_scene(schema, rng, [target], n_fill, filler_pools=pools)
        prog = exist(filt(scene_prog(), concept))
    elif kind == "count":
        j = i % 3
        targets = []
        for _ in range(j):
            t = draw_target()
            t[cat_c] = concept
            targets.append(t)
        scene = compose_scene(schema, rng, targets,
                              max(1, n_fill + 1 - j), filler_pools=pools)
        prog = count(filt(scene_prog(), concept))
    elif kind == "query":
        target = draw_target()
        target[cat_c] = concept
        scene = compose_scene(schema, rng, [target], n_fill, filler_pools=pools)
        t_idx = next(k for k, o in enumerate(scene.objects)
                     if o.attrs[cat_c] == concept)
        ref = find_referent(rng, scene, t_idx, schema, (concept,), p_spatial=0.2)
        if ref is None:
            prog = exist(filt(scene_prog(), concept))
        else:
            prog = query(ref, cat_c)
    else:
        fixed = []
        if want_yes:
            target = draw_target()
            target[cat_c] = concept
            fixed.append(target)
        scene = compose_scene(schema, rng, fixed,
                              n_fill + (0 if want_yes else 1),
                              filler_pools=pools)
        if kind == "compound" and want_yes:
            t_idx = next(k for k, o in enumerate(scene.objects)
                         if o.attrs[cat_c] == concept)
            other = [scene.objects[t_idx].attrs[c] for c in cats if c != cat_c]
            mod = other[int(rng.integers(len(other)))]
            prog = exist(_with_mods(scene_prog(),
                                    _sorted_mods(schema, [mod, concept])))
        else:
            prog = exist(filt(scene_prog(), concept))
    answer = symbolic_oracle(prog, scene, schema)
    return TestItem(scene, render_question(prog), answer)


def _attribute_episode(schema, seed, concept, mode, k_examples, m_tests,
                       related_fraction, family, known, n_range) -> Episode:
    rng = rng_for(seed, "episode", concept, mode)
    cat_c = schema.category_of(concept)
    if family is None:
        family = "modifier" if (mode == "standard" and rng.random() < 0.2) \
            else "attribute"
    confound = None
    if mode == "biased":
        usable = [cat for cat in schema.categories if cat != cat_c
                  and len([v for v in schema.categories[cat] if v in known]) >= 2]
        ccat = usable[int(rng.integers(len(usable)))]
        vals = [v for v in schema.categories[ccat] if v in known]
        confound = vals[int(rng.integers(len(vals)))]
    exclude = {concept} | ({confound} if confound else set())
    pools = base_pools(schema, exclude=exclude)

    examples = [
        _attr_example(schema, seed, concept, mode, family, cat_c, confound,
                      pools, k, n_range)
        for k in range(k_examples)
    ]

    supplemental = []
    if mode != "fewshot":
        sibs = [s for s in schema.siblings(concept) if s in known]
        kept = [s for s in sibs if rng.random() < related_fraction]
        if kept:
            if family == "modifier":
                supplemental = [render_supplemental("modifier", [concept] + kept)]
            else:
                supplemental = [render_supplemental("attribute", [concept] + kept,
                                                    cat_c)]

    tests = []
    if mode == "biased":
        for i in range(m_tests):
            tests.append(_attr_test(schema, seed, concept, mode, cat_c, confound,
                                    pools, i, "exist", i % 2 == 0, n_range))
    else:
        kinds = ["exist", "exist", "compound", "count", "query"]
        toggles = {}
        for i in range(m_tests):
            kind = kinds[i % len(kinds)]
            t = toggles.get(kind, 0)
            toggles[kind] = t + 1
            tests.append(_attr_test(schema, seed, concept, mode, cat_c, None,
                                    pools, i, kind, t % 2 == 0, n_range))

    meta = {"seed": seed, "confound": confound,
            "related_fraction": related_fraction, "category": cat_c}
    return Episode(concept, mode, family, examples, supplemental, tests, meta)


def _taxonomy_episode(schema, seed, concept, mode, k_examples, m_tests,
                      related_fraction, known, parent_only) -> Episode:
    rng = rng_for(seed, "episode", concept, mode)
    desc = [l for l in schema.leaves() if concept in schema.ancestry(l)]
    others = [l for l in schema.leaves() if concept not in schema.ancestry(l)]

    examples = []
    for k in range(k_examples):
        ex_rng = rng_for(seed, "episode-ex", concept, mode, k)
        species = desc[int(ex_rng.integers(len(desc)))]
        scene = compose_scene(schema, ex_rng, [species], 0)
        examples.append(Example(
            scene, render_description(scene_prog(), concept, "taxonomy")))

    supplemental = []
    if mode != "fewshot":
        parent = schema.parent.get(concept)
        if parent is not None and parent in known:
            names = [concept]
            if not parent_only:
                sibs = [s for s in schema.siblings(concept) if s in known]
                names += [s for s in sibs if rng.random() < related_fraction]
            supplemental = [render_supplemental("taxonomy", names, parent)]

    tests = []
    for i in range(m_tests):
        t_rng = rng_for(seed, "episode-test", concept, mode, i)
        pool = desc if i % 2 == 0 else others
        species = pool[int(t_rng.integers(len(pool)))]
        scene = compose_scene(schema, t_rng, [species], 0)
        prog = exist(filt(scene_prog(), concept))
        answer = symbolic_oracle(prog, scene, schema)
        tests.append(TestItem(scene, render_question(prog), answer))

    meta = {"seed": seed, "hop": schema.hop(concept),
            "related_fraction": related_fraction, "parent_only": parent_only}
    return Episode(concept, mode, "taxonomy", examples, supplemental, tests, meta)


def make_episode(schema: Schema, seed: int, concept: str, mode: str = "standard",
                 k_examples: int = 4, m_tests: int = 10,
                 related_fraction: float = 1.0, family: str | None = None,
                 known=None, parent_only: bool = False,
                 n_range=(3, 5)) -> Episode:
    if mode not in ("standard", "biased", "fewshot"):
        raise ValueError(f"unknown episode mode {mode!r}")
    known = set(known) if known is not None else set(schema.base)
    if schema.kind == "taxonomy_like":
        return _taxonomy_episode(schema, seed, concept, mode, k_examples,
                                 m_tests, related_fraction, known, parent_only)
    return _attribute_episode(schema, seed, concept, mode, k_examples, m_tests,
                              related_fraction, family, known, n_range)


# ---------------------------------------------------------------------------
# JSONL persistence

def save_jsonl(path, docs) -> None:
    with open(path, "w") as f:
        for doc in docs:
            f.write(json.dumps(doc, sort_keys=True) + "\n")


def load_jsonl(path) -> list:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def save_episodes(path, episodes) -> None:
    save_jsonl(path, (e.to_dict() for e in episodes))


def load_episodes(path) -> list:
    return [Episode.from_dict(d) for d in load_jsonl(path)]


def save_pretrain(path, blocks) -> None:
    save_jsonl(path, (b.to_dict() for b in blocks))


def load_pretrain(path) -> list:
    return [PretrainBlock.from_dict(d) for d in load_jsonl(path)]
