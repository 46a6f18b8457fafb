"""Scene and episode generators: schemas, features, questions, episodes."""

import numpy as np
import pytest

from conceptlearn.seeding import rng_for
from conceptlearn.worldgen import (
    AnswerBalancer,
    CLEVR_CATEGORIES,
    FeatureSynthesizer,
    Schema,
    SceneSpec,
    balanced_questions,
    load_episodes,
    load_pretrain,
    make_episode,
    make_pretrain_block,
    make_schema,
    rel_true,
    sample_question,
    sample_scene,
    save_episodes,
    save_pretrain,
    symbolic_oracle,
)
from conceptlearn.worldgen.episodes import base_pools
from conceptlearn.worldgen.scenes import ObjectSpec


# ---------------------------------------------------------------------------
# schemas

def test_clevr_schema_partition():
    s = make_schema("clevr_like", 0)
    assert s.kind == "clevr_like"
    all_attrs = {v for vals in s.categories.values() for v in vals}
    held = set(s.val) | set(s.test)
    assert set(s.base) | held == all_attrs
    assert not (set(s.base) & held)
    assert not (set(s.val) & set(s.test))
    # every category keeps at least two base values so confounds exist
    for cat, vals in s.categories.items():
        assert len([v for v in vals if v in s.base]) >= 2, cat
    assert set(s.relation_concepts) >= set(s.spatial_relations)


def test_clevr_schema_matches_vocabulary():
    s = make_schema("clevr_like", 0)
    for cat, vals in s.categories.items():
        assert tuple(vals) == CLEVR_CATEGORIES[cat]


def test_taxonomy_schema_tree():
    s = make_schema("taxonomy_like", 0)
    assert s.kind == "taxonomy_like"
    roots = [c for c, p in s.parent.items() if p is None]
    assert roots
    for c, p in s.parent.items():
        if p is not None:
            assert p in s.parent, f"{c} has dangling parent {p}"
    for leaf in s.leaves():
        assert not s.children(leaf)
        assert s.ancestry(leaf)[-1] in roots
    held = set(s.val) | set(s.test)
    assert not (set(s.base) & held)
    for c in s.base:
        assert s.hop(c) == 0
    for c in held:
        assert s.hop(c) >= 1


def test_taxonomy_test_split_has_both_hops():
    s = make_schema("taxonomy_like", 0)
    hops = {s.hop(c) for c in s.test}
    assert 1 in hops and 2 in hops


def test_schema_roundtrip():
    for kind in ("clevr_like", "taxonomy_like"):
        s = make_schema(kind, 7)
        t = Schema.from_dict(s.to_dict())
        assert t.to_dict() == s.to_dict()
        assert t.object_concepts == s.object_concepts


def test_schema_seeds_vary_taxonomy_split():
    a = make_schema("taxonomy_like", 0)
    b = make_schema("taxonomy_like", 1)
    assert a.object_concepts == b.object_concepts  # vocabulary is fixed
    assert (a.test != b.test) or (a.val != b.val)


# ---------------------------------------------------------------------------
# scenes and relations

def test_scene_sampling_deterministic():
    s = make_schema("clevr_like", 0)
    a = sample_scene(s, 11, ("t", 0), 4)
    b = sample_scene(s, 11, ("t", 0), 4)
    c = sample_scene(s, 12, ("t", 0), 4)
    assert a.to_dict() == b.to_dict()
    assert a.to_dict() != c.to_dict()


def test_scene_respects_allowed_pools():
    s = make_schema("clevr_like", 0)
    pools = base_pools(s)
    for i in range(20):
        scene = sample_scene(s, 5, ("pool", i), 5, allowed=pools)
        for o in scene.objects:
            for cat, val in o.attrs.items():
                assert val in pools[cat]


def test_rel_true_conventions():
    s = make_schema("clevr_like", 0)
    attrs = {cat: vals[0] for cat, vals in s.categories.items()}
    scene = SceneSpec(
        [ObjectSpec(dict(attrs), (0.1, 0.8)), ObjectSpec(dict(attrs), (0.6, 0.2))],
        feature_seed=0,
    )
    # object 0 sits at smaller x (left) and larger y (behind)
    assert rel_true(scene, "left", 0, 1, s)
    assert not rel_true(scene, "right", 0, 1, s)
    assert rel_true(scene, "right", 1, 0, s)
    assert rel_true(scene, "behind", 0, 1, s)
    assert rel_true(scene, "front", 1, 0, s)
    assert rel_true(scene, "has_same_color", 0, 1, s)
    with pytest.raises(ValueError):
        rel_true(scene, "left", 0, 0, s)


def test_taxonomy_object_concepts_include_ancestry():
    s = make_schema("taxonomy_like", 0)
    leaf = s.leaves()[0]
    scene = SceneSpec([ObjectSpec({"species": leaf}, (0.5, 0.5))], 0)
    chain = scene.objects[0].concepts(s)
    assert chain == s.ancestry(leaf)
    assert scene.has_concept(0, chain[-1], s)


# ---------------------------------------------------------------------------
# features

def test_features_deterministic_and_noise_free_at_zero_sigma():
    s = make_schema("clevr_like", 0)
    scene = sample_scene(s, 3, ("f",), 4)
    clean = FeatureSynthesizer(s, 12, 0.0, 0)
    f1 = clean.synthesize(scene)
    f2 = clean.synthesize(scene)
    assert f1.shape == (4, 12)
    assert np.array_equal(f1, f2)
    for j, o in enumerate(scene.objects):
        expect = clean.object_feature_mean(o.concepts(s))
        assert np.allclose(f1[j], expect)


def test_feature_noise_scale():
    s = make_schema("clevr_like", 0)
    scene = sample_scene(s, 3, ("f",), 5)
    clean = FeatureSynthesizer(s, 12, 0.0, 0).synthesize(scene)
    noisy = FeatureSynthesizer(s, 12, 0.05, 0).synthesize(scene)
    resid = noisy - clean
    assert 0.03 < resid.std() < 0.07
    # noise is tied to the scene, not the call
    again = FeatureSynthesizer(s, 12, 0.05, 0).synthesize(scene)
    assert np.array_equal(noisy, again)


def test_pair_input_carries_relative_offset():
    s = make_schema("clevr_like", 0)
    scene = sample_scene(s, 3, ("f",), 3)
    synth = FeatureSynthesizer(s, 12, 0.0, 0)
    feats = synth.synthesize(scene)
    pair = synth.pair_input(feats, scene, 1, 2)
    assert pair.shape == (synth.pair_dim,)
    assert np.allclose(pair[:12], feats[1])
    assert np.allclose(pair[12:24], feats[2])
    dx = scene.objects[1].pos[0] - scene.objects[2].pos[0]
    dy = scene.objects[1].pos[1] - scene.objects[2].pos[1]
    assert pair[24] == pytest.approx(dx) and pair[25] == pytest.approx(dy)


# ---------------------------------------------------------------------------
# questions

def test_sampled_questions_are_answerable():
    s = make_schema("clevr_like", 0)
    pools = base_pools(s)
    rng = rng_for(0, "qsample")
    labels = {"yes", "no", None} | {str(k) for k in range(11)} \
        | {v for vals in s.categories.values() for v in vals}
    kinds = ("exist", "count", "query", "aequery",
             "count_gt", "count_lt", "count_eq")
    for i in range(300):
        scene = sample_scene(s, 0, ("qs", i), int(rng.integers(3, 7)))
        prog = sample_question(rng, s, pools, kinds[i % len(kinds)])
        ans = symbolic_oracle(prog, scene, s)
        assert ans in labels, ans


def test_balanced_questions_mix_answers():
    s = make_schema("clevr_like", 0)
    rng = rng_for(1, "balance")
    balancer = AnswerBalancer()
    answers = []
    for i in range(40):
        scene = sample_scene(s, 1, ("bal", i), 5)
        for prog, ans in balanced_questions(rng, scene, s, base_pools(s), 4,
                                            balancer):
            assert symbolic_oracle(prog, scene, s) == ans
            answers.append(ans)
    yesno = [a for a in answers if a in ("yes", "no")]
    frac_yes = sum(a == "yes" for a in yesno) / len(yesno)
    assert 0.25 < frac_yes < 0.75


# ---------------------------------------------------------------------------
# pretrain blocks

def test_pretrain_block_items_match_oracle():
    for kind in ("clevr_like", "taxonomy_like"):
        s = make_schema(kind, 0)
        from conceptlearn.lang.parser import parse_question
        for i in range(10):
            block = make_pretrain_block(s, 0, i, phase=0)
            # the balancer may drop a slot when no admissible answer exists
            assert 1 <= len(block.items) <= 5
            for item in block.items:
                prog = parse_question(item.text)
                assert symbolic_oracle(prog, block.scene, s) == item.answer


def test_pretrain_jsonl_roundtrip(tmp_path):
    s = make_schema("clevr_like", 0)
    blocks = [make_pretrain_block(s, 2, i, phase=i % 2) for i in range(6)]
    path = tmp_path / "blocks.jsonl"
    save_pretrain(path, blocks)
    back = load_pretrain(path)
    assert [b.to_dict() for b in back] == [b.to_dict() for b in blocks]


# ---------------------------------------------------------------------------
# episodes

def test_standard_episode_answers_match_oracle():
    s = make_schema("clevr_like", 0)
    from conceptlearn.lang.parser import parse_question
    for concept in list(s.test)[:3]:
        ep = make_episode(s, 0, concept, mode="standard")
        assert ep.concept == concept and len(ep.examples) == 4
        assert len(ep.tests) == 10
        for t in ep.tests:
            prog = parse_question(t.question)
            assert symbolic_oracle(prog, t.scene, s) == t.answer


def test_biased_episode_confound_structure():
    s = make_schema("clevr_like", 0)
    concept = s.test[0]
    cat_c = s.category_of(concept)
    ep = make_episode(s, 5, concept, mode="biased")
    confound = ep.meta["confound"]
    assert confound is not None and confound in s.base
    ccat = s.category_of(confound)
    # every example target carries both the new word and the confound
    for ex in ep.examples:
        carriers = [o for o in ex.scene.objects
                    if o.attrs[cat_c] == concept and o.attrs[ccat] == confound]
        assert carriers, "biased example lost its confounded target"
    # discriminating tests: yes-scenes have the word sans confound and
    # no-scenes the confound sans word
    answers = [t.answer for t in ep.tests]
    assert set(answers) == {"yes", "no"}
    for t in ep.tests:
        has_word = any(o.attrs[cat_c] == concept for o in t.scene.objects)
        has_conf = any(o.attrs[ccat] == confound for o in t.scene.objects)
        if t.answer == "yes":
            assert has_word and not has_conf
        else:
            assert has_conf and not has_word


def test_fewshot_mode_has_no_supplemental():
    s = make_schema("clevr_like", 0)
    ep = make_episode(s, 3, s.test[0], mode="fewshot")
    assert ep.supplemental == []


def test_related_fraction_controls_supplemental():
    s = make_schema("taxonomy_like", 0)
    concept = next(c for c in s.test if s.parent.get(c) in s.base)
    full = make_episode(s, 4, concept, mode="standard", related_fraction=1.0)
    bare = make_episode(s, 4, concept, mode="standard", related_fraction=0.0)
    assert len(full.supplemental) == 1 and len(bare.supplemental) == 1
    # dropping siblings must shorten the sentence but keep the hypernym tie
    assert len(bare.supplemental[0]) <= len(full.supplemental[0])
    parent_only = make_episode(s, 4, concept, mode="standard", parent_only=True)
    assert parent_only.supplemental == bare.supplemental


def test_supplemental_respects_known_set():
    s = make_schema("taxonomy_like", 0)
    concept = next(c for c in s.test if s.parent.get(c) in s.base)
    ep = make_episode(s, 4, concept, mode="standard", known=())
    assert ep.supplemental == []


def test_taxonomy_tests_alternate_positive_negative():
    s = make_schema("taxonomy_like", 0)
    ep = make_episode(s, 9, s.test[0], mode="standard", m_tests=8)
    assert [t.answer for t in ep.tests] == ["yes", "no"] * 4


def test_episode_jsonl_roundtrip(tmp_path):
    s = make_schema("clevr_like", 0)
    eps = [make_episode(s, i, s.test[i % len(s.test)], mode=m)
           for i, m in enumerate(("standard", "biased", "fewshot"))]
    path = tmp_path / "eps.jsonl"
    save_episodes(path, eps)
    back = load_episodes(path)
    assert [e.to_dict() for e in back] == [e.to_dict() for e in eps]


def test_episode_determinism():
    s = make_schema("clevr_like", 0)
    a = make_episode(s, 21, s.test[1], mode="biased")
    b = make_episode(s, 21, s.test[1], mode="biased")
    assert a.to_dict() == b.to_dict()
