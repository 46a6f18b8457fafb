"""End-to-end experiment drivers shared by the CLI and the test suite.

Every driver is a pure function of (model state, seed) so paired
comparisons reuse identical episodes: the supplemental-sentence gain
strips facts from the same episodes it scored with facts, the
related-fraction curve regenerates episodes that differ only in their
supplemental sentences, and the continual pairing matches fresh-parent
and base-parent leaves seed for seed.
"""

from __future__ import annotations

import numpy as np

from .infer import FactStore, PrototypeBaseline, make_inference
from .metrics import mean_accuracy, taxonomy_auc
from .model import GroundedModel
from .seeding import intseed, rng_for
from .train.meta import (MetaConfig, answer_tests, episode_facts, episode_task,
                         evaluate_episodes, meta_train)
from .train.pretrain import PretrainConfig, pretrain
from .train.schedules import preset
from .worldgen import FeatureSynthesizer, make_episode, make_schema


# ---------------------------------------------------------------------------
# stage drivers

def build_stack(world: str, space: str, preset_name: str, seed: int,
                overrides: dict | None = None):
    """(preset doc, schema, synthesizer, fresh model) for one configuration."""
    doc = preset(preset_name)
    if overrides:
        doc.update(overrides)
    schema = make_schema(world, seed)
    synth = FeatureSynthesizer(schema, doc["feat_dim"], doc["sigma_f"], seed)
    model = GroundedModel.build(schema, doc["feat_dim"], space,
                                d_obj=doc["d_obj"][space], d_rel=doc["d_rel"],
                                seed=seed)
    return doc, schema, synth, model


def pretrain_stage(model, synth, doc: dict, seed: int, log_fn=None):
    cfg = PretrainConfig(seed=seed, **doc["pretrain"])
    return pretrain(model, synth, cfg, log_fn=log_fn)


def metatrain_stage(model, inference, synth, doc: dict, seed: int,
                    mode: str = "standard", graph_type: str = "type1",
                    log_fn=None):
    cfg = MetaConfig(seed=seed, mode=mode, graph_type=graph_type, **doc["meta"])
    return meta_train(model, inference, synth, cfg, log_fn=log_fn)


def inference_for(model, kind: str, seed: int, **kwargs):
    """Inference model with fresh parameters registered in the model store."""
    inf = make_inference(kind, model.store, model.obj_space, **kwargs)
    inf.init_params(rng_for(seed, "inference-init", kind))
    return inf


def prototype_for(model, refine: bool = False) -> PrototypeBaseline:
    """Prototype baseline calibrated against the trained base concepts."""
    if model.obj_space.kind == "box":
        pad = model.objects.average_offset()
        scale = None
    else:
        pad = 0.0
        norms = [float(np.linalg.norm(model.objects.raw(n)))
                 for n in model.objects.names]
        scale = float(np.mean(norms))
    return PrototypeBaseline(model.store, model.obj_space, pad=pad,
                             scale=scale, refine=refine)


# ---------------------------------------------------------------------------
# episode sets

def eval_episodes(schema, concepts, n_episodes: int, seed: int,
                  mode: str = "standard", related_fraction: float = 1.0,
                  k_examples: int = 4, m_tests: int = 10, known=None,
                  parent_only: bool = False) -> list:
    concepts = list(concepts)
    return [
        make_episode(schema, intseed(seed, "eval-ep", i), concepts[i % len(concepts)],
                     mode=mode, k_examples=k_examples, m_tests=m_tests,
                     related_fraction=related_fraction, known=known,
                     parent_only=parent_only)
        for i in range(n_episodes)
    ]


# ---------------------------------------------------------------------------
# protocol drivers

def supplemental_gain(model, inference, synth, n_episodes: int = 100,
                      seed: int = 0, mode: str = "biased",
                      graph_type: str = "type1", concepts=None,
                      k_examples: int = 4, m_tests: int = 10) -> dict:
    """Accuracy with supplemental sentences vs the same episodes without."""
    schema = model.schema
    eps = eval_episodes(schema, concepts or schema.test, n_episodes, seed,
                        mode=mode, k_examples=k_examples, m_tests=m_tests)
    with_facts = evaluate_episodes(model, inference, synth, eps,
                                   graph_type=graph_type, seed=seed)
    fewshot = evaluate_episodes(model, inference, synth, eps,
                                graph_type=graph_type, strip_facts=True,
                                seed=seed)
    return {
        "with_facts": with_facts["accuracy"],
        "fewshot": fewshot["accuracy"],
        "gain": with_facts["accuracy"] - fewshot["accuracy"],
        "per_episode_with": with_facts["per_episode"],
        "per_episode_fewshot": fewshot["per_episode"],
        "n_episodes": n_episodes,
        "mode": mode,
    }


def model_comparison(model, inferences: dict, synth, n_episodes: int = 100,
                     seed: int = 0, mode: str = "biased",
                     graph_type: str = "type1") -> dict:
    """Same episodes scored by several inference strategies."""
    schema = model.schema
    eps = eval_episodes(schema, schema.test, n_episodes, seed, mode=mode)
    out = {}
    for name, inf in inferences.items():
        res = evaluate_episodes(model, inf, synth, eps, graph_type=graph_type,
                                seed=seed)
        out[name] = {"accuracy": res["accuracy"],
                     "per_episode": res["per_episode"]}
    return out


def related_fraction_curve(model, inference, synth, fractions=(0.0, 0.25, 0.5, 0.75, 1.0),
                           n_episodes: int = 100, seed: int = 0,
                           mode: str = "biased", graph_type: str = "type1") -> list:
    """Accuracy as a function of how many related facts episodes keep.

    Episode seeds are shared across fractions, so scenes and questions are
    identical and only the supplemental sentences vary.
    """
    schema = model.schema
    rows = []
    for f in fractions:
        eps = eval_episodes(schema, schema.test, n_episodes, seed, mode=mode,
                            related_fraction=float(f))
        res = evaluate_episodes(model, inference, synth, eps,
                                graph_type=graph_type, seed=seed)
        rows.append({"fraction": float(f), "accuracy": res["accuracy"],
                     "per_episode": res["per_episode"]})
    return rows


def space_comparison(world: str, spaces, model_kind: str, preset_name: str,
                     seed: int, mode: str = "standard", log_fn=None) -> list:
    """Full pipeline per space on one world; returns one row per space."""
    rows = []
    for space in spaces:
        doc, schema, synth, model = build_stack(world, space, preset_name, seed)
        pre = pretrain_stage(model, synth, doc, seed, log_fn=log_fn)
        inf = inference_for(model, model_kind, seed)
        meta = metatrain_stage(model, inf, synth, doc, seed, mode=mode,
                               graph_type="type2" if world == "taxonomy_like" else "type1")
        eps = eval_episodes(schema, schema.test, doc["eval_episodes"], seed,
                            mode=mode)
        res = evaluate_episodes(model, inf, synth, eps, seed=seed)
        row = {
            "space": space,
            "pretrain_acc": pre.best_acc,
            "meta_val_acc": meta.best_acc,
            "episode_acc": res["accuracy"],
        }
        if world == "taxonomy_like":
            row["entailment_auc"] = taxonomy_auc(model)["auc"]
        else:
            row["entailment_auc"] = ""
        rows.append(row)
    return rows


def continual_pairing(model, inference, synth, n_seeds: int = 25,
                      seed: int = 0, k_examples: int = 4,
                      m_tests: int = 10) -> dict:
    """Matched fresh-parent vs base-parent leaf acquisition.

    Per seed: the held-out mid concept is learned and committed, then two
    of its leaves (whose single supplemental fact names the freshly
    committed mid) are paired with two standalone leaves (whose fact names
    a pretrained base concept). Nothing besides the mid is committed, so
    the two legs of a pair see identical model state.
    """
    schema = model.schema
    mid = next(c for c in schema.test if schema.children(c))
    fresh_leaves = [c for c in schema.test if schema.parent.get(c) == mid]
    base_leaves = [c for c in schema.test
                   if not schema.children(c) and schema.parent.get(c) in schema.base]
    if not fresh_leaves or not base_leaves:
        raise ValueError("schema lacks the held-out structure for pairing")
    rows = []
    for s in range(n_seeds):
        m2 = model.clone()
        facts_seen = FactStore()
        known = set(m2.objects.names)
        ep_mid = make_episode(schema, intseed(seed, "pair-mid", s), mid,
                              mode="standard", k_examples=k_examples,
                              m_tests=m_tests, known=known)
        mid_facts = episode_facts(ep_mid)
        task = episode_task(m2, synth, ep_mid, facts=mid_facts,
                            graph_type="type2", fact_store=facts_seen)
        choice = inference.infer_np(task, rng_for(seed, "pair-mid-infer", s))
        m2.objects.add(mid, np.asarray(choice["raw"]))
        for a, b, kind in mid_facts:
            facts_seen.add(a, b, kind)
        known.add(mid)
        for k in range(2):
            pair = {
                "fresh": fresh_leaves[(s + k) % len(fresh_leaves)],
                "base": base_leaves[k % len(base_leaves)],
            }
            for kind, concept in pair.items():
                ep = make_episode(schema, intseed(seed, "pair-ep", s, k, kind),
                                  concept, mode="standard",
                                  k_examples=k_examples, m_tests=m_tests,
                                  known=known, parent_only=True)
                facts = episode_facts(ep)
                task = episode_task(m2, synth, ep, facts=facts,
                                    graph_type="type2", fact_store=facts_seen)
                ch = inference.infer_np(task, rng_for(seed, "pair-infer", s, k, kind))
                acc = answer_tests(m2, synth, ep, ch["raw"])
                rows.append({"seed": s, "pair": k, "kind": kind,
                             "concept": concept, "accuracy": acc})
    fresh = [r["accuracy"] for r in rows if r["kind"] == "fresh"]
    base = [r["accuracy"] for r in rows if r["kind"] == "base"]
    return {
        "rows": rows,
        "fresh_mean": mean_accuracy(fresh),
        "base_mean": mean_accuracy(base),
        "delta": mean_accuracy(fresh) - mean_accuracy(base),
        "n_pairs": len(fresh),
    }
