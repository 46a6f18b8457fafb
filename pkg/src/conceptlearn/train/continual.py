"""Sequential concept acquisition with committed embeddings and facts.

Concepts arrive in hop order (parents before the children whose
supplemental facts mention them). Each episode is solved with the
trained inference network, the inferred embedding is committed to the
model's registry, and the episode's facts join a growing fact store, so
later concepts can lean on earlier fresh ones exactly as they lean on
pretrained ones.
"""

from __future__ import annotations

import numpy as np

from ..infer.graphs import FactStore
from ..model import GroundedModel
from ..seeding import intseed, rng_for
from ..worldgen.episodes import make_episode
from .meta import answer_tests, episode_facts, episode_task


def hop_order(schema, concepts) -> list:
    return sorted(concepts, key=lambda c: (schema.hop(c), c))


def run_continual(model: GroundedModel, inference, synth, concepts,
                  seed: int = 0, mode: str = "standard",
                  graph_type: str = "type2", parent_only: bool = False,
                  k_examples: int = 4, m_tests: int = 10,
                  related_fraction: float = 1.0) -> list:
    """Learn `concepts` in hop order on a clone of `model`; returns one
    result row per concept. The clone keeps the caller's model pristine."""
    model = model.clone()
    schema = model.schema
    facts_seen = FactStore()
    known = set(model.objects.names)
    results = []
    for idx, concept in enumerate(hop_order(schema, concepts)):
        episode = make_episode(
            schema, intseed(seed, "continual", idx, concept), concept,
            mode=mode, k_examples=k_examples, m_tests=m_tests,
            related_fraction=related_fraction, known=known,
            parent_only=parent_only)
        facts = episode_facts(episode)
        task = episode_task(model, synth, episode, facts=facts,
                            graph_type=graph_type, fact_store=facts_seen)
        choice = inference.infer_np(
            task, rng_for(seed, "continual-infer", idx, concept))
        acc = answer_tests(model, synth, episode, choice["raw"])
        model.objects.add(concept, np.asarray(choice["raw"]))
        for a, b, kind in facts:
            facts_seen.add(a, b, kind)
        known.add(concept)
        results.append({
            "concept": concept,
            "hop": schema.hop(concept),
            "accuracy": acc,
            "n_facts": len(facts),
            "n_edges": len(task.edges),
        })
    return results
