"""Stage two and three: learn to infer concepts from episodes, then do it.

Meta-training replays the fast-learning situation on concepts the model
already knows: an episode's descriptive sentences are parsed, referents
located with the frozen grounded model, and the inference network's
embedding overrides the trained one when the episode's questions are
answered. The loss is the mean QA NLL minus a weighted log prior of the
inferred embedding; only inference-network and prior parameters update,
and a digest over the grounded groups asserts the freeze.

Episode supplemental sentences are stochastically thinned during
training (per-fact drops plus a fact-free fraction) so the network stays
useful when no facts arrive at test time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..executor import ExecutorConfig, execute, locate_referent
from ..infer.graphs import build_task
from ..infer.priors import log_prior_density
from ..lang.parser import parse_description, parse_question, parse_supplemental
from ..model import GroundedModel
from ..optim import AdamState, adam_step
from ..seeding import intseed, rng_for
from ..spaces import materialize_box
from ..tape import FLOAT_OPS, Tape
from ..worldgen.episodes import Episode, make_episode
from .losses import answer_nll, collect_grads


@dataclass
class MetaConfig:
    iters: int = 2000
    lr: float = 1e-3
    lam: float = 1.0             # weight of the log-prior term
    drop_fact: float = 0.2
    drop_all: float = 0.25
    graph_type: str = "type1"
    mode: str = "standard"
    k_examples: int = 4
    m_tests: int = 10
    val_every: int = 200
    val_episodes: int = 16
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "MetaConfig":
        return cls(**doc)


def qa_embedding(ops, space, raw):
    """Executor-facing embedding from raw coordinates or raw handles."""
    handles = list(raw) if isinstance(raw, (list, tuple)) else [float(v) for v in raw]
    if space.kind == "box":
        return materialize_box(ops, handles)
    return handles


def example_point(model: GroundedModel, synth, scene, sentence) -> tuple:
    """(weighted referent point, concept name) for one example sentence."""
    prog, concept, _family = parse_description(sentence)
    ctx = model.context_for(FLOAT_OPS, scene, synth)
    weights, _degenerate = locate_referent(prog, ctx)
    pts = np.asarray(ctx.obj_points, dtype=np.float64)
    return np.asarray(weights, dtype=np.float64) @ pts, concept


def episode_facts(episode: Episode) -> list:
    facts = []
    for sentence in episode.supplemental:
        fs, _family = parse_supplemental(sentence)
        facts.extend(fs)
    return facts


def episode_task(model: GroundedModel, synth, episode: Episode, facts=None,
                 graph_type: str = "type1", fact_store=None, known_raw=None):
    points = []
    for ex in episode.examples:
        point, concept = example_point(model, synth, ex.scene, ex.sentence)
        if concept != episode.concept:
            raise ValueError(
                f"example sentence teaches {concept!r}, episode is about "
                f"{episode.concept!r}")
        points.append(point)
    if facts is None:
        facts = episode_facts(episode)
    if known_raw is None:
        def known_raw(name):
            return model.objects.raw(name) if name in model.objects else None
    return build_task(episode.concept, facts, points, model.obj_space,
                      known_raw, graph_type, fact_store)


def answer_tests(model: GroundedModel, synth, episode: Episode, raw,
                 config: ExecutorConfig | None = None) -> float:
    """Fraction of the episode's questions answered correctly with the
    inferred embedding standing in for the concept."""
    concept = episode.concept
    correct = 0
    for t in episode.tests:
        prog = parse_question(t.question)
        emb = qa_embedding(FLOAT_OPS, model.obj_space, raw)
        ctx = model.context_for(FLOAT_OPS, t.scene, synth,
                                overrides={concept: emb}, config=config)
        if execute(prog, ctx).best(FLOAT_OPS) == t.answer:
            correct += 1
    return correct / max(len(episode.tests), 1)


def evaluate_episodes(model: GroundedModel, inference, synth, episodes,
                      graph_type: str = "type1", strip_facts: bool = False,
                      fact_store=None, known_raw=None, seed: int = 0) -> dict:
    """Mean QA accuracy of freshly inferred concepts over finished episodes."""
    per_episode = []
    for i, ep in enumerate(episodes):
        facts = [] if strip_facts else None
        task = episode_task(model, synth, ep, facts=facts,
                            graph_type=graph_type, fact_store=fact_store,
                            known_raw=known_raw)
        choice = inference.infer_np(task, rng_for(seed, "episode-eval", i, ep.concept))
        per_episode.append(answer_tests(model, synth, ep, choice["raw"]))
    acc = float(np.mean(per_episode)) if per_episode else 0.0
    return {"accuracy": acc, "per_episode": per_episode}


@dataclass
class MetaResult:
    history: list = field(default_factory=list)  # (iter, val_acc, mean_loss)
    best_acc: float = 0.0
    iters_run: int = 0

    def to_dict(self) -> dict:
        return {"history": self.history, "best_acc": self.best_acc,
                "iters_run": self.iters_run}


def _episode_loss(model, inference, synth, episode, task, choice, lam):
    tape = Tape()
    handles = inference.infer_tape(tape, task, choice)
    emb = qa_embedding(tape, model.obj_space, handles)
    losses = []
    for t in episode.tests:
        prog = parse_question(t.question)
        ctx = model.context_for(tape, t.scene, synth,
                                overrides={episode.concept: emb})
        losses.append(answer_nll(tape, execute(prog, ctx), t.answer))
    loss = tape.div(tape.sum_(losses), float(len(losses)))
    prior = log_prior_density(tape, model.store, model.obj_space, emb)
    return tape, tape.sub(loss, tape.mul(lam, prior))


def meta_train(model: GroundedModel, inference, synth, config: MetaConfig,
               concepts=None, log_fn=None) -> MetaResult:
    store = model.store
    frozen = model.base_digest()
    keys = store.keys_with_prefix(*inference.param_prefixes())
    if not keys:
        raise ValueError("inference model exposes no trainable parameters")
    opt = AdamState(lr=config.lr)
    concepts = list(concepts) if concepts is not None else list(model.schema.base)

    val_eps = [
        make_episode(model.schema, intseed(config.seed, "meta-val", i), c,
                     mode=config.mode, k_examples=config.k_examples,
                     m_tests=config.m_tests)
        for i, c in enumerate(
            (model.schema.val * config.val_episodes)[:config.val_episodes])
    ]

    result = MetaResult()
    best_params = None
    running = []
    for it in range(config.iters):
        rng = rng_for(config.seed, "meta-train", it)
        concept = concepts[int(rng.integers(len(concepts)))]
        episode = make_episode(model.schema, intseed(config.seed, "meta-ep", it),
                               concept, mode=config.mode,
                               k_examples=config.k_examples,
                               m_tests=config.m_tests)
        facts = episode_facts(episode)
        if rng.random() < config.drop_all:
            facts = []
        else:
            facts = [f for f in facts if rng.random() >= config.drop_fact]
        task = episode_task(model, synth, episode, facts=facts,
                            graph_type=config.graph_type)
        choice = inference.infer_np(task, rng)
        tape, loss = _episode_loss(model, inference, synth, episode, task,
                                   choice, config.lam)
        tape.backward(loss)
        adam_step(store.as_dict(), collect_grads(tape, store, keys), opt)
        running.append(tape.value(loss))
        result.iters_run = it + 1

        if (it + 1) % config.val_every != 0:
            continue
        acc = evaluate_episodes(model, inference, synth, val_eps,
                                graph_type=config.graph_type,
                                seed=config.seed)["accuracy"]
        mean_loss = float(np.mean(running))
        running = []
        result.history.append((it + 1, acc, mean_loss))
        if log_fn:
            log_fn({"iter": it + 1, "val_acc": acc, "train_loss": mean_loss})
        if acc > result.best_acc:
            result.best_acc = acc
            best_params = {k: store[k].copy() for k in keys}

    if best_params is not None:
        for k, v in best_params.items():
            np.copyto(store[k], v)
    if model.base_digest() != frozen:
        raise RuntimeError("grounded parameters changed during meta-training")
    return result
