"""Stage one: ground base concepts, relations, and projections with QA.

Scenes arrive in blocks of several questions each, so one execution
context (and its membership/pair caches) serves a whole block. The
clevr-style world uses a two-phase curriculum: small scenes and one-hop
questions first, the full distribution once validation clears a bar or
a fixed fraction of the budget is spent. The taxonomy world has no
curriculum; its blocks are single-object existence questions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..executor import execute
from ..lang.programs import parse_sexpr
from ..model import BASE_PREFIXES, GroundedModel
from ..optim import AdamState, adam_step
from ..spaces import box_log_volume
from ..tape import FLOAT_OPS, Tape
from ..worldgen.episodes import make_pretrain_block
from ..worldgen.questions import AnswerBalancer
from .losses import answer_nll, collect_grads

# validation blocks use indices disjoint from every training index
_VAL_BASE = 10_000_000


@dataclass
class PretrainConfig:
    iters: int = 5000
    batch_scenes: int = 2
    q_per_scene: int = 5
    lr: float = 3e-3
    vol_reg: float = 3e-3
    val_every: int = 200
    val_scenes: int = 24
    patience: int = 5
    lr_decay: float = 0.1
    stop_acc: float = 0.95
    advance_acc: float = 0.90
    advance_frac: float = 0.4
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "PretrainConfig":
        return cls(**doc)


def block_programs(block) -> list:
    return [(parse_sexpr(it.sexpr), it.answer) for it in block.items]


def evaluate_blocks(model: GroundedModel, synth, blocks) -> float:
    """Exact-answer accuracy under the float backend."""
    correct = 0
    total = 0
    for block in blocks:
        ctx = model.context_for(FLOAT_OPS, block.scene, synth)
        for prog, gold in block_programs(block):
            if execute(prog, ctx).best(FLOAT_OPS) == gold:
                correct += 1
            total += 1
    return correct / max(total, 1)


def _volume_penalty(tape, model):
    """Mean log-volume of every box-space concept.

    A strictly contained point scores membership 1 with no gradient, so
    nothing in the QA loss can expel an object a box wrongly swallowed.
    A small constant shrink pressure retreats each boundary until it
    reaches the points that actually resist, where QA gradients live.
    """
    vols = []
    for registry, space in ((model.objects, model.obj_space),
                            (model.relations, model.rel_space)):
        if space.kind != "box":
            continue
        for name in registry.names:
            box = registry.embedding(tape, name)
            vols.append(box_log_volume(tape, box, space.tau))
    if not vols:
        return None
    return tape.div(tape.sum_(vols), float(len(vols)))


def _val_blocks(model, config, phase) -> list:
    return [
        make_pretrain_block(model.schema, config.seed, _VAL_BASE + i, phase,
                            q_per_scene=config.q_per_scene)
        for i in range(config.val_scenes)
    ]


@dataclass
class PretrainResult:
    history: list = field(default_factory=list)  # (iter, phase, acc, lr)
    best_acc: float = 0.0
    iters_run: int = 0
    stopped_early: bool = False
    final_phase: int = 0

    def to_dict(self) -> dict:
        return {"history": self.history, "best_acc": self.best_acc,
                "iters_run": self.iters_run, "stopped_early": self.stopped_early,
                "final_phase": self.final_phase}


def pretrain(model: GroundedModel, synth, config: PretrainConfig,
             log_fn=None) -> PretrainResult:
    store = model.store
    keys = store.keys_with_prefix(*BASE_PREFIXES)
    opt = AdamState(lr=config.lr)
    balancer = AnswerBalancer()
    last_phase = 1 if model.schema.kind == "clevr_like" else 0
    phase = 0
    val = {p: _val_blocks(model, config, p) for p in range(last_phase + 1)}

    result = PretrainResult()
    best_params = None
    stall = 0
    phase_best = 0.0

    for it in range(config.iters):
        tape = Tape()
        losses = []
        for s in range(config.batch_scenes):
            block = make_pretrain_block(model.schema, config.seed,
                                        it * config.batch_scenes + s, phase,
                                        balancer, config.q_per_scene)
            ctx = model.context_for(tape, block.scene, synth)
            for prog, gold in block_programs(block):
                losses.append(answer_nll(tape, execute(prog, ctx), gold))
        loss = tape.div(tape.sum_(losses), float(len(losses)))
        if config.vol_reg > 0.0:
            penalty = _volume_penalty(tape, model)
            if penalty is not None:
                loss = tape.add(loss, tape.mul(config.vol_reg, penalty))
        tape.backward(loss)
        adam_step(store.as_dict(), collect_grads(tape, store, keys), opt)
        result.iters_run = it + 1

        if (it + 1) % config.val_every != 0:
            continue
        acc = evaluate_blocks(model, synth, val[phase])
        result.history.append((it + 1, phase, acc, opt.lr))
        if log_fn:
            log_fn({"iter": it + 1, "phase": phase, "val_acc": acc, "lr": opt.lr})

        if phase == last_phase and acc > result.best_acc:
            result.best_acc = acc
            best_params = {k: store[k].copy() for k in keys}
        if acc > phase_best + 1e-9:
            phase_best = acc
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                opt.lr *= config.lr_decay
                stall = 0
        if phase < last_phase and (acc >= config.advance_acc
                                   or it + 1 >= config.advance_frac * config.iters):
            phase = last_phase
            phase_best = 0.0
            stall = 0
        elif phase == last_phase and acc >= config.stop_acc:
            result.stopped_early = True
            break

    if best_params is not None:
        final = evaluate_blocks(model, synth, val[last_phase])
        if final < result.best_acc:
            for k, v in best_params.items():
                np.copyto(store[k], v)
        else:
            result.best_acc = final
    result.final_phase = phase
    return result
