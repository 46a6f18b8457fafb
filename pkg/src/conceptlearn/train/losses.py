"""QA losses and gradient collection shared by the training stages."""

from __future__ import annotations

from ..executor import Answer, execute
from ..store import ParamStore

P_FLOOR = 1e-12


def answer_nll(ops, answer: Answer, gold: str):
    """Negative log probability of the gold label, floored away from log 0."""
    return ops.neg(ops.log(ops.maximum(answer.prob_of(gold), P_FLOOR)))


def question_loss(ops, ctx, prog, gold: str):
    return answer_nll(ops, execute(prog, ctx), gold)


def collect_grads(tape, store: ParamStore, keys) -> dict:
    """Param-shaped gradient arrays for the groups that reached this tape.

    Groups absent from the tape (an unused edge type, a concept no question
    touched) simply produce no entry, so the optimizer leaves them alone.
    """
    grads = {}
    for k in keys:
        if tape.has_leaves(k):
            grads[k] = tape.grad_for(k).reshape(store[k].shape)
    return grads
