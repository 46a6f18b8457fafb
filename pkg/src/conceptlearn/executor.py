"""Differentiable program executor over embedded scenes.

Set-valued ops carry one log-score per object. Filter adds the log
membership of the concept, Relate scores ordered pairs against a
relational concept and takes the best supporting witness, Intersection
and Union are min and max in log space. Terminal ops turn the scores
into a distribution over answer labels that always sums to one.

The same ``execute`` runs on a Tape (training) or on FLOAT_OPS
(evaluation); hard-mode -inf scores are only legal off-tape, so an empty
Relate on tape uses a large negative constant instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .spaces import SpaceConfig, membership_log
from .lang.programs import Prog
from .worldgen.scenes import SceneSpec, rel_true

LOG_EMPTY = -100.0


class ExecutorError(ValueError):
    pass


@dataclass
class ExecutorConfig:
    tau_count: float = 0.25
    exist_mode: str = "max"  # "max" or "noisy_or"
    smoothed: bool = True
    count_max: int = 10
    referent_eps: float = 1e-6


@dataclass
class Answer:
    kind: str  # "bool" | "count" | "concept"
    labels: tuple
    probs: list
    degenerate: bool = False

    def prob_of(self, label: str):
        try:
            return self.probs[self.labels.index(label)]
        except ValueError:
            raise ExecutorError(f"label {label!r} not among {self.labels}") from None

    def value_probs(self, ops) -> list[float]:
        return [float(ops.value(p)) for p in self.probs]

    def best(self, ops) -> str:
        vals = self.value_probs(ops)
        return self.labels[max(range(len(vals)), key=lambda i: (vals[i], -i))]


class ExecutionContext:
    """Embeddings and caches for one scene on one backend.

    ``concept_emb``/``relation_emb`` map names to embeddings (BoxH for the
    box space, handle lists for vector spaces). ``obj_points`` holds one
    center/vector handle list per object, ``pair_fn(subj, ref)`` builds the
    relational input embedding for an ordered pair. ``overrides`` supply
    episode-local concepts and win name lookups.
    """

    def __init__(self, ops, schema, space: SpaceConfig, rel_space: SpaceConfig,
                 obj_points, pair_fn, concept_emb, relation_emb,
                 answer_concepts=None, overrides=None,
                 config: ExecutorConfig | None = None, trace=None):
        self.ops = ops
        self.schema = schema
        self.space = space
        self.rel_space = rel_space
        self.obj_points = obj_points
        self.n = len(obj_points)
        self._pair_fn = pair_fn
        self._concept_emb = concept_emb
        self._relation_emb = relation_emb
        self.overrides = dict(overrides or {})
        self.answer_concepts = dict(answer_concepts or {})
        self.config = config or ExecutorConfig()
        self.trace = trace
        self._pairs = {}
        self._mlog = {}
        self._rlog = {}
        self._emb_cache = {}
        self._rel_emb_cache = {}

    def concept_embedding(self, name: str):
        if name in self.overrides:
            return self.overrides[name]
        if name not in self._emb_cache:
            self._emb_cache[name] = self._concept_emb(name)
        return self._emb_cache[name]

    def membership(self, name: str, j: int):
        key = (name, j)
        if key not in self._mlog:
            emb = self.concept_embedding(name)
            self._mlog[key] = membership_log(
                self.ops, self.space, emb, self.obj_points[j],
                smoothed=self.config.smoothed)
        return self._mlog[key]

    def pair_point(self, subj: int, ref: int):
        key = (subj, ref)
        if key not in self._pairs:
            self._pairs[key] = self._pair_fn(subj, ref)
        return self._pairs[key]

    def relation(self, rel: str, subj: int, ref: int):
        key = (rel, subj, ref)
        if key not in self._rlog:
            if rel not in self._rel_emb_cache:
                self._rel_emb_cache[rel] = self._relation_emb(rel)
            emb = self._rel_emb_cache[rel]
            self._rlog[key] = membership_log(
                self.ops, self.rel_space, emb, self.pair_point(subj, ref),
                smoothed=self.config.smoothed)
        return self._rlog[key]


def _exec_set(prog: Prog, ctx: ExecutionContext) -> list:
    ops = ctx.ops
    op = prog.op
    if op == "Scene":
        out = [0.0] * ctx.n
    elif op == "Filter":
        child = _exec_set(prog.children[0], ctx)
        out = [ops.add(child[j], ctx.membership(prog.arg, j)) for j in range(ctx.n)]
    elif op in ("Relate", "AERelate"):
        child = _exec_set(prog.children[0], ctx)
        rel = prog.arg if op == "Relate" else f"has_same_{prog.arg}"
        empty = LOG_EMPTY if ops.recording else -math.inf
        out = []
        for j in range(ctx.n):
            supports = [ops.add(child[i], ctx.relation(rel, j, i))
                        for i in range(ctx.n) if i != j]
            out.append(ops.max_of(supports) if supports else empty)
    elif op == "Intersection":
        a = _exec_set(prog.children[0], ctx)
        b = _exec_set(prog.children[1], ctx)
        out = [ops.minimum(a[j], b[j]) for j in range(ctx.n)]
    elif op == "Union":
        a = _exec_set(prog.children[0], ctx)
        b = _exec_set(prog.children[1], ctx)
        out = [ops.maximum(a[j], b[j]) for j in range(ctx.n)]
    else:
        raise ExecutorError(f"{op} is not a set op")
    if ctx.trace is not None:
        ctx.trace.append({"op": op, "arg": prog.arg,
                          "scores": [float(ops.value(s)) for s in out]})
    return out


def _soft_count(scores, ops):
    return ops.sum_([ops.exp(s) for s in scores])


def _exist_prob(scores, ctx):
    ops = ctx.ops
    if ctx.config.exist_mode == "noisy_or":
        p_none = 1.0
        for s in scores:
            p_none = ops.mul(p_none, ops.sub(1.0, ops.exp(s)))
        return ops.sub(1.0, p_none)
    return ops.exp(ops.max_of(scores))


def _referent_weights(scores, ctx):
    """Normalized referent distribution; uniform + flag when all mass is gone."""
    ops = ctx.ops
    weights = [ops.exp(s) for s in scores]
    total = ops.sum_(weights)
    if float(ops.value(total)) < ctx.config.referent_eps:
        return [1.0 / len(scores)] * len(scores), True
    return [ops.div(w, total) for w in weights], False


def locate_referent(prog: Prog, ctx: ExecutionContext):
    return _referent_weights(_exec_set(prog, ctx), ctx)


def _bool_answer(p_yes, ctx) -> Answer:
    ops = ctx.ops
    p_no = ops.maximum(ops.sub(1.0, p_yes), 0.0)
    return Answer("bool", ("yes", "no"), [p_yes, p_no])


def execute(prog: Prog, ctx: ExecutionContext) -> Answer:
    ops = ctx.ops
    op = prog.op
    if op == "Exist":
        ans = _bool_answer(_exist_prob(_exec_set(prog.children[0], ctx), ctx), ctx)
    elif op == "Count":
        c_hat = _soft_count(_exec_set(prog.children[0], ctx), ops)
        labels = tuple(str(k) for k in range(ctx.config.count_max + 1))
        # softmax over -|c_hat - k| keeps every label's probability positive,
        # so a count that is off by more than one still carries gradient
        tau = ctx.config.tau_count
        logits = [ops.div(ops.neg(ops.absolute(ops.sub(c_hat, float(k)))), tau)
                  for k in range(ctx.config.count_max + 1)]
        peak = ops.max_of(logits)
        exps = [ops.exp(ops.sub(z, peak)) for z in logits]
        total = ops.sum_(exps)
        ans = Answer("count", labels, [ops.div(e, total) for e in exps])
    elif op in ("CountGreaterThan", "CountLessThan", "CountEqual"):
        ca = _soft_count(_exec_set(prog.children[0], ctx), ops)
        cb = _soft_count(_exec_set(prog.children[1], ctx), ops)
        tau = ctx.config.tau_count
        if op == "CountEqual":
            z = ops.div(ops.sub(0.5, ops.absolute(ops.sub(ca, cb))), tau)
        else:
            diff = ops.sub(ca, cb) if op == "CountGreaterThan" else ops.sub(cb, ca)
            z = ops.div(ops.sub(diff, 0.5), tau)
        ans = _bool_answer(ops.sigmoid(z), ctx)
    elif op == "Query":
        weights, degenerate = _referent_weights(_exec_set(prog.children[0], ctx), ctx)
        concepts = tuple(ctx.answer_concepts.get(prog.arg, ()))
        if not concepts:
            raise ExecutorError(f"no answer concepts for category {prog.arg!r}")
        raw = []
        for c in concepts:
            terms = [ops.mul(weights[j], ops.exp(ctx.membership(c, j)))
                     for j in range(ctx.n)]
            raw.append(ops.sum_(terms))
        total = ops.sum_(raw)
        if float(ops.value(total)) < ctx.config.referent_eps:
            probs = [1.0 / len(concepts)] * len(concepts)
            degenerate = True
        else:
            probs = [ops.div(r, total) for r in raw]
        ans = Answer("concept", concepts, probs, degenerate)
    elif op == "AEQuery":
        wa, da = _referent_weights(_exec_set(prog.children[0], ctx), ctx)
        wb, db = _referent_weights(_exec_set(prog.children[1], ctx), ctx)
        rel = f"has_same_{prog.arg}"
        terms = []
        for j in range(ctx.n):
            for k in range(ctx.n):
                match = 1.0 if j == k else ops.exp(ctx.relation(rel, j, k))
                terms.append(ops.mul(ops.mul(wa[j], wb[k]), match))
        ans = _bool_answer(ops.sum_(terms), ctx)
        ans.degenerate = da or db
    else:
        raise ExecutorError(f"{op} is not a question root")
    if ctx.trace is not None:
        ctx.trace.append({"op": op, "arg": prog.arg,
                          "answer": dict(zip(ans.labels, ans.value_probs(ops)))})
    return ans


# exact symbolic evaluation lives with the world generators
from .worldgen.oracle import denotation, symbolic_oracle  # noqa: E402
