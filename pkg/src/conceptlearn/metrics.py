"""Evaluation metrics and deterministic result files.

Result files never include wall-clock time or host details, so a rerun
with the same seed writes byte-identical artifacts.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .spaces import np_entailment_log


def rank_auc(pos, neg) -> float:
    """Probability a positive outscores a negative, ties counted half.

    Computed from average ranks (Mann-Whitney), which handles ties exactly
    and runs in O((P+N) log(P+N)).
    """
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("rank_auc needs both positive and negative scores")
    both = np.concatenate([pos, neg])
    order = np.argsort(both, kind="mergesort")
    ranks = np.empty(both.size, dtype=np.float64)
    sorted_vals = both[order]
    i = 0
    while i < both.size:
        j = i
        while j + 1 < both.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    r_pos = float(ranks[:pos.size].sum())
    return (r_pos - pos.size * (pos.size + 1) / 2.0) / (pos.size * neg.size)


def pairwise_auc(pos, neg) -> float:
    """Brute-force O(P*N) AUC; the agreement oracle for rank_auc."""
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def taxonomy_pairs(schema, names) -> tuple:
    """Ordered (descendant, ancestor) positives and all other ordered pairs
    as negatives, restricted to `names`."""
    names = [n for n in names if n in schema.parent]
    pos = []
    neg = []
    for c in names:
        anc = set(schema.ancestry(c)[1:])
        for a in names:
            if a == c:
                continue
            (pos if a in anc else neg).append((c, a))
    return pos, neg


def entailment_scores(model, pairs) -> list:
    """np_entailment_log over registry concepts for (child, parent) pairs."""
    space = model.obj_space
    out = []
    for child, parent in pairs:
        if space.kind == "box":
            c = model.objects.numeric_box(child)
            cmin, cmax = c[0] - c[1], c[0] + c[1]
            p = model.objects.numeric_box(parent)
            pmin, pmax = p[0] - p[1], p[0] + p[1]
            out.append(np_entailment_log(space, (cmin, cmax), (pmin, pmax)))
        else:
            out.append(np_entailment_log(space, model.objects.raw(child),
                                         model.objects.raw(parent)))
    return out


def taxonomy_auc(model, names=None) -> dict:
    """Entailment AUC over a taxonomy model's registered concepts."""
    schema = model.schema
    if names is None:
        names = list(model.objects.names)
    pos_pairs, neg_pairs = taxonomy_pairs(schema, names)
    pos = entailment_scores(model, pos_pairs)
    neg = entailment_scores(model, neg_pairs)
    return {"auc": rank_auc(pos, neg), "n_pos": len(pos), "n_neg": len(neg)}


def mean_accuracy(per_episode) -> float:
    return float(np.mean(per_episode)) if len(per_episode) else 0.0


def per_concept_accuracy(rows) -> dict:
    """rows of (concept, accuracy) -> concept -> mean accuracy."""
    acc: dict = {}
    for concept, a in rows:
        acc.setdefault(concept, []).append(a)
    return {c: float(np.mean(v)) for c, v in sorted(acc.items())}


# ---------------------------------------------------------------------------
# result files

def format_float(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, fieldnames, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: format_float(row.get(k, "")) for k in fieldnames})


def write_json(path, doc) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
