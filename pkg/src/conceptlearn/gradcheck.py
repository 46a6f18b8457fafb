"""Finite-difference verification of tape gradients."""
from __future__ import annotations

import math

import numpy as np

from .tape import FLOAT_OPS, Tape, TapeError


def grad_check(f, x0: np.ndarray, eps: float = 1e-5) -> float:
    """Compare tape gradients of f against central finite differences.

    `f(ops, handles) -> handle` must build the same scalar in whichever mode
    it is given: a Tape (handles are leaf node ids) or FLOAT_OPS (handles are
    plain floats).  Returns max_i |analytic_i - fd_i| / max(1e-8, |fd_i|).
    """
    x0 = np.asarray(x0, dtype=np.float64)

    tape = Tape()
    ids = [tape.leaf(v) for v in x0]
    root = f(tape, ids)
    if type(root) is not int:
        raise TapeError("f folded to a constant; nothing to check")
    tape.backward(root)
    analytic = np.array([tape.grad_of(i) for i in ids])

    def evaluate(xs) -> float:
        out = f(FLOAT_OPS, [float(v) for v in xs])
        if not math.isfinite(out):
            raise TapeError(f"non-finite value {out!r} during finite differencing")
        return out

    worst = 0.0
    xs = x0.copy()
    for i in range(len(x0)):
        orig = xs[i]
        xs[i] = orig + eps
        hi = evaluate(xs)
        xs[i] = orig - eps
        lo = evaluate(xs)
        xs[i] = orig
        fd = (hi - lo) / (2.0 * eps)
        err = abs(analytic[i] - fd) / max(1e-8, abs(fd))
        if err > worst:
            worst = err
    return worst
