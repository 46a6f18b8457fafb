"""Scalar reverse-mode differentiation on a flat tape.

Every differentiable quantity in the project is a scalar node on a Tape.
Nodes store their value, the ids of their parent nodes, and the local partial
derivatives, all computed eagerly at forward time; backward is then a single
reverse sweep with no op dispatch.  Constants are plain Python floats and are
never recorded, so ops accept a mix of node ids (int) and floats.

The same scalar kernels back two execution modes:

  * Tape     -- records nodes, supports backward(); rejects non-finite values.
  * FloatOps -- no recording, raw float arithmetic; tolerates -inf so that
                hard-mode (non-smoothed) probability math can be evaluated.

Model code is written once against this common method surface and runs in
either mode, which keeps training-path and evaluation-path values identical.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

Handle = "int | float"  # node id on a tape, or a plain constant


class TapeError(RuntimeError):
    pass


class NonFiniteError(TapeError):
    """A value on the tape became NaN or infinite; the step must abort."""


# ---------------------------------------------------------------------------
# shared scalar kernels
#
# Both modes call these, so the float sequence is bit-identical whether or not
# a tape is recording.

def sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def softplus(x: float, tau: float) -> float:
    """Smoothed max(x, 0): tau * ln(1 + exp(x / tau)), stable in both tails."""
    t = x / tau
    if t > 30.0:
        return x
    if t < -30.0:
        return tau * math.exp(t)
    return tau * math.log1p(math.exp(t))


def _log(x: float) -> float:
    # log(0) = -inf is meaningful in hard-mode probability math; negative
    # arguments are always a bug.
    if x > 0.0:
        return math.log(x)
    if x == 0.0:
        return -math.inf
    raise ValueError(f"log of negative value {x!r}")


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _val(vals: list, h) -> float:
    return vals[h] if type(h) is int else h


class Tape:
    """Wengert list with eager local partials.

    Parameters enter through leaf(); leaves_for() creates (and caches) one
    leaf per element of a named parameter array so gradients can be read back
    as arrays after backward().
    """

    recording = True

    def __init__(self):
        self._vals: list[float] = []
        self._args: list[tuple] = []
        self._parts: list[tuple] = []
        self._leaf_cache: dict[str, list[int]] = {}
        self.grad: list[float] | None = None

    def __len__(self) -> int:
        return len(self._vals)

    def _node(self, value: float, args: tuple, parts: tuple) -> int:
        if not math.isfinite(value):
            raise NonFiniteError(f"non-finite value {value!r} on tape (node {len(self._vals)})")
        self._vals.append(value)
        self._args.append(args)
        self._parts.append(parts)
        return len(self._vals) - 1

    # -- leaves ------------------------------------------------------------

    def leaf(self, x: float) -> int:
        return self._node(float(x), (), ())

    def leaves_for(self, key: str, values: np.ndarray) -> list[int]:
        """One leaf per element of `values`, cached per key for this tape."""
        ids = self._leaf_cache.get(key)
        if ids is None:
            ids = [self._node(float(v), (), ()) for v in values.ravel()]
            self._leaf_cache[key] = ids
        return ids

    def value(self, h) -> float:
        return self._vals[h] if type(h) is int else h

    def has_leaves(self, key: str) -> bool:
        return key in self._leaf_cache

    # -- arithmetic ---------------------------------------------------------

    def add(self, a, b):
        ia, ib = type(a) is int, type(b) is int
        if not ia and not ib:
            return a + b
        v = self._vals
        va = v[a] if ia else a
        vb = v[b] if ib else b
        if ia and ib:
            return self._node(va + vb, (a, b), (1.0, 1.0))
        return self._node(va + vb, (a,) if ia else (b,), (1.0,))

    def sub(self, a, b):
        ia, ib = type(a) is int, type(b) is int
        if not ia and not ib:
            return a - b
        v = self._vals
        va = v[a] if ia else a
        vb = v[b] if ib else b
        if ia and ib:
            return self._node(va - vb, (a, b), (1.0, -1.0))
        if ia:
            return self._node(va - vb, (a,), (1.0,))
        return self._node(va - vb, (b,), (-1.0,))

    def mul(self, a, b):
        ia, ib = type(a) is int, type(b) is int
        if not ia and not ib:
            return a * b
        v = self._vals
        va = v[a] if ia else a
        vb = v[b] if ib else b
        if ia and ib:
            return self._node(va * vb, (a, b), (vb, va))
        if ia:
            return self._node(va * vb, (a,), (vb,))
        return self._node(va * vb, (b,), (va,))

    def div(self, a, b):
        ia, ib = type(a) is int, type(b) is int
        if not ia and not ib:
            return a / b
        v = self._vals
        va = v[a] if ia else a
        vb = v[b] if ib else b
        out = va / vb
        if ia and ib:
            return self._node(out, (a, b), (1.0 / vb, -out / vb))
        if ia:
            return self._node(out, (a,), (1.0 / vb,))
        return self._node(out, (b,), (-out / vb,))

    def neg(self, a):
        if type(a) is not int:
            return -a
        return self._node(-self._vals[a], (a,), (-1.0,))

    # -- unary nonlinearities ------------------------------------------------

    def log(self, a):
        if type(a) is not int:
            return _log(a)
        va = self._vals[a]
        out = _log(va)
        if not math.isfinite(out):
            raise NonFiniteError(f"log({va!r}) is not finite; hard-mode zeros are only legal off-tape")
        return self._node(out, (a,), (1.0 / va,))

    def exp(self, a):
        if type(a) is not int:
            return _exp(a)
        out = _exp(self._vals[a])
        return self._node(out, (a,), (out,))

    def sqrt(self, a):
        if type(a) is not int:
            return math.sqrt(a)
        out = math.sqrt(self._vals[a])
        return self._node(out, (a,), (0.5 / out,))

    def sigmoid(self, a):
        if type(a) is not int:
            return sigmoid(a)
        s = sigmoid(self._vals[a])
        return self._node(s, (a,), (s * (1.0 - s),))

    def tanh(self, a):
        if type(a) is not int:
            return math.tanh(a)
        t = math.tanh(self._vals[a])
        return self._node(t, (a,), (1.0 - t * t,))

    def absolute(self, a):
        # subgradient at 0 routed to +1, matching the first-maximizer rule
        if type(a) is not int:
            return abs(a)
        va = self._vals[a]
        return self._node(abs(va), (a,), (1.0 if va >= 0.0 else -1.0,))

    def lgamma(self, a):
        from scipy.special import digamma  # imported lazily; cheap after first call

        if type(a) is not int:
            return math.lgamma(a)
        va = self._vals[a]
        return self._node(math.lgamma(va), (a,), (float(digamma(va)),))

    def softplus(self, a, tau: float):
        """Smoothed max(x, 0) with exact sigmoid slope."""
        if type(a) is not int:
            return softplus(a, tau)
        va = self._vals[a]
        return self._node(softplus(va, tau), (a,), (sigmoid(va / tau),))

    def log_softplus(self, a, tau: float):
        """ln(softplus(x, tau)), fused: the hot path of box log-volumes."""
        if type(a) is not int:
            return _log(softplus(a, tau))
        va = self._vals[a]
        sp = softplus(va, tau)
        return self._node(_log(sp), (a,), (sigmoid(va / tau) / sp,))

    def squash(self, a, scale: float):
        """scale * (sigmoid(x) - 1/2): odd monotone map onto (-scale/2, scale/2)."""
        if type(a) is not int:
            return scale * (sigmoid(a) - 0.5)
        s = sigmoid(self._vals[a])
        return self._node(scale * (s - 0.5), (a,), (scale * s * (1.0 - s),))

    # -- min / max (ties route the subgradient to the first argument) --------

    def maximum(self, a, b):
        ia, ib = type(a) is int, type(b) is int
        if not ia and not ib:
            return a if a >= b else b
        v = self._vals
        va = v[a] if ia else a
        vb = v[b] if ib else b
        first = va >= vb
        out = va if first else vb
        if ia and ib:
            return self._node(out, (a, b), (1.0, 0.0) if first else (0.0, 1.0))
        if ia:
            return self._node(out, (a,), (1.0,) if first else (0.0,))
        return self._node(out, (b,), (0.0,) if first else (1.0,))

    def minimum(self, a, b):
        ia, ib = type(a) is int, type(b) is int
        if not ia and not ib:
            return a if a <= b else b
        v = self._vals
        va = v[a] if ia else a
        vb = v[b] if ib else b
        first = va <= vb
        out = va if first else vb
        if ia and ib:
            return self._node(out, (a, b), (1.0, 0.0) if first else (0.0, 1.0))
        if ia:
            return self._node(out, (a,), (1.0,) if first else (0.0,))
        return self._node(out, (b,), (0.0,) if first else (1.0,))

    def max_of(self, xs: Sequence):
        out = xs[0]
        for x in xs[1:]:
            out = self.maximum(out, x)
        return out

    def min_of(self, xs: Sequence):
        out = xs[0]
        for x in xs[1:]:
            out = self.minimum(out, x)
        return out

    # -- fused reductions ----------------------------------------------------

    def sum_(self, xs: Sequence):
        v = self._vals
        total = 0.0
        args = []
        for x in xs:
            if type(x) is int:
                total += v[x]
                args.append(x)
            else:
                total += x
        if not args:
            return total
        return self._node(total, tuple(args), (1.0,) * len(args))

    def dot(self, xs: Sequence, ys: Sequence):
        """sum_i xs[i] * ys[i], one node regardless of length."""
        v = self._vals
        total = 0.0
        args = []
        parts = []
        for x, y in zip(xs, ys):
            ix, iy = type(x) is int, type(y) is int
            vx = v[x] if ix else x
            vy = v[y] if iy else y
            total += vx * vy
            if ix:
                args.append(x)
                parts.append(vy)
            if iy:
                args.append(y)
                parts.append(vx)
        if not args:
            return total
        return self._node(total, tuple(args), tuple(parts))

    def affine(self, ws: Sequence, xs: Sequence, b):
        """dot(ws, xs) + b as a single node."""
        v = self._vals
        total = 0.0
        args = []
        parts = []
        for w, x in zip(ws, xs):
            iw, ix = type(w) is int, type(x) is int
            vw = v[w] if iw else w
            vx = v[x] if ix else x
            total += vw * vx
            if iw:
                args.append(w)
                parts.append(vx)
            if ix:
                args.append(x)
                parts.append(vw)
        if type(b) is int:
            total += v[b]
            args.append(b)
            parts.append(1.0)
        else:
            total += b
        if not args:
            return total
        return self._node(total, tuple(args), tuple(parts))

    # -- reverse sweep ---------------------------------------------------------

    def backward(self, root) -> None:
        """Accumulate d(root)/d(node) into self.grad for every node.

        Deterministic: a fixed reverse sweep over the tape, so the same tape
        always yields bit-identical gradients.
        """
        if type(root) is not int:
            raise TapeError("backward root must be a tape node, got a constant")
        n = len(self._vals)
        if not 0 <= root < n:
            raise TapeError(f"node {root} is not on this tape (length {n})")
        grad = [0.0] * n
        grad[root] = 1.0
        args = self._args
        parts = self._parts
        for i in range(root, -1, -1):
            g = grad[i]
            if g == 0.0:
                continue
            a = args[i]
            if not a:
                continue
            p = parts[i]
            for k in range(len(a)):
                grad[a[k]] += g * p[k]
        for g in grad:
            if not math.isfinite(g):
                raise NonFiniteError("non-finite gradient after backward")
        self.grad = grad

    def grad_of(self, h) -> float:
        if self.grad is None:
            raise TapeError("backward() has not been run")
        return self.grad[h]

    def grad_for(self, key: str) -> np.ndarray:
        """Gradient array for a parameter group created via leaves_for."""
        if self.grad is None:
            raise TapeError("backward() has not been run")
        ids = self._leaf_cache.get(key)
        if ids is None:
            raise TapeError(f"no leaves were created for {key!r} on this tape")
        g = self.grad
        return np.array([g[i] for i in ids], dtype=np.float64)


class FloatOps:
    """Same method surface as Tape, raw floats, no recording.

    Used for evaluation paths (candidate search, validation, meta-testing)
    and as the finite-difference evaluator inside grad_check.  -inf is legal
    here so hard-mode probability math can flow through log space.
    """

    recording = False

    @staticmethod
    def leaf(x):
        return float(x)

    def leaves_for(self, key, values):
        return [float(v) for v in values.ravel()]

    @staticmethod
    def value(h):
        return h

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def div(a, b):
        return a / b

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def log(a):
        return _log(a)

    @staticmethod
    def exp(a):
        return _exp(a)

    @staticmethod
    def sqrt(a):
        return math.sqrt(a)

    @staticmethod
    def sigmoid(a):
        return sigmoid(a)

    @staticmethod
    def tanh(a):
        return math.tanh(a)

    @staticmethod
    def absolute(a):
        return abs(a)

    @staticmethod
    def lgamma(a):
        return math.lgamma(a)

    @staticmethod
    def softplus(a, tau):
        return softplus(a, tau)

    @staticmethod
    def log_softplus(a, tau):
        return _log(softplus(a, tau))

    @staticmethod
    def squash(a, scale):
        return scale * (sigmoid(a) - 0.5)

    @staticmethod
    def maximum(a, b):
        return a if a >= b else b

    @staticmethod
    def minimum(a, b):
        return a if a <= b else b

    @staticmethod
    def max_of(xs):
        return max(xs)

    @staticmethod
    def min_of(xs):
        return min(xs)

    @staticmethod
    def sum_(xs):
        total = 0.0
        for x in xs:
            total += x
        return total

    @staticmethod
    def dot(xs, ys):
        total = 0.0
        for x, y in zip(xs, ys):
            total += x * y
        return total

    @staticmethod
    def affine(ws, xs, b):
        total = 0.0
        for w, x in zip(ws, xs):
            total += w * x
        return total + b


FLOAT_OPS = FloatOps()
