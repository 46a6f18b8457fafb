import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conceptlearn.gradcheck import grad_check
from conceptlearn.seeding import rng_for
from conceptlearn.spaces import (
    BoxH,
    ConceptRegistry,
    SpaceConfig,
    UndefinedConditionalError,
    box_from_raw,
    box_log_conditional,
    box_log_joint,
    box_log_volume,
    embed_point,
    entailment_prob,
    init_projection,
    materialize_box,
    membership_log,
    membership_prob,
    np_box_from_raw,
    np_entailment_log,
    np_membership_log,
    point_box,
    raw_from_box,
)
from conceptlearn.store import ParamStore
from conceptlearn.tape import FLOAT_OPS, Tape

# frozen oracle constants (computed once at 40 digits)
LN_SOFTPLUS_HALF_TAU02 = -0.6620789416670116
SIGMA_8 = 0.9996646498695335
SIGMA_MINUS_2 = 0.11920292202211756


def fbox(center, offset) -> BoxH:
    """Materialize a numeric box on the float backend via raw coordinates."""
    raw = raw_from_box(np.asarray(center, float), np.asarray(offset, float))
    return materialize_box(FLOAT_OPS, list(raw.ravel()))


def test_raw_roundtrip():
    rng = rng_for(0, "roundtrip")
    for _ in range(50):
        c = rng.uniform(-0.3, 0.3, size=4)
        o = rng.uniform(0.01, 0.18, size=4)
        cen, off = box_from_raw(raw_from_box(c, o))
        assert np.allclose(cen, c, atol=1e-9)
        assert np.allclose(off, o, atol=1e-9)


def test_hard_volume_unit_like_cube():
    # the largest admissible cube has edge ~1 per dimension: log volume ~ 0
    b = fbox([0.0] * 3, [0.5 - 1e-9] * 3)
    assert box_log_volume(FLOAT_OPS, b, 0.2, smoothed=False) == pytest.approx(0.0, abs=1e-6)


def test_hard_volume_d2_quarter():
    b = fbox([0.0, 0.0], [0.25, 0.25])
    v = box_log_volume(FLOAT_OPS, b, 0.2, smoothed=False)
    assert v == pytest.approx(math.log(0.25), rel=1e-9)


def test_smoothed_volume_d1_frozen_value():
    b = fbox([0.0], [0.25])  # edge 0.5
    v = box_log_volume(FLOAT_OPS, b, 0.2, smoothed=True)
    assert v == pytest.approx(LN_SOFTPLUS_HALF_TAU02, rel=1e-9)


def test_joint_symmetric_and_self():
    a = fbox([0.1, -0.1], [0.2, 0.15])
    b = fbox([-0.05, 0.05], [0.25, 0.1])
    ab = box_log_joint(FLOAT_OPS, a, b, 0.2)
    ba = box_log_joint(FLOAT_OPS, b, a, 0.2)
    assert ab == pytest.approx(ba, rel=1e-12)
    aa = box_log_joint(FLOAT_OPS, a, a, 0.2)
    assert aa == pytest.approx(box_log_volume(FLOAT_OPS, a, 0.2), rel=1e-12)


def test_disjoint_hard_joint_is_zero_probability():
    a = fbox([-0.3], [0.1])
    b = fbox([0.3], [0.1])
    assert box_log_joint(FLOAT_OPS, a, b, 0.2, smoothed=False) == -math.inf


def test_containment_conditional_exactly_one():
    inner = fbox([0.0, 0.0], [0.1, 0.1])
    outer = fbox([0.0, 0.0], [0.3, 0.3])
    lc = box_log_conditional(FLOAT_OPS, outer, inner, 0.2, smoothed=False)
    assert lc == 0.0
    # smoothed mode also gives exactly 1 when the overlap equals the
    # conditioning box in every dimension
    lcs = box_log_conditional(FLOAT_OPS, outer, inner, 0.2, smoothed=True)
    assert math.exp(lcs) == pytest.approx(1.0, abs=1e-12)


def test_conditional_half_overlap():
    # b = [-0.2, 0.2], a = [0, 0.4]: overlap is exactly half of b
    a = fbox([0.2], [0.2])
    b = fbox([0.0], [0.2])
    lc = box_log_conditional(FLOAT_OPS, a, b, 0.2, smoothed=False)
    assert math.exp(lc) == pytest.approx(0.5, rel=1e-7)


def test_hard_conditional_on_zero_volume_raises():
    b = BoxH([0.1], [0.1])  # zero width, bypassing the parameterization
    a = fbox([0.0], [0.2])
    with pytest.raises(UndefinedConditionalError):
        box_log_conditional(FLOAT_OPS, a, b, 0.2, smoothed=False)


def test_monte_carlo_volume_small():
    """Hard-mode joint and conditional vs direct Monte-Carlo, quick version."""
    rng = rng_for(3, "mc-small")
    for trial in range(10):
        d = int(rng.integers(1, 4))
        while True:
            ca, cb = rng.uniform(-0.2, 0.2, size=(2, d))
            oa, ob = rng.uniform(0.08, 0.3, size=(2, d))
            lo = np.maximum(ca - oa, cb - ob)
            hi = np.minimum(ca + oa, cb + ob)
            if np.all(hi - lo > 0.02):  # keep the MC estimate well-conditioned
                break
        a, b = fbox(ca, oa), fbox(cb, ob)
        # sample inside b; P[hit a] * vol(b) estimates the joint volume
        n = 200_000
        pts = rng.uniform(cb - ob, cb + ob, size=(n, d))
        hits = np.all((pts >= ca - oa) & (pts <= ca + oa), axis=1)
        vol_b = float(np.prod(2 * ob))
        mc_joint = hits.mean() * vol_b
        joint = math.exp(box_log_joint(FLOAT_OPS, a, b, 0.2, smoothed=False))
        assert joint == pytest.approx(mc_joint, rel=0.03)
        cond = math.exp(box_log_conditional(FLOAT_OPS, a, b, 0.2, smoothed=False))
        assert cond == pytest.approx(hits.mean(), rel=0.03)


def test_smoothed_converges_to_hard():
    a = fbox([0.1, 0.0], [0.2, 0.2])
    b = fbox([-0.1, 0.05], [0.15, 0.25])
    hard = box_log_joint(FLOAT_OPS, a, b, 0.2, smoothed=False)
    errs = []
    for tau in (0.2, 0.02, 0.002):
        sm = box_log_joint(FLOAT_OPS, a, b, tau, smoothed=True)
        errs.append(abs(sm - hard))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_membership_box_inside_outside():
    space = SpaceConfig.make("box", 2)
    concept = fbox([0.0, 0.0], [0.2, 0.2])
    inside = membership_prob(FLOAT_OPS, space, concept, [0.05, -0.05])
    outside = membership_prob(FLOAT_OPS, space, concept, [0.45, 0.45], smoothed=False)
    assert inside == pytest.approx(1.0, abs=1e-9)
    assert outside == 0.0


def test_membership_hyperplane_frozen_points():
    space = SpaceConfig.make("hyperplane", 4)
    # z = dot/tau - gamma; pick vectors giving z = 0 exactly
    gamma = space.gamma
    c = [1.0, 0.0, 0.0, 0.0]
    o = [gamma * space.tau, 0.0, 0.0, 0.0]
    assert membership_prob(FLOAT_OPS, space, c, o) == pytest.approx(0.5, abs=1e-12)
    o8 = [(gamma + 8.0) * space.tau, 0.0, 0.0, 0.0]
    assert membership_prob(FLOAT_OPS, space, c, o8) == pytest.approx(SIGMA_8, rel=1e-12)


def test_membership_hypercone_frozen_points():
    space = SpaceConfig.make("hypercone", 3)
    c = [1.0, 0.0, 0.0]
    # cos = 1 -> z = (1 - 0.2)/0.1 = 8
    assert membership_prob(FLOAT_OPS, space, c, [2.0, 0.0, 0.0]) == pytest.approx(SIGMA_8, rel=1e-12)
    # orthogonal: cos = 0 -> z = -2
    assert membership_prob(FLOAT_OPS, space, c, [0.0, 3.0, 0.0]) == pytest.approx(
        SIGMA_MINUS_2, rel=1e-12)
    with pytest.raises(ValueError):
        membership_log(FLOAT_OPS, space, c, [0.0, 0.0, 0.0])


def test_entailment_box_cases():
    space = SpaceConfig.make("box", 2)
    child = fbox([0.0, 0.0], [0.1, 0.1])
    parent = fbox([0.0, 0.0], [0.3, 0.3])
    assert entailment_prob(FLOAT_OPS, space, child, parent, smoothed=False) == 1.0
    # reversed direction: parent only partially entails child
    rev = entailment_prob(FLOAT_OPS, space, parent, child, smoothed=False)
    assert rev == pytest.approx((0.2 / 0.6) ** 2, rel=1e-7)


def test_membership_grad_check_all_spaces():
    rng = rng_for(11, "memb-grad")
    for kind in ("box", "hyperplane", "hypercone"):
        d = 3
        space = SpaceConfig.make(kind, d)

        def f(ops, xs):
            n = space.raw_size
            if kind == "box":
                concept = materialize_box(ops, xs[:n])
            else:
                concept = xs[:n]
            point = xs[n:]
            return membership_log(ops, space, concept, point)

        for _ in range(10):
            if kind == "box":
                x0 = np.concatenate([rng.normal(0, 1, 2 * d), rng.uniform(-0.4, 0.4, d)])
            else:
                x0 = rng.normal(0, 1, 2 * d)
            err = grad_check(f, x0)
            assert err < 1e-4, f"{kind}: {err}"


def test_projection_embed_and_grads():
    store = ParamStore()
    space = SpaceConfig.make("box", 4)
    init_projection(store, "proj/object", 6, space, rng_for(0, "proj"))
    feats = rng_for(1, "feats").normal(size=6)

    out = embed_point(FLOAT_OPS, store, "proj/object", feats, space)
    assert all(-0.5 < v < 0.5 for v in out)

    # zero weights give the squash of zero: exactly the origin
    store["proj/object/w"][:] = 0.0
    store["proj/object/b"][:] = 0.0
    out0 = embed_point(FLOAT_OPS, store, "proj/object", feats, space)
    assert all(v == 0.0 for v in out0)

    with pytest.raises(ValueError):
        embed_point(FLOAT_OPS, store, "proj/object", feats[:3], space)


def test_projection_membership_grad_check_through_weights():
    space = SpaceConfig.make("box", 2)
    feats = [0.3, -0.7]

    def f(ops, xs):
        # first 2*2+2 handles: projection (w flattened row-major + b), rest: concept raw
        w = xs[:4]
        b = xs[4:6]
        raw = xs[6:]
        centers = [ops.squash(ops.affine(w[0:2], feats, b[0]), 1.0 - space.delta),
                   ops.squash(ops.affine(w[2:4], feats, b[1]), 1.0 - space.delta)]
        concept = materialize_box(ops, raw)
        return membership_log(ops, space, concept, centers)

    rng = rng_for(2, "proj-grad")
    for _ in range(10):
        x0 = np.concatenate([rng.normal(0, 0.8, 6), rng.normal(0, 1.0, 4)])
        assert grad_check(f, x0) < 1e-4


def test_registry_roundtrip_and_average_offset():
    store = ParamStore()
    space = SpaceConfig.make("box", 3)
    reg = ConceptRegistry(space, store, prefix="concept/obj")
    reg.add("red", raw_from_box(np.zeros(3), np.full(3, 0.1)).ravel())
    reg.add("blue", raw_from_box(np.full(3, 0.2), np.full(3, 0.3)).ravel())
    assert "red" in reg and "green" not in reg
    cen, off = reg.numeric_box("blue")
    assert np.allclose(cen, 0.2, atol=1e-9)
    avg = reg.average_offset()
    assert np.allclose(avg, 0.2, atol=1e-9)
    meta = reg.meta()
    reg2 = ConceptRegistry.from_meta(meta, store)
    assert reg2.names == ["red", "blue"]
    assert reg2.space == space


def test_numpy_mirrors_agree_with_scalar_path():
    rng = rng_for(5, "np-mirror")
    for kind in ("box", "hyperplane", "hypercone"):
        space = SpaceConfig.make(kind, 4)
        for _ in range(20):
            raw = rng.normal(size=space.raw_size)
            pts = rng.normal(size=(3, 4)) * (0.3 if kind == "box" else 1.0)
            if kind == "box":
                concept_np = np_box_from_raw(raw.reshape(2, 4))
                concept_sc = materialize_box(FLOAT_OPS, list(raw))
            else:
                concept_np = raw
                concept_sc = list(raw)
            got = np_membership_log(space, concept_np, pts)
            want = [membership_log(FLOAT_OPS, space, concept_sc, list(p)) for p in pts]
            assert np.allclose(got, want, rtol=1e-9, atol=1e-12)


def test_numpy_entailment_agrees():
    rng = rng_for(6, "np-ent")
    space = SpaceConfig.make("box", 3)
    for _ in range(20):
        r1 = rng.normal(size=(2, 3))
        r2 = rng.normal(size=(2, 3))
        child_np = np_box_from_raw(r1)
        parent_np = np_box_from_raw(r2)
        got = np_entailment_log(space, child_np, parent_np)
        want = FLOAT_OPS.value(
            box_log_conditional(FLOAT_OPS, materialize_box(FLOAT_OPS, list(r2.ravel())),
                                materialize_box(FLOAT_OPS, list(r1.ravel())), space.tau))
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


@given(st.lists(st.floats(-6, 6), min_size=8, max_size=8))
@settings(max_examples=100, deadline=None)
def test_feasibility_any_raw(raw):
    b = materialize_box(FLOAT_OPS, raw)
    for mn, mx in zip(b.mins, b.maxs):
        assert -0.5 < mn < mx < 0.5


@given(st.floats(-0.2, 0.2), st.floats(0.02, 0.2), st.floats(0.01, 0.1))
@settings(max_examples=60, deadline=None)
def test_joint_monotone_in_offset(center, offset, grow):
    a = fbox([0.0], [0.25])
    small = fbox([center], [offset])
    big = fbox([center], [offset + grow])
    j1 = box_log_joint(FLOAT_OPS, a, small, 0.2)
    j2 = box_log_joint(FLOAT_OPS, a, big, 0.2)
    assert j2 >= j1 - 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_membership_is_probability(seed):
    rng = np.random.default_rng(seed)
    kind = ("box", "hyperplane", "hypercone")[seed % 3]
    space = SpaceConfig.make(kind, 3)
    raw = rng.normal(size=space.raw_size)
    pt = list(rng.normal(size=3))
    if kind == "box":
        concept = materialize_box(FLOAT_OPS, list(raw))
        pt = [max(-0.49, min(0.49, v)) for v in pt]
    else:
        concept = list(raw)
        if all(abs(v) < 1e-6 for v in pt):
            pt[0] = 1.0
    p = membership_prob(FLOAT_OPS, space, concept, pt)
    assert 0.0 <= p <= 1.0
