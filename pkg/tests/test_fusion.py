import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from spatialfuse.errors import ShapeError
from spatialfuse.fusion import (ATTN_BLOCKS, PROJ, FusionBundle, FusionConfig, dynamic_fuse, entropy,
                                forward_batch, fuse_pipeline, fuse_samples, fusion_weights, init_params,
                                param_shapes, position_enhanced, position_pool, rgb_depth_interaction,
                                rgb_semantic, stack_inputs, toy_head_forward)
from spatialfuse.numerics import Rng
from spatialfuse.oracle import reference_outputs
from spatialfuse.sources import PositionEncoderParams, position_features, synth_samples

D = 16
CFG = FusionConfig(dim=D)


def _vec(seed, d=D, scale=1.0):
    return np.random.default_rng(seed).normal(scale=scale, size=(1, d))


def _params(seed=0, cfg=CFG):
    return init_params(cfg, Rng(seed))


def _identity_params(d=D):
    return {f"{b}.{w}": np.eye(d) for b in ATTN_BLOCKS for w in PROJ}


vectors = hnp.arrays(np.float64, (1, 8), elements=st.floats(-20, 20))


# -- config / registry -----------------------------------------------------------

def test_registry_order():
    names = [n for n, _ in param_shapes(CFG)]
    assert names[:4] == ["pos.W1", "pos.b1", "pos.W2", "pos.b2"]
    assert names[4:8] == ["phi_sr.W_Q", "phi_sr.W_K", "phi_sr.W_V", "phi_sr.W_O"]
    assert [n.split(".")[0] for n in names[4:20:4]] == list(ATTN_BLOCKS)
    assert names[20:24] == ["fc_r.W", "fc_r.b", "fc_d.W", "fc_d.b"]
    assert names[-2:] == ["head.W", "head.b"]
    assert list(_params()) == names


def test_init_shapes_and_biases():
    p = _params()
    for name, shape in param_shapes(CFG):
        assert p[name].shape == shape
    assert not p["fc_r.b"].any() and not p["head.b"].any()


def test_config_rejects_bad_heads():
    with pytest.raises(ValueError):
        FusionConfig(dim=10, heads=4)


# -- interaction ---------------------------------------------------------------

def test_interaction_residual_only_exposes_label_swap():
    p = dict(_params())
    for b in ATTN_BLOCKS:
        p[f"{b}.W_V"] = np.zeros((D, D))
        p[f"{b}.W_O"] = np.zeros((D, D))
    F_R, F_D = _vec(1), _vec(2)
    r, d = rgb_depth_interaction(F_R, F_D, p)
    np.testing.assert_array_equal(d, F_R)
    np.testing.assert_array_equal(r, F_D)
    r, d = rgb_depth_interaction(F_R, F_D, p, swap_interaction_labels=True)
    np.testing.assert_array_equal(r, F_R)
    np.testing.assert_array_equal(d, F_D)


def test_interaction_identity_projections_triple():
    f = _vec(3)
    r, d = rgb_depth_interaction(f, f, _identity_params())
    np.testing.assert_allclose(r, 3 * f, atol=1e-14)
    np.testing.assert_allclose(d, 3 * f, atol=1e-14)


def test_interaction_hand_algebra():
    # singleton attention returns the projected value row: Phi(q, kv) = kv W_V W_O
    p = _params(5)
    F_R, F_D = _vec(4), _vec(5)
    proj = lambda blk, kv: kv @ p[f"{blk}.W_V"] @ p[f"{blk}.W_O"]
    r, d = rgb_depth_interaction(F_R, F_D, p)
    np.testing.assert_allclose(d, F_R + proj("phi_sr", F_R) + proj("phi_cr", F_D), atol=1e-13)
    np.testing.assert_allclose(r, F_D + proj("phi_sd", F_D) + proj("phi_cd", F_R), atol=1e-13)
    assert r.shape == d.shape == (1, D)


def test_interaction_dim_mismatch():
    with pytest.raises(ShapeError):
        rgb_depth_interaction(_vec(1, 8), _vec(2, 16), _params())


# -- position enhancement -------------------------------------------------------

def test_position_pool_zero_position():
    np.testing.assert_allclose(position_pool(np.zeros((1, 2)), np.array([[1.0, 3.0]])), [[2.0, 2.0]], atol=1e-15)


def test_position_pool_hand_case():
    Fp, Fv = np.array([[1.0, -2.0]]), np.array([[0.5, 1.5]])
    P = np.zeros(2)
    for j in range(2):
        w = [math.exp(Fp[0, i] * Fv[0, j]) for i in range(2)]
        P[j] = sum(Fv[0, i] * w[i] for i in range(2)) / sum(w)
    np.testing.assert_allclose(position_pool(Fp, Fv)[0], P, atol=1e-15)


@given(vectors, vectors)
def test_position_pool_convex_bound(Fp, Fv):
    P = position_pool(Fp, Fv)
    assert np.all(P >= Fv.min() - 1e-12) and np.all(P <= Fv.max() + 1e-12)


@given(vectors, vectors, st.integers(0, 1000))
@settings(max_examples=50)
def test_position_enhanced_is_distribution(Fp, Fv, seed):
    rng = np.random.default_rng(seed)
    V = position_enhanced(Fp, Fv, rng.normal(size=(16, 8)), rng.normal(size=(1, 8)))
    assert np.all(V >= 0)
    assert abs(V.sum() - 1.0) <= 1e-12


def test_position_enhanced_hand_composition():
    rng = np.random.default_rng(7)
    Fp, Fv = _vec(8, 4), _vec(9, 4)
    W, b = rng.normal(size=(8, 4)), rng.normal(size=(1, 4))
    z = np.concatenate([Fv, position_pool(Fp, Fv)], axis=1) @ W + b
    e = np.exp(z - z.max())
    np.testing.assert_allclose(position_enhanced(Fp, Fv, W, b), e / e.sum(), atol=1e-15)


def test_position_enhanced_mismatch():
    with pytest.raises(ShapeError):
        position_enhanced(_vec(1, 4), _vec(2, 5), np.zeros((8, 4)), np.zeros((1, 4)))


# -- semantic attention -----------------------------------------------------------

def test_rgb_semantic_identity_returns_keys():
    block = {w: np.eye(D) for w in PROJ}
    F_R_prime = _vec(10)
    np.testing.assert_allclose(rgb_semantic(_vec(11), F_R_prime, block, 1), F_R_prime, atol=1e-15)


@pytest.mark.parametrize("heads", [1, 2, 4])
def test_rgb_semantic_shape_and_invariance(heads):
    p = _params(2)
    block = {w: p[f"mha_s.{w}"] for w in PROJ}
    F_R_prime = _vec(12)
    a = rgb_semantic(_vec(13), F_R_prime, block, heads)
    b = rgb_semantic(_vec(14, scale=50), F_R_prime, block, heads)
    assert a.shape == (1, D)
    np.testing.assert_allclose(a, b, atol=1e-13)
    np.testing.assert_allclose(a, F_R_prime @ block["W_V"] @ block["W_O"], atol=1e-13)


def test_rgb_semantic_heads_must_divide():
    block = {w: np.eye(6) for w in PROJ}
    with pytest.raises(ValueError):
        rgb_semantic(_vec(1, 6), _vec(2, 6), block, 4)


# -- entropy and weights ------------------------------------------------------------

def test_entropy_uniform():
    assert entropy(np.full((1, 4), 0.7)) == pytest.approx(math.log(4), abs=1e-15)


def test_entropy_peaked():
    z = math.exp(10) + 3
    p = [math.exp(10) / z] + [1 / z] * 3
    expect = -sum(q * math.log(q) for q in p)
    assert entropy(np.array([[10.0, 0, 0, 0]])) == pytest.approx(expect, rel=1e-12)
    # hand evaluation: 1.498e-3
    assert expect == pytest.approx(0.001498, abs=1e-6)


@given(hnp.arrays(np.float64, st.integers(1, 32).map(lambda d: (1, d)), elements=st.floats(-300, 300)))
def test_entropy_bounds(V):
    u = entropy(V)
    assert -1e-12 <= u <= math.log(V.shape[1]) + 1e-12


def test_weights_symmetric():
    np.testing.assert_allclose(fusion_weights([2.5, 2.5, 2.5]), [1 / 3] * 3, atol=1e-12)


def test_weights_hand_case():
    np.testing.assert_allclose(fusion_weights([0, math.log(4), math.log(4)]), [4 / 6, 1 / 6, 1 / 6], atol=1e-9)


@given(st.lists(st.floats(0, 10), min_size=3, max_size=3))
def test_weights_simplex_and_order(u):
    lam = fusion_weights(u)
    assert np.all(lam > 0)
    assert abs(lam.sum() - 1) <= 1e-12
    for i in range(3):
        for j in range(3):
            if u[i] < u[j]:
                assert lam[i] >= lam[j]
            if u[i] + 1e-9 < u[j]:
                assert lam[i] > lam[j]


# -- dynamic fusion -------------------------------------------------------------------

def test_fuse_equal_inputs_fixed_point():
    v = _vec(20)
    H, u, lam = dynamic_fuse(v, v, v)
    np.testing.assert_array_equal(H, v)
    np.testing.assert_allclose(lam, [1 / 3] * 3, atol=1e-12)


def test_fuse_lambda_matches_literal_formula():
    Vs = [_vec(21), _vec(22, scale=3), _vec(23, scale=0.1)]
    H, u, lam = dynamic_fuse(*Vs)
    np.testing.assert_allclose(u, [entropy(v) for v in Vs], atol=1e-15)
    np.testing.assert_allclose(lam, fusion_weights(u), atol=1e-15)
    np.testing.assert_allclose(H, sum(l * v for l, v in zip(lam, Vs)), atol=1e-15)


def test_fuse_forced_one_hot():
    # u = [0, huge, huge] drives the weights to [1, 0, 0]
    lam = fusion_weights([0.0, 1e3, 1e3])
    Vs = [_vec(24), _vec(25), _vec(26)]
    H = sum(l * v for l, v in zip(lam, Vs))
    np.testing.assert_allclose(H, Vs[0], atol=1e-9)


def test_fuse_peaked_vs_uniform_orders_weights():
    peaked = np.zeros((1, D))
    peaked[0, 0] = 40.0
    H, u, lam = dynamic_fuse(peaked, np.zeros((1, D)), np.zeros((1, D)))
    assert u[0] < 1e-12 and u[1] == pytest.approx(math.log(D))
    assert lam[0] > 0.85 and lam[1] == lam[2]


@given(vectors, vectors, vectors)
def test_fuse_convexity(a, b, c):
    H, u, lam = dynamic_fuse(a, b, c)
    stack = np.concatenate([a, b, c])
    assert np.all(H >= stack.min(axis=0) - 1e-9) and np.all(H <= stack.max(axis=0) + 1e-9)
    assert abs(lam.sum() - 1) <= 1e-12


def test_fuse_mismatch():
    with pytest.raises(ShapeError):
        dynamic_fuse(_vec(1, 4), _vec(2, 4), _vec(3, 5))


# -- toy head -------------------------------------------------------------------------

def test_head_zero_weights():
    assert toy_head_forward(_vec(1), np.zeros((D, 1)), [[0.75]]) == 0.75


def test_head_basis_vector():
    H = np.zeros((1, D))
    H[0, 0] = 1
    W = np.zeros((D, 1))
    W[0, 0] = 2
    assert toy_head_forward(H, W, [[0.0]]) == 2.0


@given(vectors, vectors)
def test_head_linearity(a, b):
    W = np.random.default_rng(0).normal(size=(8, 1))
    lhs = toy_head_forward(a + b, W, [[0.0]])
    assert lhs == pytest.approx(toy_head_forward(a, W, [[0.0]]) + toy_head_forward(b, W, [[0.0]]), abs=1e-9)


def test_head_mismatch():
    with pytest.raises(ShapeError):
        toy_head_forward(_vec(1), np.zeros((D + 1, 1)), [[0.0]])


# -- full pipeline ----------------------------------------------------------------------

def _bundle(seed):
    return FusionBundle(_vec(seed), _vec(seed + 1), _vec(seed + 2), _vec(seed + 3))


def test_pipeline_deterministic():
    p = _params(1)
    a, b = fuse_pipeline(_bundle(0), p, CFG), fuse_pipeline(_bundle(0), p, CFG)
    for field in ("H", "V_R", "V_D", "V_S", "u", "lam", "F_R_prime", "F_D_prime"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))


def test_pipeline_invariants_100_bundles():
    p = _params(3)
    for seed in range(100):
        o = fuse_pipeline(_bundle(10 * seed), p, CFG)
        assert np.all(o.lam > 0) and abs(o.lam.sum() - 1) <= 1e-12
        assert np.all(o.u >= -1e-12) and np.all(o.u <= math.log(D) + 1e-12)
        for V in (o.V_R, o.V_D):
            assert np.all(V >= 0) and abs(V.sum() - 1) <= 1e-12
        np.testing.assert_allclose(o.H, o.lam[0] * o.V_R + o.lam[1] * o.V_D + o.lam[2] * o.V_S, atol=1e-15)
        lo = np.minimum(np.minimum(o.V_R, o.V_D), o.V_S)
        hi = np.maximum(np.maximum(o.V_R, o.V_D), o.V_S)
        assert np.all(o.H >= lo - 1e-12) and np.all(o.H <= hi + 1e-12)
        order = np.argsort(o.u)
        assert np.all(np.diff(o.lam[order]) <= 0)


def test_pipeline_equals_stage_composition():
    p = _params(4)
    bundle = _bundle(40)
    o = fuse_pipeline(bundle, p, CFG)
    r, d = rgb_depth_interaction(bundle.rgb, bundle.depth, p)
    V_R = position_enhanced(bundle.position, r, p["fc_r.W"], p["fc_r.b"])
    V_D = position_enhanced(bundle.position, d, p["fc_d.W"], p["fc_d.b"])
    V_S = rgb_semantic(bundle.semantic, r, {w: p[f"mha_s.{w}"] for w in PROJ}, CFG.heads)
    H, u, lam = dynamic_fuse(V_R, V_D, V_S)
    np.testing.assert_allclose(o.F_R_prime, r, atol=1e-14)
    np.testing.assert_allclose(o.V_S, V_S, atol=1e-14)
    np.testing.assert_allclose(o.H, H, atol=1e-14)
    np.testing.assert_allclose(o.lam, lam, atol=1e-14)


def test_batched_forward_matches_reference_oracle():
    cfg = FusionConfig(dim=D)
    p = _params(6, cfg)
    samples = synth_samples(6, 5, D)
    inputs = stack_inputs(samples, cfg)
    got = forward_batch(p, cfg, inputs)
    ref = reference_outputs(p, cfg, inputs)
    for key in ("H", "V_R", "V_D", "V_S", "lambda", "y"):
        np.testing.assert_allclose(np.reshape(got[key], np.shape(ref[key])), ref[key], atol=1e-13, err_msg=key)


def test_fuse_samples_matches_single_bundle():
    p = _params(7)
    samples = synth_samples(8, 3, D)
    pos = PositionEncoderParams.from_store(p, CFG.bands)
    for s, o in zip(samples, fuse_samples(samples, p, CFG)):
        Fp = position_features(s.position, pos)
        np.testing.assert_allclose(o.F_P, Fp, atol=1e-14)
        single = fuse_pipeline(FusionBundle(s.rgb, s.depth, s.semantic, Fp), p, CFG)
        np.testing.assert_allclose(o.H, single.H, atol=1e-14)


def test_position_ablation_zeroes_fp():
    p = _params(7)
    samples = synth_samples(8, 2, D)
    for o in fuse_samples(samples, p, CFG, zero=("position",)):
        assert not o.F_P.any()


def test_pipeline_gradient_matches_fd():
    from spatialfuse.training import pipeline_gradcheck
    assert pipeline_gradcheck(42, D) <= 1e-5


def test_swap_flag_changes_pipeline():
    p = _params(9)
    a = fuse_pipeline(_bundle(90), p, CFG)
    b = fuse_pipeline(_bundle(90), p, FusionConfig(dim=D, swap_interaction_labels=True))
    np.testing.assert_allclose(a.F_R_prime, b.F_D_prime, atol=1e-15)
    assert not np.allclose(a.H, b.H)
