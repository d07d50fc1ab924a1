"""Dominant-supplement interaction and entropy-weighted dynamic fusion.

The model is written once, against the autodiff tape (``_graph``). The
public functions below wrap single stages for direct use on arrays; they
build a throwaway tape and return plain ``numpy`` values.

Shapes: features are ``1 x D`` matrices, or ``N x 1 x D`` stacks when a
batch of samples is pushed through together.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ShapeError
from .numerics import autodiff as ad
from .numerics.autodiff import Tape, Var
from .numerics.kernels import check_heads, softmax
from .numerics.params import ParamStore, glorot_init
from .numerics.rng import Rng
from .sources.position import DEFAULT_BANDS, DEFAULT_POOL, pooled_encoding

ATTN_BLOCKS = ("phi_sr", "phi_cr", "phi_sd", "phi_cd")
PROJ = ("W_Q", "W_K", "W_V", "W_O")
FUSED = ("rgb", "depth", "semantic")
ABLATABLE = ("rgb", "depth", "semantic", "position")


@dataclass(frozen=True)
class FusionConfig:
    dim: int = 512
    bands: int = DEFAULT_BANDS
    pool: int = DEFAULT_POOL
    heads: int = 4
    swap_interaction_labels: bool = False

    def __post_init__(self):
        if self.dim < 1 or self.bands < 1 or self.pool < 1:
            raise ValueError(f"dim, bands and pool must be positive: {self}")
        if self.pool > 4 * self.bands:
            raise ValueError(f"pool={self.pool} exceeds the {4 * self.bands}-long position encoding")
        check_heads(self.dim, self.heads)

    def to_json(self) -> dict:
        return asdict(self)


def param_shapes(cfg: FusionConfig) -> list[tuple[str, tuple[int, int]]]:
    """Canonical registry: position MLP, four interaction blocks, FC_R, FC_D, semantic MHA, head."""
    D, O = cfg.dim, cfg.pool
    shapes = [("pos.W1", (O, D)), ("pos.b1", (1, D)), ("pos.W2", (D, D)), ("pos.b2", (1, D))]
    for blk in ATTN_BLOCKS:
        shapes += [(f"{blk}.{w}", (D, D)) for w in PROJ]
    for fc in ("fc_r", "fc_d"):
        shapes += [(f"{fc}.W", (2 * D, D)), (f"{fc}.b", (1, D))]
    shapes += [(f"mha_s.{w}", (D, D)) for w in PROJ]
    shapes += [("head.W", (D, 1)), ("head.b", (1, 1))]
    return shapes


def init_params(cfg: FusionConfig, rng: Rng) -> ParamStore:
    """Glorot weights in registry order; biases start at zero and draw nothing."""
    store = ParamStore()
    for name, (r, c) in param_shapes(cfg):
        if name.rsplit(".", 1)[1].startswith("b"):
            store.add(name, np.zeros((r, c)))
        else:
            store.add(name, glorot_init(rng, r, c))
    return store


def _block(P, prefix: str) -> dict:
    return {w: P[f"{prefix}.{w}"] for w in PROJ}


# -- graph stages ------------------------------------------------------------

def _interaction(P, Fr: Var, Fd: Var, swap: bool) -> tuple[Var, Var]:
    """Returns ``(F'_R, F'_D)``."""
    rgb_side = Fr + ad.multi_head(_block(P, "phi_sr"), Fr, Fr, 1) + ad.multi_head(_block(P, "phi_cr"), Fr, Fd, 1)
    depth_side = Fd + ad.multi_head(_block(P, "phi_sd"), Fd, Fd, 1) + ad.multi_head(_block(P, "phi_cd"), Fd, Fr, 1)
    if swap:
        return rgb_side, depth_side
    # literal labelling: the RGB-based sum becomes F'_D and the depth-based sum F'_R
    return depth_side, rgb_side


def _position_enhanced(Fp: Var, Fv: Var, W: Var, b: Var) -> Var:
    scores = ad.matmul(ad.transpose(Fp), Fv)          # D x D, entry (i, j) = Fp_i * Fv_j
    S = ad.softmax(scores, "rows")                    # each column sums to one
    P = ad.matmul(Fv, S)                              # P_j = sum_i Fv_i S_ij
    return ad.softmax(ad.linear(ad.concat([Fv, P]), W, b), "cols")


def _entropy(V: Var) -> Var:
    p = ad.softmax(V, "cols")
    return -ad.sum_cols(p * ad.log_softmax(V, "cols"))


def _fuse(Vs: list[Var]) -> tuple[Var, Var, Var]:
    u = ad.concat([_entropy(V) for V in Vs])
    # exp(u_max - u_i) / sum_k exp(u_max - u_k) is softmax(-u); the max shift is inside softmax
    lam = ad.softmax(-u, "cols")
    # sum_i lam_i V_i written as V_0 + sum_{i>0} lam_i (V_i - V_0), equal since sum(lam) = 1;
    # equal inputs then reproduce V_0 bit for bit
    H = Vs[0]
    for i, V in enumerate(Vs[1:], start=1):
        H = H + ad.slice_cols(lam, i, i + 1) * (V - Vs[0])
    return H, u, lam


def _core(P, cfg: FusionConfig, Fr: Var, Fd: Var, Fs: Var, Fp: Var) -> dict[str, Var]:
    Fr_p, Fd_p = _interaction(P, Fr, Fd, cfg.swap_interaction_labels)
    Vr = _position_enhanced(Fp, Fr_p, P["fc_r.W"], P["fc_r.b"])
    Vd = _position_enhanced(Fp, Fd_p, P["fc_d.W"], P["fc_d.b"])
    Vs = ad.multi_head(_block(P, "mha_s"), Fs, Fr_p, cfg.heads)
    H, u, lam = _fuse([Vr, Vd, Vs])
    return {"F_P": Fp, "F_R_prime": Fr_p, "F_D_prime": Fd_p, "V_R": Vr, "V_D": Vd, "V_S": Vs,
            "u": u, "lambda": lam, "H": H}


def _graph(tape: Tape, P: dict[str, Var], cfg: FusionConfig, inputs: dict, zero=()) -> dict[str, Var]:
    def feat(key):
        v = inputs[key]
        return tape.constant(np.zeros_like(v) if key in zero else v)

    Fr, Fd, Fs = feat("rgb"), feat("depth"), feat("semantic")
    if "position" in zero:
        Fp = tape.constant(np.zeros(Fr.shape))
    else:
        h = ad.relu(ad.linear(tape.constant(inputs["pooled"]), P["pos.W1"], P["pos.b1"]))
        Fp = ad.linear(h, P["pos.W2"], P["pos.b2"])
    out = _core(P, cfg, Fr, Fd, Fs, Fp)
    out["y"] = ad.linear(out["H"], P["head.W"], P["head.b"])
    return out


# -- batching ----------------------------------------------------------------

def stack_inputs(samples, cfg: FusionConfig) -> dict[str, np.ndarray]:
    """Stack samples into ``N x 1 x D`` arrays plus the pooled position code."""
    for s in samples:
        if s.dim != cfg.dim:
            raise ShapeError(f"sample {s.id} has dim {s.dim}, model expects {cfg.dim}")
    return {
        "rgb": np.stack([s.rgb for s in samples]),
        "depth": np.stack([s.depth for s in samples]),
        "semantic": np.stack([s.semantic for s in samples]),
        "pooled": np.stack([pooled_encoding(s.position, cfg.bands, cfg.pool) for s in samples]),
    }


def forward_batch(params: ParamStore, cfg: FusionConfig, inputs: dict, zero=()) -> dict[str, np.ndarray]:
    tape = Tape()
    out = _graph(tape, tape.watch(params), cfg, inputs, zero)
    return {k: v.value for k, v in out.items()}


# -- public single-stage API -------------------------------------------------

def _check_vec(*vs) -> int:
    dims = set()
    for v in vs:
        if v.ndim != 2 or v.shape[0] != 1:
            raise ShapeError(f"expected a 1 x D feature, got shape {v.shape}")
        dims.add(v.shape[1])
    if len(dims) != 1:
        raise ShapeError(f"feature dims disagree: {sorted(dims)}")
    return dims.pop()


def _arr(v) -> np.ndarray:
    return np.asarray(getattr(v, "values", v), dtype=np.float64)


def rgb_depth_interaction(F_R, F_D, params, swap_interaction_labels: bool = False):
    """Self- plus cross-attention update; returns ``(F'_R, F'_D)``."""
    F_R, F_D = _arr(F_R), _arr(F_D)
    _check_vec(F_R, F_D)
    t = Tape()
    P = {k: t.constant(v) for k, v in params.items()}
    r, d = _interaction(P, t.constant(F_R), t.constant(F_D), swap_interaction_labels)
    return r.value, d.value


def position_enhanced(Fp, Fv, W, b) -> np.ndarray:
    """Position-weighted pooling of ``Fv`` followed by FC and softmax; returns 1 x D."""
    Fp, Fv = _arr(Fp), _arr(Fv)
    D = _check_vec(Fp, Fv)
    if np.shape(W) != (2 * D, D) or np.shape(b) != (1, D):
        raise ShapeError(f"FC block expects W {(2 * D, D)} and b {(1, D)}, got {np.shape(W)}, {np.shape(b)}")
    t = Tape()
    return _position_enhanced(t.constant(Fp), t.constant(Fv), t.constant(W), t.constant(b)).value


def position_pool(Fp, Fv) -> np.ndarray:
    """The attention-pooled term alone (before concatenation and FC)."""
    Fp, Fv = _arr(Fp), _arr(Fv)
    _check_vec(Fp, Fv)
    return Fv @ softmax(Fp.T @ Fv, "rows")


def rgb_semantic(F_S, F_R_prime, block, heads: int) -> np.ndarray:
    F_S, F_R_prime = _arr(F_S), _arr(F_R_prime)
    _check_vec(F_S, F_R_prime)
    t = Tape()
    blk = {k: t.constant(block[k]) for k in PROJ}
    return ad.multi_head(blk, t.constant(F_S), t.constant(F_R_prime), heads).value


def entropy(V) -> float:
    """Entropy in nats of ``softmax(V)``."""
    V = _arr(V).reshape(1, -1)
    t = Tape()
    return float(_entropy(t.constant(V)).value[0, 0])


def fusion_weights(u) -> np.ndarray:
    """``exp(u_max - u_i) / sum_k exp(u_max - u_k)``.

    Evaluated with the shift ``u_min`` in place of ``u_max``; the ratio is
    unchanged and the exponent stays non-positive, so spreads beyond ~709
    nats no longer overflow.
    """
    u = np.asarray(u, dtype=np.float64)
    e = np.exp(np.min(u) - u)
    return e / e.sum()


def dynamic_fuse(V_R, V_D, V_S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(H, u, lambda)`` with ``H = sum_i lambda_i V_i``."""
    vs = [_arr(v) for v in (V_R, V_D, V_S)]
    _check_vec(*vs)
    t = Tape()
    H, u, lam = _fuse([t.constant(v) for v in vs])
    return H.value, u.value.reshape(-1), lam.value.reshape(-1)


def toy_head_forward(H, W, b) -> float:
    H = _arr(H)
    D = _check_vec(H)
    if np.shape(W) != (D, 1) or np.size(b) != 1:
        raise ShapeError(f"head expects W {(D, 1)} and a scalar bias, got {np.shape(W)}, {np.shape(b)}")
    return float((H @ np.asarray(W) + np.asarray(b).reshape(1, 1))[0, 0])


@dataclass(frozen=True)
class FusionBundle:
    rgb: np.ndarray
    depth: np.ndarray
    semantic: np.ndarray
    position: np.ndarray  # F_P, 1 x D

    def __post_init__(self):
        _check_vec(*(_arr(v) for v in (self.rgb, self.depth, self.semantic, self.position)))


@dataclass(frozen=True)
class FusionOutput:
    H: np.ndarray
    V_R: np.ndarray
    V_D: np.ndarray
    V_S: np.ndarray
    u: np.ndarray
    lam: np.ndarray
    F_R_prime: np.ndarray
    F_D_prime: np.ndarray
    F_P: np.ndarray = field(repr=False, default=None)


def fuse_pipeline(bundle: FusionBundle, params: ParamStore, cfg: FusionConfig) -> FusionOutput:
    """Run interaction, position enhancement, semantic attention and fusion on one bundle.

    ``bundle.position`` is the already-computed F_P; see :func:`fuse_samples`
    for the path starting from speaker coordinates.
    """
    t = Tape()
    P = {k: t.constant(v) for k, v in params.items()}
    Fr, Fd, Fs, Fp = (t.constant(_arr(v)) for v in (bundle.rgb, bundle.depth, bundle.semantic, bundle.position))
    if Fr.shape[1] != cfg.dim:
        raise ShapeError(f"bundle dim {Fr.shape[1]} does not match config dim {cfg.dim}")
    out = {k: v.value for k, v in _core(P, cfg, Fr, Fd, Fs, Fp).items()}
    return output_from_batch({k: v[None] for k, v in out.items()}, 0)


def output_from_batch(out: dict[str, np.ndarray], i: int) -> FusionOutput:
    return FusionOutput(out["H"][i], out["V_R"][i], out["V_D"][i], out["V_S"][i], out["u"][i].reshape(-1),
                        out["lambda"][i].reshape(-1), out["F_R_prime"][i], out["F_D_prime"][i], out["F_P"][i])


def fuse_samples(samples, params: ParamStore, cfg: FusionConfig, zero=()) -> list[FusionOutput]:
    """Full pipeline from stored features and speaker coordinates."""
    out = forward_batch(params, cfg, stack_inputs(samples, cfg), zero)
    return [output_from_batch(out, i) for i in range(len(samples))]
