"""Reference forward pass used as the finite-difference oracle.

Written directly on the array kernels, with no tape, so it shares no
gradient code with :mod:`spatialfuse.fusion`. It is dtype-generic: fed
``np.longdouble`` parameters it runs in extended precision, which keeps
central-difference roundoff well below the gradients being checked.

Any parameter may carry one extra leading axis of perturbed copies; the
loss then comes back as one value per copy.
"""

from __future__ import annotations

import numpy as np

from .fusion import PROJ, FusionConfig
from .numerics.kernels import linear_forward, log_softmax, multi_head_attention, softmax


def _lift(P: dict) -> dict:
    # (K, r, c) -> (K, 1, r, c) so copies broadcast against (N, 1, D) samples
    return {k: (v[:, None] if v.ndim == 3 else v) for k, v in P.items()}


def _attend(P, prefix, q, kv, heads):
    return multi_head_attention({w: P[f"{prefix}.{w}"] for w in PROJ}, q, kv, heads)


def _enhance(Fp, Fv, W, b):
    S = softmax(np.swapaxes(Fp, -1, -2) @ Fv, "rows")
    pooled = Fv @ S
    Fv, pooled = np.broadcast_arrays(Fv, pooled)
    return softmax(linear_forward(W, b, np.concatenate([Fv, pooled], axis=-1)), "cols")


def reference_outputs(params, cfg: FusionConfig, inputs: dict) -> dict[str, np.ndarray]:
    P = _lift(dict(params))
    Fr, Fd, Fs = inputs["rgb"], inputs["depth"], inputs["semantic"]
    hidden = np.maximum(linear_forward(P["pos.W1"], P["pos.b1"], inputs["pooled"]), 0)
    Fp = linear_forward(P["pos.W2"], P["pos.b2"], hidden)

    from_rgb = Fr + _attend(P, "phi_sr", Fr, Fr, 1) + _attend(P, "phi_cr", Fr, Fd, 1)
    from_depth = Fd + _attend(P, "phi_sd", Fd, Fd, 1) + _attend(P, "phi_cd", Fd, Fr, 1)
    if cfg.swap_interaction_labels:
        Fr_p, Fd_p = from_rgb, from_depth
    else:
        Fr_p, Fd_p = from_depth, from_rgb

    V = [_enhance(Fp, Fr_p, P["fc_r.W"], P["fc_r.b"]),
         _enhance(Fp, Fd_p, P["fc_d.W"], P["fc_d.b"]),
         _attend(P, "mha_s", Fs, Fr_p, cfg.heads)]
    V = np.broadcast_arrays(*V)
    u = np.concatenate([-np.sum(softmax(v) * log_softmax(v), axis=-1, keepdims=True) for v in V], axis=-1)
    w = np.exp(np.max(u, axis=-1, keepdims=True) - u)
    lam = w / np.sum(w, axis=-1, keepdims=True)
    H = sum(lam[..., i:i + 1] * V[i] for i in range(3))
    y = linear_forward(P["head.W"], P["head.b"], H)
    return {"V_R": V[0], "V_D": V[1], "V_S": V[2], "u": u, "lambda": lam, "H": H, "y": y}


def reference_mse(params, cfg: FusionConfig, inputs: dict, targets: np.ndarray):
    """Toy-head MSE; a scalar, or one value per leading parameter copy."""
    y = reference_outputs(params, cfg, inputs)["y"]
    return np.mean((y - targets) ** 2, axis=(-3, -2, -1))
