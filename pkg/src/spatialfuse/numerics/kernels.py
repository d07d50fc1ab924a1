"""Dense float64 kernels: softmax, affine maps and attention.

Matrices are plain 2-D ``numpy.ndarray`` objects. The kernels also accept
a leading stack of sample axes (``(..., rows, cols)``) so the autodiff
layer can push a whole batch of 1xD features through in one call.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError

AXES = {"cols": -1, "rows": -2}


def _float(a) -> np.ndarray:
    """float64 unless already an extended float (kept for high-precision oracles)."""
    a = np.asarray(a)
    return a if a.dtype == np.longdouble else a.astype(np.float64, copy=False)


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name}: expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name}: non-finite entries")
    return a


def _axis(axis) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}") from None
    return int(axis)


def softmax(m, axis="cols") -> np.ndarray:
    """Numerically stable softmax.

    ``axis="cols"`` normalizes across the columns of each row (rows sum to
    one); ``axis="rows"`` normalizes down each column.
    """
    m = _float(m)
    ax = _axis(axis)
    z = m - np.max(m, axis=ax, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=ax, keepdims=True)


def log_softmax(m, axis="cols") -> np.ndarray:
    m = _float(m)
    ax = _axis(axis)
    z = m - np.max(m, axis=ax, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=ax, keepdims=True))


def linear_forward(W, b, x) -> np.ndarray:
    """Return ``x @ W + b`` with ``b`` broadcast over rows."""
    W, x, b = _float(W), _float(x), _float(b)
    if x.shape[-1] != W.shape[-2]:
        raise ShapeError(f"linear: x {x.shape} incompatible with W {W.shape}")
    if b.shape[-1] != W.shape[-1] or (b.ndim >= 2 and b.shape[-2] != 1):
        raise ShapeError(f"linear: bias {b.shape} does not broadcast over output (*, {W.shape[-1]})")
    return x @ W + b


def scaled_dot_attention(Q, K, V) -> np.ndarray:
    """``softmax(Q K^T / sqrt(d_k)) V`` with rows of the weight matrix summing to 1."""
    Q, K, V = _float(Q), _float(K), _float(V)
    if Q.shape[-1] != K.shape[-1]:
        raise ShapeError(f"attention: Q {Q.shape} and K {K.shape} differ in key dimension")
    if K.shape[-2] != V.shape[-2]:
        raise ShapeError(f"attention: K {K.shape} and V {V.shape} differ in sequence length")
    scores = Q @ np.swapaxes(K, -1, -2) / math.sqrt(Q.shape[-1])
    return softmax(scores, axis="cols") @ V


def multi_head_attention(p, q, kv, heads: int) -> np.ndarray:
    """Split-heads attention with output projection.

    ``p`` maps ``"W_Q"``, ``"W_K"``, ``"W_V"``, ``"W_O"`` to DxD matrices.
    """
    q, kv = _float(q), _float(kv)
    D = q.shape[-1]
    check_heads(D, heads)
    for key in ("W_Q", "W_K", "W_V", "W_O"):
        if np.shape(p[key])[-2:] != (D, D):
            raise ShapeError(f"attention: {key} has shape {np.shape(p[key])}, expected {(D, D)}")
    if kv.shape[-1] != D:
        raise ShapeError(f"attention: kv {kv.shape} does not match model dim {D}")
    Qp, Kp, Vp = q @ p["W_Q"], kv @ p["W_K"], kv @ p["W_V"]
    dk = D // heads
    parts = [
        scaled_dot_attention(Qp[..., h * dk:(h + 1) * dk],
                             Kp[..., h * dk:(h + 1) * dk],
                             Vp[..., h * dk:(h + 1) * dk])
        for h in range(heads)
    ]
    return np.concatenate(parts, axis=-1) @ p["W_O"]


def check_heads(D: int, heads: int) -> None:
    if heads < 1 or D % heads:
        raise ShapeError(f"model dim {D} is not divisible by heads={heads}")
