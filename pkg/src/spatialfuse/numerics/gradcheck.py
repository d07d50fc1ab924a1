"""Central finite-difference gradient verification."""

from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np

DENOM_FLOOR = 1e-12


def numeric_grad(f: Callable[[dict], float], params: Mapping[str, np.ndarray], eps: float = 1e-6, *,
                 dtype=np.float64, batched: bool = False) -> dict[str, np.ndarray]:
    """Central differences ``(f(p + eps) - f(p - eps)) / (2 eps)`` per coordinate.

    ``f`` receives a plain dict of arrays cast to ``dtype``. With
    ``batched=True`` it instead receives, for one tensor at a time, a stack
    of shape ``(2n, *shape)`` holding the n "+eps" copies followed by the n
    "-eps" copies, and must return the 2n losses.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    base = {k: np.asarray(v).astype(dtype) for k, v in params.items()}
    out = {}
    for name, value in base.items():
        n = value.size
        if batched:
            step = (np.eye(n, dtype=dtype) * dtype(eps)).reshape(n, *value.shape)
            losses = np.asarray(f({**base, name: np.concatenate([value + step, value - step])}))
            g = ((losses[:n] - losses[n:]) / (2 * dtype(eps))).reshape(value.shape)
        else:
            g = np.zeros_like(value)
            work = value.copy()
            for idx in np.ndindex(value.shape):
                orig = work[idx]
                work[idx] = orig + eps
                f_plus = f({**base, name: work})
                work[idx] = orig - eps
                f_minus = f({**base, name: work})
                work[idx] = orig
                g[idx] = (f_plus - f_minus) / (2.0 * eps)
        out[name] = g.astype(np.float64)
    return out


def max_relative_error(analytic: Mapping[str, np.ndarray], numeric: Mapping[str, np.ndarray]) -> float:
    """``max |a - n| / max(|a|, |n|, 1e-12)`` over every coordinate."""
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), DENOM_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def grad_check(f, grad_f: Callable[[Mapping], Mapping[str, np.ndarray]], params: Mapping[str, np.ndarray],
               eps: float = 1e-6, **fd_options) -> float:
    """Max relative error between ``grad_f(params)`` and central differences of ``f``.

    Comparing the result against a tolerance is the caller's job.
    """
    numeric = numeric_grad(f, params, eps, **fd_options)
    return max_relative_error(grad_f(params), numeric)
