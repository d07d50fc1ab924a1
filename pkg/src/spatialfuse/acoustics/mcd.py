"""Mel cepstral distortion with optional DTW alignment."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError

MCD_SCALE = 10.0 / math.log(10.0) * math.sqrt(2.0)


def _check(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.atleast_2d(np.asarray(a, dtype=np.float64)), np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("cepstral sequences must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"coefficient counts differ: {a.shape[1]} vs {b.shape[1]}")
    return a, b


def frame_distances(a, b) -> np.ndarray:
    """Pairwise Euclidean distances, ``len(a) x len(b)``."""
    return np.sqrt(np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=-1))


def dtw_align(a, b) -> tuple[list[tuple[int, int]], float]:
    """Minimum summed-distance monotone alignment.

    Steps are (1,1), (1,0), (0,1); on ties the traceback prefers the
    diagonal, then (1,0). Returns ``(path, cost)`` with the path running
    from (0, 0) to (n-1, m-1).
    """
    a, b = _check(a, b)
    dist = frame_distances(a, b)
    n, m = dist.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc[i, j] = dist[i - 1, j - 1] + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
    path = [(n - 1, m - 1)]
    i, j = n, m
    while (i, j) != (1, 1):
        # candidate predecessors in tie-break order: diagonal, (1,0), (0,1)
        options = ((acc[i - 1, j - 1], i - 1, j - 1), (acc[i - 1, j], i - 1, j), (acc[i, j - 1], i, j - 1))
        best = min(c for c, _, _ in options)
        _, i, j = next(o for o in options if o[0] == best)
        path.append((i - 1, j - 1))
    path.reverse()
    return path, float(acc[n, m])


def mcd(pred, target, use_dtw: bool = True) -> float:
    """Mean per-frame ``(10 / ln 10) * sqrt(2 * sum_k (c_k - c'_k)^2)`` in dB."""
    a, b = _check(pred, target)
    if use_dtw:
        path, _ = dtw_align(a, b)
        ia, ib = np.array(path).T
    else:
        k = min(a.shape[0], b.shape[0])
        ia = ib = np.arange(k)
    d = MCD_SCALE * np.sqrt(np.sum((a[ia] - b[ib]) ** 2, axis=1))
    return float(d.mean())
