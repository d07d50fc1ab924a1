"""Speaker-position features: harmonic encoding, adaptive max pooling, MLP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..numerics.kernels import linear_forward
from .manifest import SpeakerPosition

DEFAULT_BANDS = 10
DEFAULT_POOL = 16


def encode_position_raw(pos: SpeakerPosition, bands: int = DEFAULT_BANDS) -> np.ndarray:
    """Length ``4 * bands`` vector.

    Band k contributes ``sin(2^k pi x), cos(2^k pi x), sin(2^k pi y), cos(2^k pi y)``.
    """
    if bands < 1:
        raise ValueError(f"bands must be >= 1, got {bands}")
    freq = np.pi * np.exp2(np.arange(bands, dtype=np.float64))
    ax, ay = freq * pos.x, freq * pos.y
    return np.stack([np.sin(ax), np.cos(ax), np.sin(ay), np.cos(ay)], axis=1).reshape(-1)


def pool_bins(n: int, out: int) -> list[tuple[int, int]]:
    """Half-open index ranges ``[floor(i n / O), floor((i+1) n / O))``."""
    if not 1 <= out <= n:
        raise ValueError(f"pool size must satisfy 1 <= O <= n, got O={out}, n={n}")
    return [(i * n // out, (i + 1) * n // out) for i in range(out)]


def adaptive_max_pool(v, out: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    return np.array([v[lo:hi].max() for lo, hi in pool_bins(v.size, out)])


@dataclass(frozen=True)
class PositionEncoderParams:
    bands: int
    W1: np.ndarray  # O x D
    b1: np.ndarray  # 1 x D
    W2: np.ndarray  # D x D
    b2: np.ndarray  # 1 x D

    @property
    def pool_out(self) -> int:
        return self.W1.shape[0]

    @property
    def dim(self) -> int:
        return self.W2.shape[1]

    def __post_init__(self):
        if self.bands < 1:
            raise ValueError("bands must be >= 1")
        if self.pool_out > 4 * self.bands:
            raise ShapeError(f"pool size {self.pool_out} exceeds encoding length {4 * self.bands}")
        D = self.W1.shape[1]
        if self.b1.shape != (1, D) or self.W2.shape != (D, D) or self.b2.shape != (1, D):
            raise ShapeError("position MLP shapes are inconsistent")

    @classmethod
    def from_store(cls, params, bands: int, prefix: str = "pos.") -> PositionEncoderParams:
        return cls(bands, *(params[prefix + k] for k in ("W1", "b1", "W2", "b2")))


def pooled_encoding(pos: SpeakerPosition, bands: int, pool_out: int) -> np.ndarray:
    """Parameter-free part of the position branch, shaped 1 x O."""
    return adaptive_max_pool(encode_position_raw(pos, bands), pool_out).reshape(1, -1)


def position_features(pos: SpeakerPosition, p: PositionEncoderParams) -> np.ndarray:
    """1 x D position feature: linear -> ReLU -> linear over the pooled encoding."""
    h = np.maximum(linear_forward(p.W1, p.b1, pooled_encoding(pos, p.bands, p.pool_out)), 0.0)
    return linear_forward(p.W2, p.b2, h)
