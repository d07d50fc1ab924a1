"""splitmix64 generator.

Pure integer arithmetic, so the stream is identical on every platform.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_TWO_POW_M53 = 1.0 / (1 << 53)


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance ``state`` once and return ``(new_state, value)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, _mix(state)


class Rng:
    """Stateful wrapper around :func:`splitmix64_next`."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & MASK64

    def clone(self) -> Rng:
        return Rng(self.state)

    def next_u64(self) -> int:
        self.state, value = splitmix64_next(self.state)
        return value

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * _TWO_POW_M53

    def uniform_array(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = np.fromiter((self.uniform() for _ in range(n)), dtype=np.float64, count=n)
        return low + (high - low) * u
