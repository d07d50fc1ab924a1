"""Parameter registry, initialization and the plain SGD update."""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping

import numpy as np

from ..errors import ShapeError
from .rng import Rng


class ParamStore(Mapping):
    """Ordered, name-unique collection of float64 matrices.

    Iteration follows registration order. Stored arrays are marked
    read-only; updates go through :func:`sgd_step`, which returns a new
    store.
    """

    def __init__(self, items=()):
        self._data: dict[str, np.ndarray] = {}
        for name, value in items:
            self.add(name, value)

    def add(self, name: str, value) -> None:
        if name in self._data:
            raise ValueError(f"duplicate parameter name {name!r}")
        a = np.array(value, dtype=np.float64)
        if a.ndim != 2:
            raise ShapeError(f"parameter {name!r} must be 2-D, got shape {a.shape}")
        a.flags.writeable = False
        self._data[name] = a

    def __getitem__(self, name: str) -> np.ndarray:
        return self._data[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def shapes(self) -> dict[str, tuple[int, int]]:
        return {k: v.shape for k, v in self._data.items()}

    def size(self) -> int:
        return sum(v.size for v in self._data.values())

    def replace(self, updates: Mapping[str, np.ndarray]) -> ParamStore:
        """Copy with some tensors swapped out; order is preserved."""
        return ParamStore((k, updates.get(k, v)) for k, v in self._data.items())

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self._data.items()}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}{v.shape}" for k, v in self._data.items())
        return f"ParamStore({inner})"


def glorot_init(rng: Rng, fan_in: int, fan_out: int) -> np.ndarray:
    """Glorot-uniform ``fan_in x fan_out`` matrix, filled row-major from ``rng``."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError(f"fan dimensions must be positive, got ({fan_in}, {fan_out})")
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform_array(fan_in * fan_out, -a, a).reshape(fan_in, fan_out)


def sgd_step(params: ParamStore, grads: Mapping[str, np.ndarray], lr: float) -> ParamStore:
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    updated = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, parameter has {value.shape}")
        updated[name] = value - lr * g
    return params.replace(updated)
