"""Minimal tape-based reverse-mode autodiff.

Each primitive records its output value, parent node ids and a closure
mapping the output gradient to parent gradients. Nodes are appended in
evaluation order, so the tape is topologically sorted by construction and
``backward`` is a single reverse sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import ShapeError
from . import kernels


@dataclass
class Node:
    value: np.ndarray
    parents: tuple[int, ...]
    vjp: Callable[[np.ndarray], Sequence[np.ndarray]] | None
    name: str | None = None


@dataclass
class Tape:
    nodes: list[Node] = field(default_factory=list)

    def _push(self, node: Node) -> Var:
        self.nodes.append(node)
        return Var(self, len(self.nodes) - 1)

    def leaf(self, value, name: str | None = None) -> Var:
        """Record an input. Named leaves receive gradients in ``backward``."""
        return self._push(Node(np.asarray(value, dtype=np.float64), (), None, name))

    def constant(self, value) -> Var:
        return self.leaf(value)

    def watch(self, params) -> dict[str, Var]:
        """Record every tensor of a ParamStore as a named leaf."""
        return {name: self.leaf(value, name) for name, value in params.items()}

    def record(self, value, parents: Sequence[Var], vjp) -> Var:
        return self._push(Node(value, tuple(p.id for p in parents), vjp))


class Var:
    __slots__ = ("tape", "id")

    def __init__(self, tape: Tape, id: int):
        self.tape = tape
        self.id = id

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.id].value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __add__(self, other):
        return add(self, _lift(self.tape, other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _lift(self.tape, other))

    def __rsub__(self, other):
        return sub(_lift(self.tape, other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, _lift(self.tape, other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, _lift(self.tape, other))

    def __repr__(self) -> str:
        return f"Var(id={self.id}, shape={self.shape})"


def _lift(tape: Tape, x) -> Var:
    return x if isinstance(x, Var) else tape.constant(x)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


# -- primitives ------------------------------------------------------------

def add(a: Var, b: Var) -> Var:
    sa, sb = a.shape, b.shape
    return a.tape.record(a.value + b.value, (a, b),
                         lambda g: (unbroadcast(g, sa), unbroadcast(g, sb)))


def sub(a: Var, b: Var) -> Var:
    sa, sb = a.shape, b.shape
    return a.tape.record(a.value - b.value, (a, b),
                         lambda g: (unbroadcast(g, sa), -unbroadcast(g, sb)))


def mul(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    return a.tape.record(av * bv, (a, b),
                         lambda g: (unbroadcast(g * bv, av.shape), unbroadcast(g * av, bv.shape)))


def scale(a: Var, c: float) -> Var:
    return a.tape.record(a.value * c, (a,), lambda g: (g * c,))


def matmul(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    if av.shape[-1] != bv.shape[-2]:
        raise ShapeError(f"matmul: {av.shape} @ {bv.shape}")

    def vjp(g):
        ga = g @ np.swapaxes(bv, -1, -2)
        gb = np.swapaxes(av, -1, -2) @ g
        return unbroadcast(ga, av.shape), unbroadcast(gb, bv.shape)

    return a.tape.record(av @ bv, (a, b), vjp)


def transpose(a: Var) -> Var:
    return a.tape.record(np.swapaxes(a.value, -1, -2), (a,),
                         lambda g: (np.swapaxes(g, -1, -2),))


def softmax(a: Var, axis="cols") -> Var:
    ax = kernels._axis(axis)
    s = kernels.softmax(a.value, ax)

    def vjp(g):
        return (s * (g - np.sum(g * s, axis=ax, keepdims=True)),)

    return a.tape.record(s, (a,), vjp)


def log_softmax(a: Var, axis="cols") -> Var:
    ax = kernels._axis(axis)
    out = kernels.log_softmax(a.value, ax)
    s = np.exp(out)
    return a.tape.record(out, (a,),
                         lambda g: (g - s * np.sum(g, axis=ax, keepdims=True),))


def relu(a: Var) -> Var:
    mask = a.value > 0
    return a.tape.record(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def concat(parts: Sequence[Var]) -> Var:
    """Concatenate along the last axis."""
    widths = [p.shape[-1] for p in parts]
    bounds = np.cumsum([0] + widths)
    out = np.concatenate([p.value for p in parts], axis=-1)

    def vjp(g):
        return tuple(g[..., bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return parts[0].tape.record(out, tuple(parts), vjp)


def slice_cols(a: Var, start: int, stop: int) -> Var:
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        full[..., start:stop] = g
        return (full,)

    return a.tape.record(a.value[..., start:stop], (a,), vjp)


def sum_cols(a: Var) -> Var:
    """Sum over the last axis, keeping it as width 1."""
    shape = a.shape
    return a.tape.record(np.sum(a.value, axis=-1, keepdims=True), (a,),
                         lambda g: (np.broadcast_to(g, shape).copy(),))


def total(a: Var) -> Var:
    """Sum of every entry, as a scalar node."""
    shape = a.shape
    return a.tape.record(np.asarray(a.value.sum()), (a,),
                         lambda g: (np.full(shape, float(g)),))


def mean(a: Var) -> Var:
    n = a.value.size
    return scale(total(a), 1.0 / n)


def square(a: Var) -> Var:
    av = a.value
    return a.tape.record(av * av, (a,), lambda g: (2.0 * av * g,))


# -- composite layers --------------------------------------------------------

def linear(x: Var, W: Var, b: Var | None = None) -> Var:
    if x.shape[-1] != W.shape[0]:
        raise ShapeError(f"linear: x {x.shape} incompatible with W {W.shape}")
    y = matmul(x, W)
    return y if b is None else add(y, b)


def attention(Q: Var, K: Var, V: Var) -> Var:
    scores = scale(matmul(Q, transpose(K)), 1.0 / math.sqrt(Q.shape[-1]))
    return matmul(softmax(scores, "cols"), V)


def multi_head(block: dict[str, Var], q: Var, kv: Var, heads: int) -> Var:
    D = q.shape[-1]
    kernels.check_heads(D, heads)
    Qp = matmul(q, block["W_Q"])
    Kp = matmul(kv, block["W_K"])
    Vp = matmul(kv, block["W_V"])
    if heads == 1:
        out = attention(Qp, Kp, Vp)
    else:
        dk = D // heads
        out = concat([
            attention(slice_cols(Qp, h * dk, (h + 1) * dk),
                      slice_cols(Kp, h * dk, (h + 1) * dk),
                      slice_cols(Vp, h * dk, (h + 1) * dk))
            for h in range(heads)
        ])
    return matmul(out, block["W_O"])


# -- reverse sweep -----------------------------------------------------------

def backward(tape: Tape, loss: Var) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``loss`` for every named leaf on ``tape``.

    Named leaves the loss does not reach get an all-zero gradient.
    """
    if loss.value.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.value)}
    for idx in range(loss.id, -1, -1):
        node = tape.nodes[idx]
        g = grads.get(idx)
        if g is None or node.vjp is None:
            continue
        for pid, pg in zip(node.parents, node.vjp(g)):
            if pid in grads:
                grads[pid] = grads[pid] + pg
            else:
                grads[pid] = pg
    out = {}
    for idx, node in enumerate(tape.nodes):
        if node.name is not None:
            out[node.name] = np.asarray(grads.get(idx, np.zeros_like(node.value)), dtype=np.float64)
    return out
