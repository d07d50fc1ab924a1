"""Toy regression head training, ablation evaluation and parameter files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpatialFuseError
from .fusion import ABLATABLE, FUSED, FusionConfig, _graph, forward_batch, init_params, stack_inputs
from .numerics import autodiff as ad
from .numerics.autodiff import Tape
from .numerics.gradcheck import grad_check
from .numerics.params import ParamStore, sgd_step
from .numerics.rng import Rng
from .sources.samples import synth_samples
from .sources.tensorio import read_tensor, write_tensor
from .fileio import write_json
from .oracle import reference_mse


def _targets(samples) -> np.ndarray:
    t = []
    for s in samples:
        if isinstance(s.target, str):
            raise SpatialFuseError(f"sample {s.id}: toy training needs a numeric target, got {s.target!r}")
        t.append(float(s.target))
    return np.asarray(t).reshape(-1, 1, 1)


def mse_and_grads(params: ParamStore, cfg: FusionConfig, inputs, targets) -> tuple[float, dict]:
    tape = Tape()
    out = _graph(tape, tape.watch(params), cfg, inputs)
    loss = ad.mean(ad.square(out["y"] - targets))
    return float(loss.value), ad.backward(tape, loss)


def mse(params: ParamStore, cfg: FusionConfig, inputs, targets) -> float:
    y = forward_batch(params, cfg, inputs)["y"]
    return float(np.mean((y - targets) ** 2))


@dataclass
class TrainResult:
    params: ParamStore
    losses: list[float]  # losses[k] is the MSE after k updates

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def train_toy(samples, cfg: FusionConfig, steps: int, lr: float, seed: int) -> TrainResult:
    """Full-batch gradient descent on mean squared error.

    Parameters are initialized from ``seed``. ``lr = 0`` is accepted and
    leaves the parameters untouched.
    """
    if not samples:
        raise SpatialFuseError("cannot train on an empty manifest")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if lr < 0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    params = init_params(cfg, Rng(seed))
    inputs, targets = stack_inputs(samples, cfg), _targets(samples)
    losses = []
    for _ in range(steps):
        loss, grads = mse_and_grads(params, cfg, inputs, targets)
        losses.append(loss)
        if lr > 0:
            params = sgd_step(params, grads, lr)
    losses.append(mse(params, cfg, inputs, targets))
    return TrainResult(params, losses)


@dataclass
class EvalReport:
    mse: float
    n: int
    lambda_mean: dict[str, float]
    per_sample: list[tuple[str, float]]  # squared error per sample

    def to_json(self) -> dict:
        return {
            "mse": self.mse,
            "n": self.n,
            "lambda_mean": dict(self.lambda_mean),
            "per_sample": [{"id": sid, "err": err} for sid, err in self.per_sample],
        }


def evaluate(samples, params: ParamStore, cfg: FusionConfig, ablate: str | None = None) -> EvalReport:
    """Squared-error report; ``ablate`` zeroes one source before fusion."""
    if ablate is not None and ablate not in ABLATABLE:
        raise ValueError(f"unknown ablation {ablate!r}; expected one of {ABLATABLE}")
    if not samples:
        raise SpatialFuseError("cannot evaluate an empty manifest")
    inputs, targets = stack_inputs(samples, cfg), _targets(samples)
    out = forward_batch(params, cfg, inputs, () if ablate is None else (ablate,))
    err = ((out["y"] - targets) ** 2).reshape(-1)
    lam = out["lambda"].reshape(len(samples), 3).mean(axis=0)
    return EvalReport(float(err.mean()), len(samples), {k: float(v) for k, v in zip(FUSED, lam)},
                      [(s.id, float(e)) for s, e in zip(samples, err)])


def pipeline_gradcheck(seed: int, dim: int, eps: float = 1e-6, n_samples: int = 2,
                       cfg: FusionConfig | None = None) -> float:
    """Max relative error of the full-pipeline gradient against central differences.

    Parameters and a few synthetic samples are drawn from ``seed``; the loss
    is the toy-head MSE. The differences come from the independent
    reference forward pass run in extended precision.
    """
    cfg = cfg or FusionConfig(dim=dim, heads=4 if dim % 4 == 0 else 1)
    params = init_params(cfg, Rng(seed))
    samples = synth_samples(seed + 1, n_samples, dim)
    inputs, targets = stack_inputs(samples, cfg), _targets(samples)
    return grad_check(lambda p: reference_mse(p, cfg, inputs, targets),
                      lambda p: mse_and_grads(p, cfg, inputs, targets)[1],
                      params, eps, dtype=np.longdouble, batched=True)


# -- parameter directories ----------------------------------------------------

INDEX = "index.json"


def save_params(out_dir, params: ParamStore, cfg: FusionConfig) -> None:
    """One MSKT file per tensor plus an ``index.json`` mapping names to files."""
    out = Path(out_dir)
    entries = {}
    for pos, (name, value) in enumerate(params.items()):
        fname = f"{pos:02d}_{name}.mskt"
        write_tensor(out / fname, value)
        entries[name] = {"file": fname, "shape": list(value.shape), "position": pos}
    write_json(out / INDEX, {"config": cfg.to_json(), "params": entries})


def load_params(params_dir) -> tuple[ParamStore, FusionConfig]:
    root = Path(params_dir)
    index_path = root / INDEX
    if not index_path.is_file():
        raise SpatialFuseError(f"no parameter index at {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    cfg = FusionConfig(**index["config"])
    entries = sorted(index["params"].items(), key=lambda kv: kv[1]["position"])
    store = ParamStore()
    for name, meta in entries:
        value = read_tensor(root / meta["file"])
        if list(value.shape) != list(meta["shape"]):
            raise SpatialFuseError(f"parameter {name}: file shape {value.shape} != index shape {meta['shape']}")
        store.add(name, value)
    return store, cfg
