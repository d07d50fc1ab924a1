"""Materialized samples: loading from a manifest and synthetic fixtures."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ManifestError, ShapeError
from ..numerics.rng import Rng
from .manifest import SampleRecord, SpeakerPosition
from .tensorio import read_tensor, write_tensor

SOURCES = ("rgb", "depth", "semantic", "position")

# fixed so every source carries signal into the toy target
TARGET_COEF = {"rgb": 1.0, "depth": 0.7, "semantic": 0.5, "x": 0.3, "y": 0.3}


@dataclass(frozen=True)
class FeatureVec:
    values: np.ndarray  # 1 x D
    source: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source tag {self.source!r}")
        v = self.values
        if v.ndim != 2 or v.shape[0] != 1 or v.shape[1] < 1:
            raise ShapeError(f"{self.source} feature must be 1 x D, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{self.source} feature has non-finite entries")

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Sample:
    id: str
    rgb: np.ndarray
    depth: np.ndarray
    semantic: np.ndarray
    position: SpeakerPosition
    target: float | str

    @property
    def dim(self) -> int:
        return self.rgb.shape[1]


def toy_target(rgb, depth, semantic, x: float, y: float) -> float:
    c = TARGET_COEF
    return float(c["rgb"] * np.mean(rgb) + c["depth"] * np.mean(depth) + c["semantic"] * np.mean(semantic)
                 + c["x"] * x + c["y"] * y)


def _f32(a: np.ndarray) -> np.ndarray:
    return a.astype(np.float32).astype(np.float64)


def synth_sample(rng: Rng, dim: int, sample_id: str = "s0000") -> Sample:
    """Draw rgb, depth, semantic features in [-1, 1], then x, y in [0, 1].

    Features are rounded to float32 so the in-memory sample equals what an
    MSKT file stores.
    """
    if dim < 4:
        raise ValueError(f"feature dimension must be >= 4, got {dim}")
    rgb = _f32(rng.uniform_array(dim, -1.0, 1.0)).reshape(1, dim)
    depth = _f32(rng.uniform_array(dim, -1.0, 1.0)).reshape(1, dim)
    semantic = _f32(rng.uniform_array(dim, -1.0, 1.0)).reshape(1, dim)
    x, y = rng.uniform(), rng.uniform()
    return Sample(sample_id, rgb, depth, semantic, SpeakerPosition(x, y),
                  toy_target(rgb, depth, semantic, x, y))


def synth_samples(seed: int, count: int, dim: int) -> list[Sample]:
    rng = Rng(seed)
    return [synth_sample(rng, dim, f"s{i:04d}") for i in range(count)]


def load_sample(record: SampleRecord, base_dir=".") -> Sample:
    base = Path(base_dir)
    feats = {}
    for source, rel in (("rgb", record.rgb_feat), ("depth", record.depth_feat),
                        ("semantic", record.semantic_feat)):
        path = base / rel
        if not path.is_file():
            raise ManifestError(f"sample {record.id}: {source} feature file {rel} not found", record.id)
        feats[source] = FeatureVec(read_tensor(path), source)
    dims = {f.dim for f in feats.values()}
    if len(dims) != 1:
        raise ManifestError(f"sample {record.id}: feature dims differ ({sorted(dims)})", record.id)
    return Sample(record.id, feats["rgb"].values, feats["depth"].values, feats["semantic"].values,
                  record.speaker_xy, record.target)


def load_samples(records, base_dir=".") -> list[Sample]:
    samples = [load_sample(r, base_dir) for r in records]
    if len({s.dim for s in samples}) > 1:
        raise ManifestError("samples in one manifest must share a feature dimension")
    return samples


def write_sample(sample: Sample, out_dir, feat_subdir: str = "features") -> SampleRecord:
    """Store a sample's features as MSKT files and return its manifest record."""
    out = Path(out_dir)
    paths = {}
    for source in ("rgb", "depth", "semantic"):
        rel = f"{feat_subdir}/{sample.id}.{source}.mskt"
        write_tensor(out / rel, getattr(sample, source))
        paths[source] = rel
    return SampleRecord(sample.id, paths["rgb"], paths["depth"], paths["semantic"],
                        sample.position, sample.target)
