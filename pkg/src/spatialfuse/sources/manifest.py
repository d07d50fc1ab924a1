"""Sample manifests: a JSON array of per-sample records."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from ..errors import CoordinateRangeError, DuplicateIdError, ManifestError, MissingFieldError

FIELDS = ("id", "rgb_feat", "depth_feat", "semantic_feat", "speaker_xy", "target")


@dataclass(frozen=True)
class SpeakerPosition:
    """Speaker location normalized by image width (x) and height (y)."""

    x: float
    y: float

    def __post_init__(self):
        for v in (self.x, self.y):
            if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 1.0):
                raise CoordinateRangeError(f"speaker position ({self.x}, {self.y}) outside [0, 1]^2")


@dataclass(frozen=True)
class SampleRecord:
    id: str
    rgb_feat: str
    depth_feat: str
    semantic_feat: str
    speaker_xy: SpeakerPosition
    target: float | str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "rgb_feat": self.rgb_feat,
            "depth_feat": self.depth_feat,
            "semantic_feat": self.semantic_feat,
            "speaker_xy": [self.speaker_xy.x, self.speaker_xy.y],
            "target": self.target,
        }


def _record(entry, index: int) -> SampleRecord:
    if not isinstance(entry, dict):
        raise ManifestError(f"entry #{index} is not an object", None)
    sid = entry.get("id")
    label = str(sid) if sid is not None else f"#{index}"
    for key in FIELDS:
        if key not in entry:
            raise MissingFieldError(f"sample {label}: missing field {key!r}", label)
    if not isinstance(sid, str) or not sid:
        raise ManifestError(f"sample {label}: id must be a non-empty string", label)
    for key in ("rgb_feat", "depth_feat", "semantic_feat"):
        if not isinstance(entry[key], str):
            raise ManifestError(f"sample {sid}: {key} must be a path string", sid)
    xy = entry["speaker_xy"]
    if (not isinstance(xy, list) or len(xy) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in xy)):
        raise ManifestError(f"sample {sid}: speaker_xy must be a pair of numbers", sid)
    try:
        pos = SpeakerPosition(float(xy[0]), float(xy[1]))
    except CoordinateRangeError:
        raise CoordinateRangeError(f"sample {sid}: speaker_xy {xy} outside [0, 1]^2", sid) from None
    target = entry["target"]
    if isinstance(target, bool) or not isinstance(target, (int, float, str)):
        raise ManifestError(f"sample {sid}: target must be a number or a WAV path", sid)
    if not isinstance(target, str):
        target = float(target)
    return SampleRecord(sid, entry["rgb_feat"], entry["depth_feat"], entry["semantic_feat"], pos, target)


def parse_manifest(text: str) -> list[SampleRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ManifestError("manifest must be a JSON array")
    records, seen = [], set()
    for i, entry in enumerate(data):
        rec = _record(entry, i)
        if rec.id in seen:
            raise DuplicateIdError(f"sample {rec.id}: duplicate id", rec.id)
        seen.add(rec.id)
        records.append(rec)
    return records


def serialize_manifest(records) -> str:
    return json.dumps([r.to_json() for r in records], indent=2) + "\n"


def load_manifest(path) -> tuple[list[SampleRecord], Path]:
    """Parse a manifest file; returns the records and the directory paths resolve against."""
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8")), path.parent
