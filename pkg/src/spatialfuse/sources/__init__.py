from .manifest import SampleRecord, SpeakerPosition, load_manifest, parse_manifest, serialize_manifest
from .position import (PositionEncoderParams, adaptive_max_pool, encode_position_raw, pool_bins,
                       position_features)
from .samples import (FeatureVec, Sample, load_sample, load_samples, synth_sample, synth_samples, toy_target,
                      write_sample)
from .tensorio import decode_tensor, encode_tensor, read_tensor, write_tensor

__all__ = [
    "FeatureVec", "PositionEncoderParams", "Sample", "SampleRecord", "SpeakerPosition",
    "adaptive_max_pool", "decode_tensor", "encode_position_raw", "encode_tensor", "load_manifest",
    "load_sample", "load_samples", "parse_manifest", "pool_bins", "position_features", "read_tensor",
    "serialize_manifest", "synth_sample", "synth_samples", "toy_target", "write_sample", "write_tensor",
]
