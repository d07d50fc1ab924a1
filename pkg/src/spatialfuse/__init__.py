"""Multi-source spatial-knowledge fusion encoder and room-acoustics metrics."""

from .errors import SpatialFuseError
from .fusion import FusionConfig, fuse_pipeline, fuse_samples, init_params

__version__ = "0.1.0"

__all__ = ["SpatialFuseError", "FusionConfig", "fuse_pipeline", "fuse_samples", "init_params"]
