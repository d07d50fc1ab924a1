"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`SpatialFuseError`; the CLI maps these to exit code 1.
"""


class SpatialFuseError(Exception):
    """Base class for domain errors."""


class ShapeError(SpatialFuseError, ValueError):
    pass


class TensorFormatError(SpatialFuseError):
    """Malformed MSKT tensor file."""


class BadMagicError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


class UnsupportedRankError(TensorFormatError):
    pass


class DimOverflowError(TensorFormatError):
    pass


class ManifestError(SpatialFuseError):
    """Manifest entry rejected; ``sample_id`` names the offending entry."""

    def __init__(self, message: str, sample_id: str | None = None):
        super().__init__(message)
        self.sample_id = sample_id


class MissingFieldError(ManifestError):
    pass


class CoordinateRangeError(ManifestError):
    pass


class DuplicateIdError(ManifestError):
    pass


class WavError(SpatialFuseError):
    pass


class UnsupportedEncodingError(WavError):
    pass


class UnsupportedChannelsError(WavError):
    pass


class TruncatedWavError(WavError):
    pass


class SignalTooShortError(SpatialFuseError):
    pass


class SilentSignalError(SpatialFuseError):
    pass


class InsufficientDecayError(SpatialFuseError):
    pass


class DegenerateFitError(SpatialFuseError):
    pass
