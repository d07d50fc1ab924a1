"""MSKT tensor files.

Layout (all little-endian)::

    0..3   b"MSKT"
    4      version (1)
    5      rank (1 or 2)
    6..    rank x uint32 dims
    ...    row-major float32 payload

Single-row matrices are written as rank 1; rank-1 files read back as 1xN.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import (BadMagicError, DimOverflowError, TensorFormatError, TruncatedPayloadError,
                      UnsupportedRankError)
from ..fileio import atomic_write_bytes

MAGIC = b"MSKT"
VERSION = 1
MAX_PAYLOAD_BYTES = 2**32 - 1


def encode_tensor(m) -> bytes:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 2 and a.shape[0] == 1:
        a = a.reshape(-1)
    if a.ndim not in (1, 2):
        raise UnsupportedRankError(f"rank {a.ndim} tensors are not supported (rank must be 1 or 2)")
    if a.size == 0:
        raise TensorFormatError("cannot store an empty tensor")
    if not np.all(np.isfinite(a)):
        raise ValueError("cannot store non-finite values")
    with np.errstate(over="ignore"):
        f32 = a.astype("<f4")
    if not np.all(np.isfinite(f32)):
        raise ValueError("values overflow 32-bit float range")
    header = MAGIC + bytes([VERSION, a.ndim]) + struct.pack(f"<{a.ndim}I", *a.shape)
    return header + f32.tobytes(order="C")


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 6:
        raise TruncatedPayloadError("header truncated before version/rank bytes")
    version, rank = data[4], data[5]
    if version != VERSION:
        raise TensorFormatError(f"unsupported MSKT version {version}")
    if rank not in (1, 2):
        raise UnsupportedRankError(f"rank {rank} not supported (rank must be 1 or 2)")
    dims_end = 6 + 4 * rank
    if len(data) < dims_end:
        raise TruncatedPayloadError("header truncated inside the dimension list")
    dims = struct.unpack(f"<{rank}I", data[6:dims_end])
    if 0 in dims:
        raise TensorFormatError(f"zero-sized dimension in {dims}")
    count = 1
    for d in dims:
        count *= d
    nbytes = 4 * count
    if nbytes > MAX_PAYLOAD_BYTES:
        raise DimOverflowError(f"dims {dims} describe {nbytes} payload bytes, above the {MAX_PAYLOAD_BYTES} limit")
    payload = data[dims_end:]
    if len(payload) < nbytes:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, dims {dims} need {nbytes}")
    if len(payload) > nbytes:
        raise TensorFormatError(f"{len(payload) - nbytes} trailing bytes after payload")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    shape = (1, dims[0]) if rank == 1 else dims
    return values.reshape(shape)


def write_tensor(path, m) -> None:
    atomic_write_bytes(path, encode_tensor(m))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())
