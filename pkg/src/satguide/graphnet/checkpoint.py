"""Binary checkpoint format.

Layout (all integers little-endian)::

    magic      4 bytes  b"SGNN"
    version    u32      currently 1
    mode       u8       0 = mean aggregation, 1 = attention
    dim        u32
    iterations u32
    tensors    float32  in ``param_shapes`` order, C-contiguous
    crc32      u32      over every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .model import ModelParams, param_shapes

MAGIC = b"SGNN"
VERSION = 1
_HEADER = struct.Struct("<4sIBII")


class CheckpointError(ValueError):
    pass


def save_checkpoint(params: ModelParams) -> bytes:
    body = bytearray(_HEADER.pack(MAGIC, VERSION, int(params.attention), params.dim, params.iterations))
    for name in param_shapes(params.dim, params.attention):
        body += np.ascontiguousarray(params.tensors[name], dtype="<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(body))
    return bytes(body)


def load_checkpoint(data: bytes, attention: bool | None = None, dim: int | None = None) -> ModelParams:
    """Parse a checkpoint; ``attention``/``dim`` optionally guard the expected model."""
    if len(data) < _HEADER.size + 4:
        raise CheckpointError("checkpoint truncated")
    magic, version, mode, cdim, iterations = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if mode not in (0, 1):
        raise CheckpointError(f"unknown aggregation mode byte {mode}")
    if cdim < 1 or iterations < 1:
        raise CheckpointError("invalid dimensions in header")
    shapes = param_shapes(cdim, bool(mode))
    expected = _HEADER.size + 4 * sum(int(np.prod(s)) for s in shapes.values()) + 4
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "has trailing bytes"
        raise CheckpointError(f"checkpoint {kind}: {len(data)} bytes, expected {expected}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if crc != zlib.crc32(data[:-4]):
        raise CheckpointError("checksum mismatch")
    if attention is not None and bool(mode) != attention:
        have = "attention" if mode else "mean"
        want = "attention" if attention else "mean"
        raise CheckpointError(f"checkpoint uses {have} aggregation, {want} requested")
    if dim is not None and cdim != dim:
        raise CheckpointError(f"checkpoint dim {cdim} != expected {dim}")
    tensors = {}
    offset = _HEADER.size
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        tensors[name] = arr.astype(np.float32).reshape(shape)
        offset += 4 * count
    return ModelParams(cdim, iterations, bool(mode), tensors)


def write_checkpoint(params: ModelParams, path) -> None:
    Path(path).write_bytes(save_checkpoint(params))


def read_checkpoint(path, attention: bool | None = None) -> ModelParams:
    return load_checkpoint(Path(path).read_bytes(), attention=attention)
