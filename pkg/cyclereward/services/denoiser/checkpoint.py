# cyclereward/services/denoiser/checkpoint.py
"""
CNPP tensor container, shared by denoiser and extractor checkpoints.

  magic "CNPP" | u32 version | u32 count
  per tensor: u32 name_len | utf-8 name | u32 rank | u32 extents[rank] | f64 data (little-endian)
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from cyclereward.core.errors import DatasetError, MissingArtifactError
from cyclereward.services.autograd import Tensor
from cyclereward.services.denoiser.params import DenoiserParams
from cyclereward.utils.io import atomic_write_bytes

MAGIC = b"CNPP"
VERSION = 1


def encode_tensors(tensors: Mapping[str, Tensor]) -> bytes:
    out = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, t in tensors.items():
        raw = name.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
        out.append(struct.pack(f"<I{t.ndim}I", t.ndim, *t.shape))
        out.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    return b"".join(out)


def decode_tensors(payload: bytes, requires_grad: bool = False, source: str = "<bytes>") -> dict[str, Tensor]:
    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(payload):
            raise DatasetError(f"{source}: truncated checkpoint")
        chunk = payload[pos:pos + n]
        pos += n
        return chunk

    pos = 0
    if take(4) != MAGIC:
        raise DatasetError(f"{source}: bad magic, not a CNPP checkpoint")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise DatasetError(f"{source}: unsupported checkpoint version {version}")
    tensors: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(shape)) if rank else 1
        data = np.frombuffer(take(8 * n), dtype="<f8").astype(np.float64).reshape(shape)
        tensors[name] = Tensor.wrap(data, requires_grad=requires_grad)
    if pos != len(payload):
        raise DatasetError(f"{source}: {len(payload) - pos} trailing bytes")
    return tensors


def save_tensors(path: str | Path, tensors: Mapping[str, Tensor]) -> Path:
    return atomic_write_bytes(path, encode_tensors(tensors))


def load_tensors(path: str | Path, requires_grad: bool = False) -> dict[str, Tensor]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"checkpoint not found: {path}")
    return decode_tensors(path.read_bytes(), requires_grad=requires_grad, source=str(path))


def save_checkpoint(path: str | Path, params: DenoiserParams) -> Path:
    return save_tensors(path, dict(params.named()))


def load_checkpoint(path: str | Path) -> DenoiserParams:
    """All tensors come back trainable; callers freeze what they need."""
    try:
        return DenoiserParams.from_named(load_tensors(path, requires_grad=True))
    except KeyError as exc:
        raise DatasetError(f"{path}: {exc.args[0]}") from exc
