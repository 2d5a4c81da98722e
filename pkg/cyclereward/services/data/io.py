# cyclereward/services/data/io.py
"""
CNDS dataset file:

  magic "CNDS" | u32 version | u32 n | u32 H | u32 W | u32 kind tag | u32 K
  per sample: u32 caption_id | f64 image[H*W] | condition
  condition is u8 classes[H*W] for seg_mask, f64 values[H*W] otherwise.
All integers and floats little-endian.
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from cyclereward.core.errors import DatasetError, MissingArtifactError
from cyclereward.schemas.common import ConditionKind
from cyclereward.services.data.dataset import ConditionedSample, Dataset, Split
from cyclereward.utils.io import atomic_write_bytes, atomic_write_text

MAGIC = b"CNDS"
VERSION = 1
_HEADER = struct.Struct("<6I")


def encode_dataset(ds: Dataset) -> bytes:
    out = [MAGIC, _HEADER.pack(VERSION, len(ds), ds.height, ds.width, ds.kind.tag, ds.num_classes)]
    for s in ds:
        out.append(struct.pack("<I", s.caption_id))
        out.append(np.ascontiguousarray(s.x0, dtype="<f8").tobytes())
        if ds.kind == ConditionKind.SEG_MASK:
            out.append(np.ascontiguousarray(s.c_v, dtype=np.uint8).tobytes())
        else:
            out.append(np.ascontiguousarray(s.c_v, dtype="<f8").tobytes())
    return b"".join(out)


def decode_dataset(payload: bytes, source: str = "<bytes>") -> Dataset:
    if payload[:4] != MAGIC:
        raise DatasetError(f"{source}: bad magic, not a CNDS dataset")
    if len(payload) < 4 + _HEADER.size:
        raise DatasetError(f"{source}: truncated header")
    version, n, h, w, tag, k = _HEADER.unpack_from(payload, 4)
    if version != VERSION:
        raise DatasetError(f"{source}: unsupported dataset version {version}")
    try:
        kind = ConditionKind.from_tag(tag)
    except ValueError as exc:
        raise DatasetError(f"{source}: {exc}") from exc
    px = h * w
    cond_bytes = px if kind == ConditionKind.SEG_MASK else 8 * px
    record = 4 + 8 * px + cond_bytes
    body = 4 + _HEADER.size
    if len(payload) != body + n * record:
        raise DatasetError(f"{source}: expected {body + n * record} bytes, found {len(payload)}")
    samples = []
    for i in range(n):
        off = body + i * record
        (caption_id,) = struct.unpack_from("<I", payload, off)
        x0 = np.frombuffer(payload, dtype="<f8", count=px, offset=off + 4).astype(np.float64).reshape(1, h, w)
        off += 4 + 8 * px
        if kind == ConditionKind.SEG_MASK:
            c_v = np.frombuffer(payload, dtype=np.uint8, count=px, offset=off).reshape(h, w).copy()
            if c_v.max(initial=0) >= k:
                raise DatasetError(f"{source}: sample {i} has a class index >= K={k}")
        else:
            c_v = np.frombuffer(payload, dtype="<f8", count=px, offset=off).astype(np.float64).reshape(1, h, w)
        samples.append(ConditionedSample(x0=x0, c_v=c_v, caption_id=int(caption_id), kind=kind))
    return Dataset(samples=samples, height=h, width=w, kind=kind, num_classes=k)


def write_dataset(path: str | Path, ds: Dataset) -> Path:
    return atomic_write_bytes(path, encode_dataset(ds))


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"dataset not found: {path}")
    return decode_dataset(path.read_bytes(), source=str(path))


def index_hash(indices) -> str:
    return hashlib.sha256(",".join(str(int(i)) for i in indices).encode("ascii")).hexdigest()


def write_manifest(path: str | Path, ds: Dataset, parts: Split, seed: int) -> Path:
    lines = [
        "format=CNDS",
        f"version={VERSION}",
        f"seed={seed}",
        f"n={len(ds)}",
        f"height={ds.height}",
        f"width={ds.width}",
        f"kind={ds.kind.value}",
        f"num_classes={ds.num_classes}",
        f"sha256={hashlib.sha256(encode_dataset(ds)).hexdigest()}",
    ]
    for name, part in zip(Split._fields, parts):
        lines.append(f"{name}.count={len(part)}")
        lines.append(f"{name}.sha256={index_hash(part.indices)}")
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"manifest not found: {path}")
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out
