# cyclereward/utils/io.py
"""Atomic artifact writers: every output goes to a temp file and is renamed into place."""
from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def atomic_write_bytes(path: str | Path, payload: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def format_float(x: float) -> str:
    # repr round-trips float64 exactly and is platform independent
    return repr(float(x))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, float) else ("" if v is None else v) for v in row])
    return atomic_write_text(path, buf.getvalue())


def to_gray8(a: np.ndarray, lo: float, hi: float) -> np.ndarray:
    scaled = (np.asarray(a, dtype=np.float64) - lo) / (hi - lo)
    return np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path: str | Path, gray: np.ndarray) -> Path:
    """Binary P5 greymap, maxval 255."""
    gray = np.asarray(gray)
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError(f"write_pgm expects a 2-D uint8 array, got {gray.dtype} {gray.shape}")
    h, w = gray.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return atomic_write_bytes(path, header + gray.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while end < len(raw) and not raw[end:end + 1].isspace():
            end += 1
        if end == pos:
            raise ValueError(f"{path}: truncated PGM header")
        fields.append(raw[pos:end])
        pos = end
    pos += 1   # exactly one whitespace byte before the raster
    if fields[0] != b"P5" or int(fields[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit binary PGM")
    w, h = int(fields[1]), int(fields[2])
    if len(raw) - pos < w * h:
        raise ValueError(f"{path}: truncated PGM raster")
    return np.frombuffer(raw[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
