import struct

import numpy as np
import pytest

from cyclereward.core.errors import ConfigError, DatasetError, MissingArtifactError
from cyclereward.schemas.common import ConditionKind
from cyclereward.services.data import (
    SceneSpec,
    Shape,
    ShapeKind,
    decode_dataset,
    encode_dataset,
    generate_dataset,
    rasterize,
    read_dataset,
    read_manifest,
    split,
    split_sizes,
    write_dataset,
    write_manifest,
)
from cyclereward.utils.io import read_pgm, to_gray8, write_pgm


def test_generation_is_deterministic():
    a = generate_dataset(5, 16, 16, ConditionKind.SEG_MASK, 4, seed=1)
    b = generate_dataset(5, 16, 16, ConditionKind.SEG_MASK, 4, seed=1)
    c = generate_dataset(5, 16, 16, ConditionKind.SEG_MASK, 4, seed=2)
    assert encode_dataset(a) == encode_dataset(b)
    assert encode_dataset(a) != encode_dataset(c)


def test_seg_samples_are_consistent(seg_data):
    for s in seg_data:
        assert s.x0.shape == (1, 16, 16) and s.c_v.shape == (16, 16)
        assert s.x0.min() >= -1.0 and s.x0.max() <= 1.0
        present = {int(c) for c in np.unique(s.c_v)} - {0}
        assert present <= {c for c in (1, 2, 3) if s.caption_id & (1 << (c - 1))}
        # background pixels keep the background intensity
        assert np.all(s.x0[0][s.c_v == 0] == -1.0)


def test_depth_condition_follows_intensity():
    ds = generate_dataset(3, 16, 16, ConditionKind.DEPTH_MAP, 4, seed=0)
    for s in ds:
        np.testing.assert_array_equal(s.c_v, (s.x0 + 1.0) * 0.5)


def test_binary_edge_condition_is_hard():
    ds = generate_dataset(3, 16, 16, ConditionKind.BINARY_EDGE, 4, seed=0)
    for s in ds:
        assert set(np.unique(s.c_v)) <= {0.0, 1.0}
        assert s.c_v.any()


def test_full_canvas_rectangle():
    rect = Shape(ShapeKind.RECTANGLE, 1, 0, -0.35, (0, 0, 16, 16))
    raster = rasterize(SceneSpec(16, 16, (rect,)))
    assert np.all(raster.classes == 1)
    assert np.all(raster.image == -0.35)


def test_scene_validation():
    with pytest.raises(DatasetError):
        SceneSpec(16, 16, (Shape(ShapeKind.RECTANGLE, 1, 0, 0.0, (0, 0, 17, 16)),))
    circle = Shape(ShapeKind.CIRCLE, 2, 0, 0.3, (8, 8, 4))
    with pytest.raises(DatasetError):
        SceneSpec(16, 16, (circle, Shape(ShapeKind.RECTANGLE, 1, 0, -0.35, (0, 0, 4, 4))))


def test_nearer_shape_is_painted_last():
    far = Shape(ShapeKind.RECTANGLE, 1, 0, -0.35, (2, 2, 12, 12))
    near = Shape(ShapeKind.CIRCLE, 2, 1, 0.3, (7, 7, 3))
    raster = rasterize(SceneSpec(16, 16, (near, far)))
    assert raster.classes[7, 7] == 2 and raster.classes[3, 3] == 1


@pytest.mark.parametrize("args, exc", [
    ((0, 16, 16), ConfigError),
    ((4, 15, 16), ConfigError),
])
def test_generation_argument_errors(args, exc):
    with pytest.raises(exc):
        generate_dataset(*args, ConditionKind.SEG_MASK, 4, seed=0)


def test_too_few_classes():
    with pytest.raises(DatasetError):
        generate_dataset(4, 16, 16, ConditionKind.SEG_MASK, 3, seed=0)


def test_file_round_trip(seg_data, tmp_path):
    path = write_dataset(tmp_path / "dataset.cnds", seg_data)
    loaded = read_dataset(path)
    assert encode_dataset(loaded) == path.read_bytes()
    assert loaded.kind == ConditionKind.SEG_MASK and loaded.num_classes == 4
    for a, b in zip(seg_data, loaded):
        assert np.array_equal(a.x0, b.x0) and np.array_equal(a.c_v, b.c_v) and a.caption_id == b.caption_id


def _patched(payload: bytes, offset: int, value: bytes) -> bytes:
    return payload[:offset] + value + payload[offset + len(value):]


def test_decode_errors(seg_data):
    payload = encode_dataset(seg_data)
    first_condition = 4 + 24 + 4 + 8 * 16 * 16
    bad = [
        b"NOPE" + payload[4:],
        payload[:-1],
        _patched(payload, 4, struct.pack("<I", 2)),
        _patched(payload, 20, struct.pack("<I", 9)),
        _patched(payload, first_condition, bytes([9])),
    ]
    for blob in bad:
        with pytest.raises(DatasetError):
            decode_dataset(blob)


def test_missing_dataset(tmp_path):
    with pytest.raises(MissingArtifactError):
        read_dataset(tmp_path / "absent.cnds")


def test_split_sizes():
    assert split_sizes(10, (0.8, 0.1, 0.1)) == [8, 1, 1]
    assert split_sizes(7, (0.5, 0.25, 0.25)) == [3, 2, 2]
    assert sum(split_sizes(401, (0.8, 0.1, 0.1))) == 401


def test_split_partitions_dataset():
    ds = generate_dataset(20, 16, 16, ConditionKind.SEG_MASK, 4, seed=5)
    parts = split(ds, (0.8, 0.1, 0.1), seed=5)
    assert [len(p) for p in parts] == [16, 2, 2]
    seen = sorted(i for p in parts for i in p.indices)
    assert seen == list(range(20))
    assert split(ds, (0.8, 0.1, 0.1), seed=5).test.indices == parts.test.indices
    with pytest.raises(ConfigError):
        split(ds, (0.5, 0.2, 0.2), seed=5)


def test_manifest(seg_data, tmp_path):
    parts = split(seg_data, (0.5, 0.25, 0.25), seed=0)
    path = write_manifest(tmp_path / "manifest.txt", seg_data, parts, seed=0)
    m = read_manifest(path)
    assert m["format"] == "CNDS" and m["n"] == "6" and m["kind"] == "seg_mask"
    assert [m[f"{name}.count"] for name in ("train", "val", "test")] == ["3", "2", "1"]
    assert len(m["sha256"]) == 64


def test_pgm_round_trip(tmp_path, rng):
    gray = to_gray8(rng.uniform(-1, 1, (5, 7)), -1.0, 1.0)
    assert np.array_equal(read_pgm(write_pgm(tmp_path / "a.pgm", gray)), gray)
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "b.pgm", gray.astype(np.float64))
    truncated = tmp_path / "c.pgm"
    truncated.write_bytes(b"P5\n7 5\n255\n" + bytes(10))
    with pytest.raises(ValueError):
        read_pgm(truncated)


def test_every_class_covers_a_share_of_pixels():
    ds = generate_dataset(500, 32, 32, ConditionKind.SEG_MASK, 4, seed=0)
    counts = np.bincount(np.concatenate([s.c_v.ravel() for s in ds]).astype(np.int64), minlength=4)
    assert len(counts) == 4
    assert (counts / counts.sum()).min() >= 0.05
