import struct

import numpy as np
import pytest

from cyclereward.core.errors import DatasetError, MissingArtifactError
from cyclereward.services.autograd import Tensor
from cyclereward.services.denoiser import (
    decode_tensors,
    encode_tensors,
    freeze_base,
    load_checkpoint,
    save_checkpoint,
)
from cyclereward.services.rewards import init_segmenter, load_segmenter, save_segmenter


def test_checkpoint_round_trip_is_bit_exact(live_params, tmp_path):
    path = save_checkpoint(tmp_path / "model.cnpp", freeze_base(live_params))
    loaded = load_checkpoint(path)
    before, after = dict(live_params.named()), dict(loaded.named())
    assert list(before) == list(after)
    for name in before:
        assert before[name].data.tobytes() == after[name].data.tobytes()
        assert after[name].requires_grad
    assert path.read_bytes() == encode_tensors(dict(loaded.named()))


def test_header_layout():
    payload = encode_tensors({"w": Tensor.wrap(np.array([[1.0, 2.0, 3.0]]))})
    assert payload[:4] == b"CNPP"
    assert struct.unpack("<II", payload[4:12]) == (1, 1)
    # name_len, name, rank, extents, data
    assert struct.unpack("<I", payload[12:16]) == (1,)
    assert payload[16:17] == b"w"
    assert struct.unpack("<III", payload[17:29]) == (2, 1, 3)
    assert np.frombuffer(payload[29:], dtype="<f8").tolist() == [1.0, 2.0, 3.0]


def test_scalar_tensor_round_trip():
    out = decode_tensors(encode_tensors({"s": Tensor.wrap(np.array(2.5))}))
    assert out["s"].shape == () and out["s"].item() == 2.5


@pytest.mark.parametrize("mangle", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:-3],
    lambda b: b + b"\x00",
    lambda b: b[:4] + struct.pack("<I", 99) + b[8:],
])
def test_malformed_checkpoint_rejected(mangle):
    payload = encode_tensors({"a": Tensor.wrap(np.ones((2, 2)))})
    with pytest.raises(DatasetError):
        decode_tensors(mangle(payload))


def test_missing_checkpoint(tmp_path):
    with pytest.raises(MissingArtifactError):
        load_checkpoint(tmp_path / "nope.cnpp")


def test_foreign_names_rejected(tmp_path):
    path = tmp_path / "odd.cnpp"
    path.write_bytes(encode_tensors({"decoder.w": Tensor.wrap(np.ones(2))}))
    with pytest.raises(DatasetError):
        load_checkpoint(path)


def test_segmenter_round_trip(tmp_path):
    seg = init_segmenter(4, depth=2, hidden=3, seed=5)
    loaded = load_segmenter(save_segmenter(tmp_path / "seg.cnpp", seg))
    assert loaded.depth == 2 and loaded.num_classes == 4
    for name, t in seg.tensors.items():
        assert np.array_equal(loaded.tensors[name].data, t.data)
        assert not loaded.tensors[name].requires_grad
