"""Checkpoint container format roundtrips."""

import json

import numpy as np
import pytest

from personaforge.checkpoint import load_checkpoint, save_checkpoint
from personaforge.errors import StoreError
from personaforge.tensor import Tensor


def test_roundtrip_preserves_values_and_shapes(tmp_path):
    rng = np.random.default_rng(0)
    named = {
        "layer.w": Tensor(rng.normal(size=(3, 4)), requires_grad=True),
        "layer.b": Tensor(rng.normal(size=4), requires_grad=True),
        "scalarish": Tensor(rng.normal(size=1)),
    }
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, named)
    loaded = load_checkpoint(path)
    assert set(loaded) == set(named)
    for name in named:
        assert loaded[name].shape == named[name].shape
        assert np.array_equal(loaded[name].data, named[name].data)
        assert loaded[name].requires_grad


def test_header_is_one_json_line_with_offsets(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"a": Tensor(np.ones((2, 2))), "b": Tensor(np.zeros(3))})
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        payload = fh.read()
    assert header["version"] == 1
    assert header["params"]["a"]["offset"] == 0
    assert header["params"]["b"]["offset"] == 32  # 4 float64s
    assert len(payload) == (4 + 3) * 8
    # payload is little-endian float64
    assert np.frombuffer(payload[:32], dtype="<f8").tolist() == [1.0] * 4


def test_float32_params_roundtrip_exactly(tmp_path):
    arr = np.random.default_rng(1).normal(size=(5,)).astype(np.float32)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"p": Tensor(arr)})
    back = load_checkpoint(path, dtype=np.float32)
    assert back["p"].data.dtype == np.float32
    assert np.array_equal(back["p"].data, arr)


def test_rejects_unknown_version(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"p": Tensor(np.ones(2))})
    raw = path.read_bytes()
    head, _, body = raw.partition(b"\n")
    doctored = json.loads(head)
    doctored["version"] = 99
    path.write_bytes(json.dumps(doctored).encode() + b"\n" + body)
    with pytest.raises(StoreError):
        load_checkpoint(path)


def test_rejects_truncated_payload(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, {"p": Tensor(np.ones(4))})
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(StoreError):
        load_checkpoint(path)
