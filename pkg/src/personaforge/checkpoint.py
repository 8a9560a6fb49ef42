"""Parameter checkpoint files.

Layout: one UTF-8 JSON header line terminated by ``\\n``, then a flat
payload of 64-bit little-endian floats. The header maps parameter names to
shapes and byte offsets within the payload:

    {"format": "personaforge-checkpoint", "version": 1,
     "params": {"name": {"shape": [64, 64], "offset": 0}, ...}}

Offsets are relative to the first payload byte. Values are always written
as float64 regardless of the in-memory training dtype; loading restores
the dtype the caller asks for.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import StoreError
from .tensor import Tensor

FORMAT_NAME = "personaforge-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(path, named: dict[str, Tensor]):
    """Write named tensors to `path` in the documented container format."""
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "params": {}}
    offset = 0
    blobs = []
    for name, t in named.items():
        arr = np.ascontiguousarray(t.data, dtype="<f8")
        header["params"][name] = {"shape": list(arr.shape), "offset": offset}
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path, dtype=np.float64) -> dict[str, Tensor]:
    """Read a checkpoint back into name -> Tensor (requires_grad=True)."""
    path = Path(path)
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StoreError(f"{path}: malformed checkpoint header: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise StoreError(f"{path}: not a {FORMAT_NAME} file")
    if header.get("version") != FORMAT_VERSION:
        raise StoreError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
    out = {}
    for name, meta in header["params"].items():
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = meta["offset"]
        end = start + count * 8
        if end > len(payload):
            raise StoreError(f"{path}: truncated payload for parameter {name!r}")
        arr = np.frombuffer(payload[start:end], dtype="<f8").reshape(shape)
        out[name] = Tensor(arr.astype(dtype, copy=True), requires_grad=True)
    return out
