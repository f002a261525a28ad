"""Portable named-tensor container.

Layout, bit-exact:

    [8-byte little-endian unsigned N]
    [N bytes UTF-8 JSON: {name: {"dtype": "F32", "shape": [...],
                                 "data_offsets": [begin, end]}}]
    [raw little-endian float32 tensor bytes]

Data offsets are relative to the end of the header. Only "F32" is
supported. Writes are deterministic: names sorted, compact JSON, data laid
out in name order, so equal content yields equal bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import StorageError

_HEADER_LEN_BYTES = 8


def write_tensors(path: str | Path, tensors: dict[str, np.ndarray]) -> None:
    """Write a name -> float32 array mapping to `path`."""
    entries = {}
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype=np.float32, order="C")
        raw = arr.tobytes()  # C-order little-endian on all supported platforms
        entries[name] = {
            "dtype": "F32",
            "shape": list(arr.shape),
            "data_offsets": [offset, offset + len(raw)],
        }
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps(entries, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(len(header).to_bytes(_HEADER_LEN_BYTES, "little"))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def read_tensors(path: str | Path) -> dict[str, np.ndarray]:
    """Read a container back into a name -> float32 array mapping."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read tensor container {path}: {exc}") from exc
    if len(data) < _HEADER_LEN_BYTES:
        raise StorageError(f"{path}: truncated container (no header length)")
    header_len = int.from_bytes(data[:_HEADER_LEN_BYTES], "little")
    header_end = _HEADER_LEN_BYTES + header_len
    if len(data) < header_end:
        raise StorageError(f"{path}: truncated container header")
    try:
        entries = json.loads(data[_HEADER_LEN_BYTES:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise StorageError(f"{path}: malformed container header: {exc}") from exc
    if not isinstance(entries, dict):
        raise StorageError(f"{path}: container header is not an object")

    tensors: dict[str, np.ndarray] = {}
    payload = data[header_end:]
    for name, meta in entries.items():
        try:
            dtype = meta["dtype"]
            shape = tuple(int(s) for s in meta["shape"])
            begin, end = (int(o) for o in meta["data_offsets"])
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageError(f"{path}: bad entry for tensor '{name}'") from exc
        if dtype != "F32":
            raise StorageError(f"{path}: tensor '{name}' has unsupported dtype {dtype}")
        count = int(np.prod(shape)) if shape else 1
        if end - begin != count * 4 or begin < 0 or end > len(payload):
            raise StorageError(f"{path}: tensor '{name}' offsets inconsistent with shape")
        arr = np.frombuffer(payload[begin:end], dtype="<f4").reshape(shape)
        tensors[name] = arr.astype(np.float32, copy=True)
    return tensors
