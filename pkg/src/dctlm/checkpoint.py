"""Versioned checkpoint container.

Layout::

    b"DCTLMCKP"            8-byte magic
    uint32 LE              format version
    uint64 LE              header length in bytes
    header                 UTF-8 JSON (sorted keys, compact)
    payload                little-endian raw tensors, back to back

The header lists every tensor as ``{"name", "dtype", "shape", "offset",
"nbytes"}`` (offsets relative to the payload start) plus an optional
``"meta"`` object (packing plans of coefficient vectors) and free-form run
metadata.  Identical content always serialises to identical bytes.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DCTLMCKP"
FORMAT_VERSION = 1
_DTYPES = {"float64": "<f8", "float32": "<f4", "int64": "<i8"}


class CheckpointError(ValueError):
    pass


def save(path, tensors: dict[str, np.ndarray], metadata: dict,
         tensor_meta: dict[str, dict] | None = None) -> None:
    tensor_meta = tensor_meta or {}
    entries, chunks, offset = [], [], 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name])
        kind = arr.dtype.name
        if kind not in _DTYPES:
            raise CheckpointError(f"tensor {name!r} has unsupported dtype {kind}")
        raw = np.ascontiguousarray(arr, dtype=_DTYPES[kind]).tobytes()
        entry = {"name": name, "dtype": kind, "shape": list(arr.shape),
                 "offset": offset, "nbytes": len(raw)}
        if name in tensor_meta:
            entry["meta"] = tensor_meta[name]
        entries.append(entry)
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"format_version": FORMAT_VERSION, "metadata": metadata,
                         "tensors": entries}, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", FORMAT_VERSION, len(header)))
        fh.write(header)
        for raw in chunks:
            fh.write(raw)
    os.replace(tmp, path)


def load(path) -> tuple[dict[str, np.ndarray], dict, dict[str, dict]]:
    """Return ``(tensors, metadata, tensor_meta)``."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[20:20 + hlen].decode("utf-8"))
    base = 20 + hlen
    tensors, meta = {}, {}
    for entry in header["tensors"]:
        start = base + entry["offset"]
        raw = data[start:start + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=_DTYPES[entry["dtype"]]).reshape(entry["shape"])
        tensors[entry["name"]] = arr.astype(entry["dtype"])
        if "meta" in entry:
            meta[entry["name"]] = entry["meta"]
    return tensors, header["metadata"], meta
