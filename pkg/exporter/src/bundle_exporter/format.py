"""Writer for the tensor bundle directory layout.

A bundle is a directory holding `manifest.json` plus one raw `.bin` blob per
layer. The manifest is a JSON object whose `layers` list records, per layer:
name, role (weight | activation), shape, dtype (int8 | int32), data_path, and
the blob's sha256. Every other top-level key is free-form metadata. Blobs are
little-endian, row-major, with no header. This layout is the entire contract
with downstream profilers; nothing else is shared.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = ["ExportError", "manifest_digest", "write_bundle"]

MANIFEST_NAME = "manifest.json"
ROLES = ("weight", "activation")


class ExportError(ValueError):
    """Export refused; the message names the offending model or layer."""


def _blob_name(layer_name: str) -> str:
    return layer_name.replace("/", "_").replace(".", "_") + ".bin"


def write_bundle(
    root: str | Path,
    tensors: list[tuple[str, str, np.ndarray]],
    meta: dict | None = None,
) -> Path:
    """Write (name, role, int8|int32 array) triples; returns the bundle root.

    Values are stored verbatim: no rescaling, no re-quantization. The manifest
    is serialized with sorted keys so a repeated export of identical tensors
    produces byte-identical output.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    seen: set[str] = set()
    layers = []
    for name, role, arr in tensors:
        if name in seen:
            raise ExportError(f"duplicate layer name {name!r}")
        seen.add(name)
        if role not in ROLES:
            raise ExportError(f"layer {name!r}: role must be one of {ROLES}, got {role!r}")
        arr = np.asarray(arr)
        if arr.dtype == np.int8:
            dtype, le = "int8", "<i1"
        elif arr.dtype == np.int32:
            dtype, le = "int32", "<i4"
        else:
            raise ExportError(
                f"layer {name!r}: bundles store int8 or int32, got {arr.dtype}"
            )
        if arr.ndim < 1 or arr.size == 0:
            raise ExportError(f"layer {name!r}: tensor must be non-empty")
        blob = np.ascontiguousarray(arr).astype(le).tobytes()
        data_path = _blob_name(name)
        (root / data_path).write_bytes(blob)
        layers.append({
            "name": name,
            "role": role,
            "shape": list(arr.shape),
            "dtype": dtype,
            "data_path": data_path,
            "sha256": hashlib.sha256(blob).hexdigest(),
        })
    if not layers:
        raise ExportError("nothing to export: no layers matched")
    manifest = dict(meta or {})
    manifest["layers"] = layers
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return root


def manifest_digest(root: str | Path) -> str:
    """sha256 of the manifest bytes; stable across identical re-exports."""
    return hashlib.sha256((Path(root) / MANIFEST_NAME).read_bytes()).hexdigest()
