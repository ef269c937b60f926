"""On-disk tensor bundles: a manifest.json plus one raw .bin blob per layer.

Blobs are little-endian, row-major, int8 or int32. This directory layout is the
only contract between weight exporters and the profiler; nothing else is shared.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["BundleError", "LayerRecord", "TensorBundle", "write_bundle"]

MANIFEST_NAME = "manifest.json"
ROLES = ("weight", "activation")
DTYPES = {"int8": ("<i1", 1), "int32": ("<i4", 4)}


class BundleError(ValueError):
    """Malformed bundle; the message names the offending layer where possible."""


@dataclass(frozen=True)
class LayerRecord:
    name: str
    role: str
    shape: tuple[int, ...]
    dtype: str
    data_path: str
    sha256: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise BundleError("layer name must be non-empty")
        if self.role not in ROLES:
            raise BundleError(f"layer {self.name!r}: role must be one of {ROLES}, got {self.role!r}")
        if self.dtype not in DTYPES:
            raise BundleError(
                f"layer {self.name!r}: dtype must be one of {tuple(DTYPES)}, got {self.dtype!r}"
            )
        if len(self.shape) < 1 or any((not isinstance(d, int)) or d < 1 for d in self.shape):
            raise BundleError(f"layer {self.name!r}: shape must be positive ints, got {self.shape}")

    @property
    def element_count(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n

    @property
    def byte_count(self) -> int:
        return self.element_count * DTYPES[self.dtype][1]


class TensorBundle:
    """Read access to a bundle directory; checksums are verified on every load."""

    def __init__(self, root: Path, layers: list[LayerRecord], meta: dict | None = None):
        self.root = Path(root)
        names = [l.name for l in layers]
        if len(set(names)) != len(names):
            raise BundleError("duplicate layer names in manifest")
        self.layers = list(layers)
        self.meta = dict(meta or {})

    @classmethod
    def load(cls, root: str | Path) -> "TensorBundle":
        root = Path(root)
        manifest_path = root / MANIFEST_NAME
        if not manifest_path.is_file():
            raise BundleError(f"no {MANIFEST_NAME} in {root}")
        try:
            raw = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as exc:
            raise BundleError(f"manifest is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict) or "layers" not in raw:
            raise BundleError("manifest must be an object with a 'layers' list")
        layers = []
        for entry in raw["layers"]:
            try:
                layers.append(
                    LayerRecord(
                        name=entry["name"],
                        role=entry["role"],
                        shape=tuple(int(d) for d in entry["shape"]),
                        dtype=entry["dtype"],
                        data_path=entry["data_path"],
                        sha256=entry.get("sha256"),
                    )
                )
            except KeyError as exc:
                raise BundleError(f"manifest layer entry missing field {exc}") from exc
        meta = {k: v for k, v in raw.items() if k != "layers"}
        return cls(root, layers, meta)

    def layer(self, name: str) -> LayerRecord:
        for rec in self.layers:
            if rec.name == name:
                return rec
        raise BundleError(f"no layer named {name!r} in bundle")

    def tensor(self, name: str) -> np.ndarray:
        rec = self.layer(name)
        path = self.root / rec.data_path
        if not path.is_file():
            raise BundleError(f"layer {name!r}: blob {rec.data_path} missing")
        blob = path.read_bytes()
        if len(blob) != rec.byte_count:
            raise BundleError(
                f"layer {name!r}: blob holds {len(blob)} bytes, manifest implies {rec.byte_count}"
            )
        if rec.sha256 is not None:
            digest = hashlib.sha256(blob).hexdigest()
            if digest != rec.sha256:
                raise BundleError(f"layer {name!r}: blob checksum mismatch")
        arr = np.frombuffer(blob, dtype=DTYPES[rec.dtype][0]).reshape(rec.shape)
        return arr.astype(np.int64)


def write_bundle(
    root: str | Path,
    tensors: list[tuple[str, str, np.ndarray]],
    meta: dict | None = None,
) -> TensorBundle:
    """Write (name, role, array) triples as a bundle; arrays must be int8/int32."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    for name, role, arr in tensors:
        arr = np.asarray(arr)
        if arr.dtype == np.int8:
            dtype, le = "int8", "<i1"
        elif arr.dtype == np.int32:
            dtype, le = "int32", "<i4"
        else:
            raise BundleError(f"layer {name!r}: dtype must be int8 or int32, got {arr.dtype}")
        blob = np.ascontiguousarray(arr).astype(le).tobytes()
        data_path = name.replace("/", "_").replace(".", "_") + ".bin"
        (root / data_path).write_bytes(blob)
        records.append(
            LayerRecord(
                name=name,
                role=role,
                shape=tuple(int(d) for d in arr.shape),
                dtype=dtype,
                data_path=data_path,
                sha256=hashlib.sha256(blob).hexdigest(),
            )
        )
    manifest = dict(meta or {})
    manifest["layers"] = [
        {
            "name": r.name,
            "role": r.role,
            "shape": list(r.shape),
            "dtype": r.dtype,
            "data_path": r.data_path,
            "sha256": r.sha256,
        }
        for r in records
    ]
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return TensorBundle(root, records, meta)
