"""Word- and bit-level sparsity metrics over tiled tensors.

Word sparsity is the fraction of exact zeros. Bit sparsity measures how far a
tile's bottleneck magnitude sits below full scale: each tile contributes
1 - max|v| / 2^(w-1), and a tensor scores the unweighted mean over its tiles.
For temporal pulse-train hardware that is exactly the fraction of worst-case
cycles the tile never occupies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import TensorBundle
from .matrix import BitWidth

__all__ = [
    "LayerSparsity",
    "SparsityReport",
    "TileSpec",
    "bit_sparsity",
    "column_tiles",
    "iter_tiles",
    "msb_truncate",
    "profile_bundle",
    "word_sparsity",
]

REPORT_CSV_HEADER = "layer,role,width,word_sparsity,bit_sparsity,tiles"


@dataclass(frozen=True)
class TileSpec:
    """How a tensor is cut into tiles before the per-tile bottleneck max.

    per_feature_map: one tile per index along axis 0 (output channels of a
    4-D convolution weight). block: br x bc tiles over a 2-D view, partial
    edge tiles included.
    """

    mode: str = "block"
    block_rows: int = 32
    block_cols: int = 32

    def __post_init__(self) -> None:
        if self.mode not in ("per_feature_map", "block"):
            raise ValueError(f"tile mode must be per_feature_map or block, got {self.mode!r}")
        if self.mode == "block" and (self.block_rows < 1 or self.block_cols < 1):
            raise ValueError("block tiles must be at least 1x1")

    @staticmethod
    def default_for(ndim: int) -> "TileSpec":
        return TileSpec("per_feature_map") if ndim == 4 else TileSpec("block")


def column_tiles(rows: int) -> TileSpec:
    """One tile per matrix column; the tiling a streamed operand sees per step."""
    return TileSpec("block", block_rows=rows, block_cols=1)


def iter_tiles(tensor: np.ndarray, spec: TileSpec) -> list[np.ndarray]:
    if tensor.size == 0:
        raise ValueError("cannot tile an empty tensor")
    if spec.mode == "per_feature_map":
        if tensor.ndim < 2:
            return [tensor]
        return [tensor[i] for i in range(tensor.shape[0])]
    # Block mode works on a 2-D view: leading axes are flattened.
    if tensor.ndim == 1:
        view = tensor.reshape(1, -1)
    elif tensor.ndim == 2:
        view = tensor
    else:
        view = tensor.reshape(-1, tensor.shape[-1])
    tiles = []
    for r in range(0, view.shape[0], spec.block_rows):
        for c in range(0, view.shape[1], spec.block_cols):
            tiles.append(view[r : r + spec.block_rows, c : c + spec.block_cols])
    return tiles


def word_sparsity(tensor: np.ndarray) -> float:
    """Fraction of elements that are exactly zero."""
    arr = np.asarray(tensor)
    if arr.size == 0:
        raise ValueError("cannot profile an empty tensor")
    return float(np.count_nonzero(arr == 0)) / arr.size


def bit_sparsity(tensor: np.ndarray, width: BitWidth, tiles: TileSpec | None = None) -> float:
    """Mean over tiles of 1 - max|v| / 2^(w-1); 1.0 when all zero, 0.0 at full scale."""
    arr = np.asarray(tensor, dtype=np.int64)
    if arr.size == 0:
        raise ValueError("cannot profile an empty tensor")
    if arr.min() < width.min_value or arr.max() > width.max_value:
        raise ValueError(
            f"values outside {width.bits}-bit range [{width.min_value}, {width.max_value}]"
        )
    spec = TileSpec.default_for(arr.ndim) if tiles is None else tiles
    full_scale = width.max_magnitude()
    fractions = [
        1.0 - int(np.abs(t).max()) / full_scale for t in iter_tiles(arr, spec)
    ]
    return float(np.mean(fractions))


def msb_truncate(tensor: np.ndarray, target_width: BitWidth) -> np.ndarray:
    """Keep the top `target_width` bits by arithmetic right shift; sign survives."""
    arr = np.asarray(tensor)
    if not np.issubdtype(arr.dtype, np.signedinteger):
        raise ValueError(f"expected a signed integer tensor, got dtype {arr.dtype}")
    source_bits = arr.dtype.itemsize * 8
    shift = source_bits - target_width.bits
    if shift < 0:
        raise ValueError(f"target width {target_width.bits} exceeds source width {source_bits}")
    return (arr.astype(np.int64)) >> shift


@dataclass(frozen=True)
class LayerSparsity:
    name: str
    role: str
    width: int
    word: float
    bit: float
    tiles: int

    def csv_row(self) -> str:
        return f"{self.name},{self.role},{self.width},{self.word:.6g},{self.bit:.6g},{self.tiles}"


@dataclass(frozen=True)
class SparsityReport:
    """Per-layer metrics plus the model aggregate (unweighted across layers)."""

    layers: list[LayerSparsity]
    width: int
    model_word: float
    model_bit: float
    weighted: bool = False

    def to_csv(self) -> str:
        rows = [REPORT_CSV_HEADER]
        rows += [l.csv_row() for l in self.layers]
        total_tiles = sum(l.tiles for l in self.layers)
        rows.append(
            f"(model),summary,{self.width},{self.model_word:.6g},{self.model_bit:.6g},{total_tiles}"
        )
        return "\n".join(rows) + "\n"

    def to_markdown(self) -> str:
        head = REPORT_CSV_HEADER.split(",")
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for l in self.layers:
            lines.append("| " + " | ".join(l.csv_row().split(",")) + " |")
        total_tiles = sum(l.tiles for l in self.layers)
        lines.append(
            f"| (model) | summary | {self.width} | {self.model_word:.6g} "
            f"| {self.model_bit:.6g} | {total_tiles} |"
        )
        return "\n".join(lines) + "\n"


def profile_bundle(
    bundle: TensorBundle,
    width: BitWidth,
    tiles: TileSpec | None = None,
    allow_truncate: bool = False,
    weighted: bool = False,
) -> SparsityReport:
    """Profile every layer at one width; layers are ordered by name.

    Layers stored wider than `width` require allow_truncate; both metrics are
    then computed on the truncated values.
    """
    if not bundle.layers:
        raise ValueError("bundle has no layers to profile")
    entries: list[LayerSparsity] = []
    weights: list[int] = []
    for rec in sorted(bundle.layers, key=lambda r: r.name):
        arr = bundle.tensor(rec.name)
        source_bits = 8 if rec.dtype == "int8" else 32
        if source_bits > width.bits:
            if not allow_truncate:
                raise ValueError(
                    f"layer {rec.name!r} is {rec.dtype} but profiling width is "
                    f"{width.bits}; enable truncation to proceed"
                )
            arr = msb_truncate(arr.astype(np.int32 if source_bits == 32 else np.int8), width)
        spec = TileSpec.default_for(arr.ndim) if tiles is None else tiles
        tile_list = iter_tiles(arr, spec)
        entries.append(
            LayerSparsity(
                name=rec.name,
                role=rec.role,
                width=width.bits,
                word=word_sparsity(arr),
                bit=bit_sparsity(arr, width, spec),
                tiles=len(tile_list),
            )
        )
        weights.append(arr.size)
    if weighted:
        total = sum(weights)
        model_word = sum(e.word * w for e, w in zip(entries, weights)) / total
        model_bit = sum(e.bit * w for e, w in zip(entries, weights)) / total
    else:
        model_word = float(np.mean([e.word for e in entries]))
        model_bit = float(np.mean([e.bit for e in entries]))
    return SparsityReport(entries, width.bits, model_word, model_bit, weighted)
