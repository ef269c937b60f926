"""Integer operand matrices and the exact GEMM reference every engine is checked against."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["BitWidth", "GemmShape", "Matrix", "exact_gemm", "random_matrix", "random_operands"]


@dataclass(frozen=True)
class BitWidth:
    """Two's-complement operand precision, 2..8 bits."""

    bits: int

    def __post_init__(self) -> None:
        if not isinstance(self.bits, int) or isinstance(self.bits, bool):
            raise ValueError(f"bit width must be an int, got {self.bits!r}")
        if not 2 <= self.bits <= 8:
            raise ValueError(f"bit width must be in [2, 8], got {self.bits}")

    @property
    def min_value(self) -> int:
        return -(1 << (self.bits - 1))

    @property
    def max_value(self) -> int:
        return (1 << (self.bits - 1)) - 1

    def max_magnitude(self) -> int:
        """Largest representable magnitude, 2^(bits-1); attained only by the most negative value."""
        return 1 << (self.bits - 1)

    @property
    def stream_length(self) -> int:
        """Length of a rate-coded bipolar stream for this width, 2^bits."""
        return 1 << self.bits


@dataclass(frozen=True)
class GemmShape:
    """Problem size for C[m x p] = A[m x n_common] @ B[n_common x p]."""

    m: int
    n_common: int
    p: int

    def __post_init__(self) -> None:
        for name, v in (("m", self.m), ("n_common", self.n_common), ("p", self.p)):
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{name} must be a positive int, got {v!r}")

    @property
    def a_shape(self) -> tuple[int, int]:
        return (self.m, self.n_common)

    @property
    def b_shape(self) -> tuple[int, int]:
        return (self.n_common, self.p)


@dataclass(frozen=True, eq=False)
class Matrix:
    """Row-major signed integer matrix.

    Operands carry a BitWidth and every element must lie in its two's-complement
    range. Results of a GEMM are held at full precision (width=None); they are
    never clipped or wrapped back to the operand width.
    """

    data: np.ndarray
    width: BitWidth | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=np.int64, order="C")
        if arr.ndim != 2:
            raise ValueError(f"matrix data must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix must have at least one row and column, got {arr.shape}")
        if self.width is not None:
            lo, hi = self.width.min_value, self.width.max_value
            if arr.min() < lo or arr.max() > hi:
                raise ValueError(
                    f"element out of range for {self.width.bits}-bit operands "
                    f"[{lo}, {hi}]: min={arr.min()}, max={arr.max()}"
                )
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def transposed(self) -> "Matrix":
        return Matrix(self.data.T.copy(), self.width)

    def checksum(self) -> str:
        """Deterministic digest of shape and little-endian element bytes."""
        h = hashlib.sha256()
        h.update(f"{self.rows}x{self.cols}:".encode())
        h.update(self.data.astype("<i8").tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.width == other.width and np.array_equal(self.data, other.data)


def _check_operands(a: Matrix, b: Matrix) -> None:
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: A is {a.rows}x{a.cols}, B is {b.rows}x{b.cols}")
    if a.width is None or b.width is None:
        raise ValueError("operands must carry a bit width (full-precision results are not operands)")
    if a.width != b.width:
        raise ValueError(f"width mismatch: A is {a.width.bits}-bit, B is {b.width.bits}-bit")


def exact_gemm(a: Matrix, b: Matrix) -> Matrix:
    """Reference product at full precision; ground truth for all engines."""
    _check_operands(a, b)
    # n * 2^(2w-2) <= 2^63 for every supported width and any realistic n,
    # so int64 accumulation cannot overflow.
    return Matrix(a.data @ b.data, width=None)


# Operand generation uses numpy's PCG64 so a seed pins the exact draw sequence.
def random_matrix(shape: tuple[int, int], width: BitWidth, seed: int) -> Matrix:
    """Uniform draw over the full two's-complement range, deterministic per seed."""
    rows, cols = shape
    gen = np.random.Generator(np.random.PCG64(seed))
    data = gen.integers(width.min_value, width.max_value + 1, size=(rows, cols), dtype=np.int64)
    return Matrix(data, width)


def random_operands(shape: GemmShape, width: BitWidth, seed: int) -> tuple[Matrix, Matrix]:
    """A and B drawn from a single seeded stream (A first, then B)."""
    gen = np.random.Generator(np.random.PCG64(seed))
    a = gen.integers(width.min_value, width.max_value + 1, size=shape.a_shape, dtype=np.int64)
    b = gen.integers(width.min_value, width.max_value + 1, size=shape.b_shape, dtype=np.int64)
    return Matrix(a, width), Matrix(b, width)
