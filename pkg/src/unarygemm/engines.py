"""Cycle-accurate functional models of four GEMM array designs.

Each engine computes C = A @ B on an m x p array of processing elements fed by
the n_common reduction dimension, and reports how many compute cycles the
schedule occupies plus a per-wire signal-transition statistic. Deterministic
designs (binary, serial temporal, hybrid) reproduce exact_gemm bit for bit;
the rate-coded design is an approximation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .encoding import van_der_corput
from .matrix import BitWidth, Matrix, _check_operands

__all__ = [
    "Design",
    "EngineResult",
    "SequenceConfig",
    "run_bgemm",
    "run_tubgemm",
    "run_tugemm_serial",
    "run_ugemm",
    "run_design",
    "worst_case_cycles",
]


class Design(enum.Enum):
    BGEMM = "bgemm"
    UGEMM = "ugemm"
    TUGEMM_SERIAL = "tugemm_serial"
    TUBGEMM = "tubgemm"

    @classmethod
    def parse(cls, name: str) -> "Design":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(d.value for d in cls)
            raise ValueError(f"unknown design {name!r}; expected one of: {valid}") from None


def worst_case_cycles(design: Design, width: BitWidth, n_common: int) -> int:
    """Compute cycles the schedule needs when every operand hits its worst value.

    bGEMM streams one rank-1 update per cycle: n_common. uGEMM always runs a full
    stream: 2^w, independent of n_common. The serial temporal design nests both
    pulse trains: n_common * (2^(w-1))^2. The hybrid halves the streamed train
    with weight-2 pulses: n_common * 2^(w-2).
    """
    if n_common < 1:
        raise ValueError(f"n_common must be >= 1, got {n_common}")
    if design is Design.BGEMM:
        return n_common
    if design is Design.UGEMM:
        return width.stream_length
    if design is Design.TUGEMM_SERIAL:
        return n_common * width.max_magnitude() ** 2
    if design is Design.TUBGEMM:
        return n_common * (width.max_magnitude() // 2)
    raise ValueError(f"unknown design {design!r}")


@dataclass(frozen=True)
class EngineResult:
    """Outcome of one simulated GEMM: result matrix, cycle count, wire statistics."""

    result: Matrix
    cycles: int
    wc_cycles: int
    max_transitions_per_wire: int
    design: Design

    def __post_init__(self) -> None:
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")
        if self.cycles > self.wc_cycles:
            raise ValueError(
                f"cycles {self.cycles} exceeds worst case {self.wc_cycles} for {self.design.value}"
            )


def _max_stream_transitions(bits: np.ndarray) -> int:
    """Max 0<->1 transition count over rows of a (streams x time) bit array, idle-low."""
    if bits.size == 0:
        return 0
    b = bits.astype(np.int8)
    pad = np.zeros((b.shape[0], 1), dtype=np.int8)
    padded = np.concatenate([pad, b, pad], axis=1)
    return int(np.abs(np.diff(padded, axis=1)).sum(axis=1).max())


def _binary_wire_bits(values: np.ndarray, width: BitWidth) -> np.ndarray:
    """Two's-complement bit-lines of a word sequence: (wires, steps) for one operand.

    values has shape (lanes, steps); each lane fans out into `width.bits` wires.
    """
    lanes, steps = values.shape
    shifts = np.arange(width.bits, dtype=np.int64).reshape(1, width.bits, 1)
    bits = (values.reshape(lanes, 1, steps) >> shifts) & 1
    return bits.reshape(lanes * width.bits, steps)


def run_bgemm(a: Matrix, b: Matrix) -> EngineResult:
    """Binary baseline: one rank-1 update per cycle, n_common cycles, exact."""
    _check_operands(a, b)
    n = a.cols
    acc = np.zeros((a.rows, b.cols), dtype=np.int64)
    for k in range(n):
        acc += np.outer(a.data[:, k], b.data[k, :])
    # Operand words are broadcast per step; count transitions on their bit-lines.
    wires = np.concatenate(
        [_binary_wire_bits(a.data, a.width), _binary_wire_bits(b.data.T, b.width)]
    )
    return EngineResult(
        result=Matrix(acc),
        cycles=n,
        wc_cycles=worst_case_cycles(Design.BGEMM, a.width, n),
        max_transitions_per_wire=_max_stream_transitions(wires),
        design=Design.BGEMM,
    )


def run_tubgemm(a: Matrix, b: Matrix) -> EngineResult:
    """Hybrid design: A temporally coded with weight-2 pulses, B kept binary.

    Step k runs ceil(max_i |a_ik| / 2) cycles; every PE in row i adds
    sign(a_ik) * pulse_weight * b_kj per pulse, which sums to a_ik * b_kj
    exactly. Zero-magnitude steps cost no cycles.
    """
    _check_operands(a, b)
    n = a.cols
    acc = np.zeros((a.rows, b.cols), dtype=np.int64)
    cycles = 0
    for k in range(n):
        col = a.data[:, k]
        mmax = int(np.abs(col).max())
        cycles += (mmax + 1) // 2
        if mmax:
            acc += np.outer(col, b.data[k, :])
    # Streamed pulse trains are single runs of ones: at most one rise and one fall.
    transitions = 2 if np.any(a.data != 0) else 0
    return EngineResult(
        result=Matrix(acc),
        cycles=cycles,
        wc_cycles=worst_case_cycles(Design.TUBGEMM, a.width, n),
        max_transitions_per_wire=transitions,
        design=Design.TUBGEMM,
    )


def run_tugemm_serial(a: Matrix, b: Matrix) -> EngineResult:
    """Serial temporal design: both operands pulse-coded, pulse trains nested.

    The array shares one schedule per step k: the a-train of the column
    bottleneck max_i |a_ik| nested with the b-train of max_j |b_kj|, so the step
    occupies (max_i |a_ik|) * (max_j |b_kj|) cycles. PE (i,j) gates itself on
    pulse pairs (p, q) with p < |a_ik| and q < |b_kj|, accumulating the sign
    product; the gated count is |a_ik|*|b_kj|, so the result is exact.
    """
    _check_operands(a, b)
    n = a.cols
    acc = np.zeros((a.rows, b.cols), dtype=np.int64)
    cycles = 0
    any_active_step = False
    for k in range(n):
        amax = int(np.abs(a.data[:, k]).max())
        bmax = int(np.abs(b.data[k, :]).max())
        step = amax * bmax
        cycles += step
        if step:
            any_active_step = True
            acc += np.outer(a.data[:, k], b.data[k, :])
    return EngineResult(
        result=Matrix(acc),
        cycles=cycles,
        wc_cycles=worst_case_cycles(Design.TUGEMM_SERIAL, a.width, n),
        max_transitions_per_wire=2 if any_active_step else 0,
        design=Design.TUGEMM_SERIAL,
    )


@dataclass(frozen=True)
class SequenceConfig:
    """Comparator schedule placement for the rate-coded design.

    A-streams compare against the bit-reversal schedule unrotated. B-streams tap
    the cycle counter with its bits reversed, which undoes the reversal and
    yields the plain ramp; the (bit-reversal, ramp) pair is a 2-D
    low-discrepancy net, so every XNOR product lands within a few quanta of the
    true product. The B-stream for step k, output column j is additionally
    rotated by (j + column_stride*k) to decorrelate lanes; `rotation` shifts all
    B-streams globally, and averaging results over rotation = 0..L-1 makes the
    product estimator exactly unbiased.
    """

    rotation: int = 0
    column_stride: int = 7

    def b_offsets(self, n_common: int, p: int, stream_length: int) -> np.ndarray:
        k = np.arange(n_common, dtype=np.int64).reshape(-1, 1)
        j = np.arange(p, dtype=np.int64).reshape(1, -1)
        return (j + self.column_stride * k + self.rotation) % stream_length


def run_ugemm(a: Matrix, b: Matrix, schedule: SequenceConfig | None = None) -> EngineResult:
    """Rate-coded bipolar design: XNOR products over 2^w-bit streams, approximate.

    Per cycle t each product lane XNORs its two stream bits; the adder tree sums
    the bipolar contributions (2*bit - 1) over the reduction dimension into a
    per-output accumulator. The final estimate is acc * 2^(w-2), an integer.
    """
    _check_operands(a, b)
    if schedule is None:
        schedule = SequenceConfig()
    width = a.width
    half = width.max_magnitude()
    L = width.stream_length
    seq = van_der_corput(width).as_array()

    # bit_t = [schedule[t] < v + 2^(w-1)]; A uses the unrotated bit-reversal
    # schedule, B the reversed-counter tap (the rotated ramp).
    thr_a = (a.data + half)[:, :, None]
    bits_a = seq[None, None, :] < thr_a

    offs = schedule.b_offsets(b.rows, b.cols, L)
    ramp = (np.arange(L, dtype=np.int64)[None, None, :] + offs[:, :, None]) % L
    thr_b = (b.data + half)[:, :, None]
    bits_b = ramp < thr_b

    # XNOR contribution (2x-1)(2y-1): dot product of the bipolar streams.
    sa = bits_a.astype(np.int64) * 2 - 1
    sb = bits_b.astype(np.int64) * 2 - 1
    m, n, p = a.rows, a.cols, b.cols
    acc = sa.reshape(m, n * L) @ sb.transpose(0, 2, 1).reshape(n * L, p)
    est = acc * (half // 2)

    transitions = max(
        _max_stream_transitions(bits_a.reshape(m * n, L)),
        _max_stream_transitions(bits_b.reshape(n * p, L)),
    )
    return EngineResult(
        result=Matrix(est),
        cycles=L,
        wc_cycles=worst_case_cycles(Design.UGEMM, width, n),
        max_transitions_per_wire=transitions,
        design=Design.UGEMM,
    )


_RUNNERS = {
    Design.BGEMM: run_bgemm,
    Design.UGEMM: run_ugemm,
    Design.TUGEMM_SERIAL: run_tugemm_serial,
    Design.TUBGEMM: run_tubgemm,
}


def run_design(design: Design, a: Matrix, b: Matrix, **kwargs) -> EngineResult:
    """Dispatch a simulation by design name."""
    return _RUNNERS[design](a, b, **kwargs)
