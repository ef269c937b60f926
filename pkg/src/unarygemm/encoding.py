"""Unary stream encodings: temporal pulse trains, the weight-2 pulse schedule,
and comparator-generated bipolar rate streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import BitWidth

__all__ = [
    "LowDiscrepancySequence",
    "RateStream",
    "TemporalStream",
    "TwoUnarySchedule",
    "counter_sequence",
    "decode_rate_bipolar",
    "encode_rate_bipolar",
    "encode_temporal",
    "encode_two_unary",
    "transition_count",
    "van_der_corput",
]


def transition_count(bits) -> int:
    """Number of 0<->1 transitions on a wire that idles at 0 before and after.

    11111000 -> 2, 1010 -> 4, all-zero -> 0.
    """
    arr = np.asarray(bits, dtype=np.int64).ravel()
    if arr.size == 0:
        return 0
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("bit sequence may only contain 0 and 1")
    padded = np.concatenate(([0], arr, [0]))
    return int(np.count_nonzero(np.diff(padded)))


@dataclass(frozen=True)
class TemporalStream:
    """Value |v| sent as `magnitude` consecutive ones, sign carried out of band."""

    magnitude: int
    sign: int
    capacity: int  # max magnitude the wire can carry, 2^(w-1)

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")
        if not 0 <= self.magnitude <= self.capacity:
            raise ValueError(f"magnitude {self.magnitude} outside [0, {self.capacity}]")

    @property
    def value(self) -> int:
        return self.sign * self.magnitude

    def materialize(self, length: int | None = None) -> np.ndarray:
        """Bits on the wire: `magnitude` ones then zeros (length defaults to capacity)."""
        n = self.capacity if length is None else length
        if n < self.magnitude:
            raise ValueError(f"length {n} cannot hold {self.magnitude} pulses")
        bits = np.zeros(n, dtype=np.uint8)
        bits[: self.magnitude] = 1
        return bits


def encode_temporal(value: int, width: BitWidth) -> TemporalStream:
    """Sign-magnitude temporal coding; zero encodes as an empty positive stream."""
    if not width.min_value <= value <= width.max_value:
        raise ValueError(f"{value} not representable in {width.bits} bits")
    sign = -1 if value < 0 else 1
    return TemporalStream(abs(value), sign, width.max_magnitude())


@dataclass(frozen=True)
class TwoUnarySchedule:
    """Temporal stream compressed to weight-2 pulses plus an optional weight-1 residual."""

    full_pulses: int
    has_residual: bool
    sign: int

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be -1 or +1, got {self.sign}")
        if self.full_pulses < 0:
            raise ValueError("full_pulses must be >= 0")

    @property
    def cycles(self) -> int:
        return self.full_pulses + (1 if self.has_residual else 0)

    @property
    def delivered_weight(self) -> int:
        """Signed value the schedule delivers: sign * (2*full_pulses + residual)."""
        return self.sign * (2 * self.full_pulses + (1 if self.has_residual else 0))

    def pulse_weights(self) -> list[int]:
        """Per-cycle unsigned pulse weights, e.g. magnitude 5 -> [2, 2, 1]."""
        weights = [2] * self.full_pulses
        if self.has_residual:
            weights.append(1)
        return weights


def encode_two_unary(value: int, width: BitWidth) -> TwoUnarySchedule:
    if not width.min_value <= value <= width.max_value:
        raise ValueError(f"{value} not representable in {width.bits} bits")
    m = abs(value)
    return TwoUnarySchedule(m // 2, bool(m % 2), -1 if value < 0 else 1)


@dataclass(frozen=True)
class LowDiscrepancySequence:
    """A permutation of [0, length) used as a comparator threshold schedule."""

    length: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.length < 1 or len(self.values) != self.length:
            raise ValueError("values must have exactly `length` entries")
        if sorted(self.values) != list(range(self.length)):
            raise ValueError("values must be a permutation of [0, length)")

    def rotated(self, offset: int) -> "LowDiscrepancySequence":
        """Time-shifted schedule: entry t becomes entry (t + offset) mod length."""
        off = offset % self.length
        return LowDiscrepancySequence(self.length, self.values[off:] + self.values[:off])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)


def _bit_reverse(value: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


def van_der_corput(width: BitWidth) -> LowDiscrepancySequence:
    """Bit-reversal permutation of [0, 2^w); the default comparator schedule."""
    n = width.stream_length
    return LowDiscrepancySequence(n, tuple(_bit_reverse(t, width.bits) for t in range(n)))


def counter_sequence(width: BitWidth) -> LowDiscrepancySequence:
    """The plain counter ramp 0..2^w-1: the bit-reversal schedule tapped with its
    counter bits reversed. Paired with van_der_corput it forms a 2-D low-discrepancy
    net, which keeps XNOR product error near the quantization floor."""
    return LowDiscrepancySequence(width.stream_length, tuple(range(width.stream_length)))


@dataclass(frozen=True, eq=False)
class RateStream:
    """Bipolar rate coding: value v maps to v + 2^(w-1) ones out of 2^w bits."""

    bits: np.ndarray
    source_value: int
    width: BitWidth

    def __post_init__(self) -> None:
        arr = np.array(self.bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size != self.width.stream_length:
            raise ValueError(f"stream must hold {self.width.stream_length} bits")
        if np.any(arr > 1):
            raise ValueError("stream bits must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def ones(self) -> int:
        return int(self.bits.sum())


def encode_rate_bipolar(
    value: int, width: BitWidth, sequence: LowDiscrepancySequence
) -> RateStream:
    """bit_t = 1 iff sequence[t] < value + 2^(w-1); exact by construction."""
    if not width.min_value <= value <= width.max_value:
        raise ValueError(f"{value} not representable in {width.bits} bits")
    if sequence.length != width.stream_length:
        raise ValueError(
            f"sequence length {sequence.length} != stream length {width.stream_length}"
        )
    threshold = value + width.max_magnitude()
    bits = (sequence.as_array() < threshold).astype(np.uint8)
    return RateStream(bits, value, width)


def decode_rate_bipolar(stream: RateStream) -> int:
    """Inverse of the bipolar map: ones - 2^(w-1)."""
    return stream.ones - stream.width.max_magnitude()
