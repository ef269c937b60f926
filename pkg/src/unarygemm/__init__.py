"""Cycle-accurate simulation and cost analysis for unary, binary, and hybrid GEMM arrays."""

from .bundle import BundleError, LayerRecord, TensorBundle, write_bundle
from .costmodel import (
    CalibrationTable,
    CostReport,
    check_published_cells,
    cost_report,
    dynamic_latency,
    sparsity_energy_series,
)
from .encoding import (
    LowDiscrepancySequence,
    RateStream,
    TemporalStream,
    TwoUnarySchedule,
    counter_sequence,
    decode_rate_bipolar,
    encode_rate_bipolar,
    encode_temporal,
    encode_two_unary,
    transition_count,
    van_der_corput,
)
from .engines import (
    Design,
    EngineResult,
    SequenceConfig,
    run_bgemm,
    run_design,
    run_tubgemm,
    run_tugemm_serial,
    run_ugemm,
    worst_case_cycles,
)
from .matrix import BitWidth, GemmShape, Matrix, exact_gemm, random_matrix, random_operands
from .sparsity import (
    SparsityReport,
    TileSpec,
    bit_sparsity,
    column_tiles,
    msb_truncate,
    profile_bundle,
    word_sparsity,
)

__version__ = "0.1.0"
