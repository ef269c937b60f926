"""Exports quantized model weights and captured integer activations into
tensor bundle directories (manifest.json + raw little-endian blobs)."""

from .cnn import CNN_ZOO, collect_quantized_weights, export_cnn, load_quantized_cnn
from .format import ExportError, manifest_digest, write_bundle
from .llm import capture_qk, collect_llm_weights, export_llm_layers, load_llm

__version__ = "0.1.0"

__all__ = [
    "CNN_ZOO",
    "ExportError",
    "capture_qk",
    "collect_llm_weights",
    "collect_quantized_weights",
    "export_cnn",
    "export_llm_layers",
    "load_llm",
    "load_quantized_cnn",
    "manifest_digest",
    "write_bundle",
    "__version__",
]
