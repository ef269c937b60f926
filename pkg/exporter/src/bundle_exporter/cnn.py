"""Quantized CNN weight export.

Walks a quantized torch module, pulls each conv/linear weight's raw integer
representation (int_repr), and writes one bundle. Accepts either a ready
module or the name of a pretrained quantized torchvision model; the latter
downloads the checkpoint and therefore needs hub access.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .format import ExportError, write_bundle

__all__ = ["CNN_ZOO", "collect_quantized_weights", "export_cnn", "load_quantized_cnn"]

# Pretrained INT8-quantized torchvision checkpoints, keyed by short name.
CNN_ZOO = {
    "mobilenet_v2": "mobilenet_v2",
    "mobilenet_v3": "mobilenet_v3_large",
    "inception_v3": "inception_v3",
    "shufflenet_v2": "shufflenet_v2_x1_0",
    "googlenet": "googlenet",
    "resnet18": "resnet18",
    "resnet50": "resnet50",
    "resnext101": "resnext101_32x8d",
}

LAYER_FILTERS = ("all", "conv", "fc")


def load_quantized_cnn(name: str):
    """Instantiate a pretrained quantized torchvision model (downloads weights)."""
    if name not in CNN_ZOO:
        raise ExportError(
            f"unknown CNN {name!r}; choose from: {', '.join(sorted(CNN_ZOO))}"
        )
    try:
        from torchvision.models import quantization as qmodels
    except ImportError as exc:
        raise ExportError("torchvision is required to load zoo models") from exc
    ctor = getattr(qmodels, CNN_ZOO[name])
    return ctor(weights="DEFAULT", quantize=True).eval()


def _quantized_weight(module):
    """The module's weight as a quantized tensor, or None."""
    import torch

    getter = getattr(module, "weight", None)
    if getter is None:
        return None
    try:
        w = getter() if callable(getter) else getter
    except Exception:
        return None
    if isinstance(w, torch.Tensor) and w.is_quantized:
        return w
    return None


def collect_quantized_weights(module, layers: str = "all") -> list[tuple[str, str, np.ndarray]]:
    """(name, role, int8 array) per quantized conv/linear weight in the module.

    conv selects kernels with 3+ dimensions, fc the 2-D weights; values are
    the stored integer representations, untouched.
    """
    if layers not in LAYER_FILTERS:
        raise ExportError(f"layer filter must be one of {LAYER_FILTERS}, got {layers!r}")
    out = []
    for name, sub in module.named_modules():
        w = _quantized_weight(sub)
        if w is None:
            continue
        if layers == "conv" and w.dim() < 3:
            continue
        if layers == "fc" and w.dim() != 2:
            continue
        ints = w.int_repr().cpu().numpy()
        if ints.dtype != np.int8:
            raise ExportError(
                f"layer {name!r}: expected int8 representation, got {ints.dtype}"
            )
        out.append((f"{name}.weight" if name else "weight", "weight", ints))
    if not out:
        raise ExportError(
            "model carries no quantized integer weights; refusing to quantize "
            "float parameters"
        )
    return out


def export_cnn(
    model,
    out_dir: str | Path,
    layers: str = "all",
    source_model: str | None = None,
) -> Path:
    """Export a quantized CNN to a bundle; `model` is a zoo name or a module."""
    if isinstance(model, str):
        source_model = source_model or model
        model = load_quantized_cnn(model)
    tensors = collect_quantized_weights(model, layers)
    meta = {
        "source_model": source_model or type(model).__name__,
        "layer_filter": layers,
        "exporter": "cnn-int8",
    }
    return write_bundle(out_dir, tensors, meta)
