"""Transformer layer export: attention FC and FFN weights, plus optional
Q/K token capture from a representative input.

Weights must already be integers (a quantized checkpoint); float tensors are
refused rather than re-quantized. int8/int16 values are widened into int32
containers unchanged, since bundles store wide layers as int32 and the
profiler truncates from there.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .format import ExportError, write_bundle

__all__ = ["capture_qk", "collect_llm_weights", "export_llm_layers", "load_llm"]

ATTENTION_MARKERS = ("attn", "attention")
FFN_MARKERS = ("mlp", "ffn", "feed_forward", "fc1", "fc2")
LAYER_FILTERS = ("all", "attention-fc", "ffn")


def load_llm(checkpoint: str):
    """Load a causal LM checkpoint by hub id (needs hub access)."""
    try:
        from transformers import AutoModelForCausalLM
    except ImportError as exc:
        raise ExportError("transformers is required to load LLM checkpoints") from exc
    return AutoModelForCausalLM.from_pretrained(checkpoint).eval()


def _as_int32(name: str, arr: np.ndarray) -> np.ndarray:
    if not np.issubdtype(arr.dtype, np.signedinteger):
        raise ExportError(
            f"layer {name!r} holds {arr.dtype} values; this exporter only ships "
            "raw integer representations and will not quantize floats"
        )
    if arr.dtype == np.int64:
        lo, hi = arr.min(), arr.max()
        if lo < np.iinfo(np.int32).min or hi > np.iinfo(np.int32).max:
            raise ExportError(f"layer {name!r}: int64 values exceed the int32 range")
    return arr.astype(np.int32)


def _classify(name: str) -> str | None:
    lowered = name.lower()
    if any(m in lowered for m in ATTENTION_MARKERS):
        return "attention-fc"
    if any(m in lowered for m in FFN_MARKERS):
        return "ffn"
    return None


def _in_block(name: str, block: int | None) -> bool:
    if block is None:
        return True
    needle = f".{block}."
    return needle in f".{name}."


def collect_llm_weights(
    model, layers: str = "all", block: int | None = 0
) -> list[tuple[str, str, np.ndarray]]:
    """FC weight matrices of the attention and FFN sublayers, as int32.

    `model` is a torch module or a name->tensor mapping; `block` restricts the
    export to one decoder block (None exports every matching layer).
    """
    if layers not in LAYER_FILTERS:
        raise ExportError(f"layer filter must be one of {LAYER_FILTERS}, got {layers!r}")
    if hasattr(model, "state_dict"):
        items = model.state_dict().items()
    else:
        items = model.items()
    out = []
    for name, tensor in items:
        kind = _classify(name)
        if kind is None or not _in_block(name, block):
            continue
        if layers != "all" and kind != layers:
            continue
        arr = tensor.detach().cpu().numpy() if hasattr(tensor, "detach") else np.asarray(tensor)
        if arr.ndim != 2:
            continue
        out.append((name, "weight", _as_int32(name, arr)))
    if not out:
        raise ExportError(
            f"no {layers!r} weight matrices matched block {block!r}; "
            "pass block=None to export every block"
        )
    return out


def capture_qk(
    model, input_ids, q_suffix: str = "q_proj", k_suffix: str = "k_proj"
) -> list[tuple[str, str, np.ndarray]]:
    """Run one forward pass and record Q/K projection outputs as activations.

    Outputs must be integer tensors; float activations are refused for the
    same reason float weights are.
    """
    import torch

    captured: list[tuple[str, str, np.ndarray]] = []
    hooks = []

    def grab(name):
        def hook(_module, _inputs, output):
            arr = output.detach().cpu().numpy()
            captured.append((f"{name}.tokens", "activation", _as_int32(name, arr)))
        return hook

    for name, sub in model.named_modules():
        if name.endswith(q_suffix) or name.endswith(k_suffix):
            hooks.append(sub.register_forward_hook(grab(name)))
    if not hooks:
        raise ExportError(
            f"no modules end with {q_suffix!r} or {k_suffix!r}; nothing to capture"
        )
    try:
        with torch.no_grad():
            model(input_ids)
    finally:
        for h in hooks:
            h.remove()
    if not captured:
        raise ExportError("forward pass never reached the Q/K projections")
    return captured


def export_llm_layers(
    model,
    out_dir: str | Path,
    layers: str = "all",
    block: int | None = 0,
    qk_input=None,
    source_model: str | None = None,
) -> Path:
    """Export attention-FC/FFN weights (and optional Q/K captures) to a bundle.

    `model` is a hub checkpoint id, a torch module, or a name->tensor mapping.
    The manifest records `source_model` so checkpoint substitutions stay
    auditable.
    """
    if isinstance(model, str):
        source_model = source_model or model
        model = load_llm(model)
    tensors = collect_llm_weights(model, layers, block)
    meta = {
        "source_model": source_model or type(model).__name__,
        "layer_filter": layers,
        "block": block,
        "exporter": "llm-int32",
    }
    if qk_input is not None:
        tensors += capture_qk(model, qk_input)
        meta["qk_input_shape"] = list(np.asarray(qk_input).shape)
    return write_bundle(out_dir, tensors, meta)
