"""Exports from locally constructed quantized models; no checkpoint downloads."""

import json

import numpy as np
import pytest

from bundle_exporter import (
    ExportError,
    capture_qk,
    collect_llm_weights,
    collect_quantized_weights,
    export_cnn,
    export_llm_layers,
    manifest_digest,
)
from bundle_exporter.cli import EXIT_IO, EXIT_USAGE, main


class TestCnnExport:
    def test_collects_every_quantized_weight(self, quantized_cnn):
        tensors = collect_quantized_weights(quantized_cnn)
        names = [t[0] for t in tensors]
        assert "conv1.weight" in names and "fc.weight" in names
        assert all(arr.dtype == np.int8 for _, _, arr in tensors)

    def test_values_are_raw_int_repr(self, quantized_cnn):
        tensors = dict(
            (name, arr) for name, _, arr in collect_quantized_weights(quantized_cnn)
        )
        expect = quantized_cnn.conv1.weight().int_repr().numpy()
        assert np.array_equal(tensors["conv1.weight"], expect)

    def test_conv_filter(self, quantized_cnn):
        tensors = collect_quantized_weights(quantized_cnn, "conv")
        assert {t[0] for t in tensors} == {"conv1.weight", "conv2.weight"}
        assert all(arr.ndim == 4 for _, _, arr in tensors)

    def test_fc_filter(self, quantized_cnn):
        tensors = collect_quantized_weights(quantized_cnn, "fc")
        assert [t[0] for t in tensors] == ["fc.weight"]
        assert tensors[0][2].ndim == 2

    def test_bad_filter(self, quantized_cnn):
        with pytest.raises(ExportError, match="layer filter"):
            collect_quantized_weights(quantized_cnn, "attention-fc")

    def test_float_model_refused(self):
        import torch.nn as nn

        with pytest.raises(ExportError, match="refusing to quantize"):
            collect_quantized_weights(nn.Sequential(nn.Linear(4, 4)))

    def test_export_writes_bundle(self, quantized_cnn, tmp_path):
        root = export_cnn(quantized_cnn, tmp_path / "b", source_model="tiny-fixture")
        manifest = json.loads((root / "manifest.json").read_text())
        assert manifest["source_model"] == "tiny-fixture"
        assert manifest["layer_filter"] == "all"
        assert len(manifest["layers"]) == 3

    def test_reexport_identical_manifest_hash(self, quantized_cnn, tmp_path):
        a = export_cnn(quantized_cnn, tmp_path / "a", source_model="tiny-fixture")
        b = export_cnn(quantized_cnn, tmp_path / "b", source_model="tiny-fixture")
        assert manifest_digest(a) == manifest_digest(b)

    def test_unknown_zoo_name(self, tmp_path):
        with pytest.raises(ExportError, match="unknown CNN"):
            export_cnn("lenet", tmp_path / "b")

    def test_profiles_downstream(self, quantized_cnn, tmp_path):
        from unarygemm import BitWidth, profile_bundle
        from unarygemm.bundle import TensorBundle

        root = export_cnn(quantized_cnn, tmp_path / "b")
        report = profile_bundle(TensorBundle.load(root), BitWidth(8))
        assert len(report.layers) == 3
        # conv layers tile per feature map: 8 and 4 output channels
        by_name = {l.name: l for l in report.layers}
        assert by_name["conv1.weight"].tiles == 8
        assert by_name["conv2.weight"].tiles == 4


class TestLlmExport:
    def test_block_zero_weights_selected(self, llm_weight_map):
        tensors = collect_llm_weights(llm_weight_map)
        names = {t[0] for t in tensors}
        assert names == {
            "layers.0.self_attn.q_proj.weight",
            "layers.0.self_attn.o_proj.weight",
            "layers.0.mlp.fc1.weight",
            "layers.0.mlp.fc2.weight",
        }
        assert all(arr.dtype == np.int32 for _, _, arr in tensors)

    def test_attention_filter(self, llm_weight_map):
        tensors = collect_llm_weights(llm_weight_map, "attention-fc")
        assert all("self_attn" in t[0] for t in tensors)
        assert len(tensors) == 2

    def test_ffn_filter(self, llm_weight_map):
        tensors = collect_llm_weights(llm_weight_map, "ffn")
        assert {t[0] for t in tensors} == {
            "layers.0.mlp.fc1.weight", "layers.0.mlp.fc2.weight"
        }

    def test_all_blocks(self, llm_weight_map):
        tensors = collect_llm_weights(llm_weight_map, block=None)
        assert "layers.1.self_attn.q_proj.weight" in {t[0] for t in tensors}

    def test_missing_block_is_error(self, llm_weight_map):
        with pytest.raises(ExportError, match="block"):
            collect_llm_weights(llm_weight_map, block=7)

    def test_float_weights_refused(self):
        weights = {"layers.0.self_attn.q_proj.weight": np.zeros((8, 8), np.float16)}
        with pytest.raises(ExportError, match="will not quantize"):
            collect_llm_weights(weights)

    def test_torch_module_state_dict_path(self, int_llm_module):
        tensors = collect_llm_weights(int_llm_module)
        assert {t[0] for t in tensors} == {
            "layers.0.self_attn.q_proj.weight",
            "layers.0.self_attn.k_proj.weight",
        }

    def test_truncated_bit_sparsity_lands_on_table_row(self, llm_weight_map, tmp_path):
        # the planted tile maxima sit just under full scale, so the top-2 and
        # top-4 bit views bottleneck at 1/2 and 7/8 of capacity exactly
        from unarygemm import BitWidth, profile_bundle
        from unarygemm.bundle import TensorBundle

        root = export_llm_layers(
            llm_weight_map, tmp_path / "b", layers="attention-fc",
            source_model="synthetic-llm",
        )
        bundle = TensorBundle.load(root)
        two = profile_bundle(bundle, BitWidth(2), allow_truncate=True)
        four = profile_bundle(bundle, BitWidth(4), allow_truncate=True)
        assert two.model_bit * 100 == pytest.approx(50.0, abs=1.0)
        assert four.model_bit * 100 == pytest.approx(12.5, abs=1.0)

    def test_manifest_records_substitution(self, llm_weight_map, tmp_path):
        root = export_llm_layers(
            llm_weight_map, tmp_path / "b", source_model="small-stand-in"
        )
        manifest = json.loads((root / "manifest.json").read_text())
        assert manifest["source_model"] == "small-stand-in"
        assert manifest["block"] == 0


class TestQkCapture:
    def test_capture_roundtrip(self, int_llm_module, tmp_path):
        import torch

        ids = torch.arange(12, dtype=torch.int32).reshape(1, 12)
        captured = capture_qk(int_llm_module, ids)
        names = {t[0] for t in captured}
        assert names == {
            "layers.0.self_attn.q_proj.tokens",
            "layers.0.self_attn.k_proj.tokens",
        }
        assert all(role == "activation" for _, role, _ in captured)
        q = next(arr for n, _, arr in captured if "q_proj" in n)
        assert np.array_equal(q, (ids.numpy() * 3).astype(np.int32))

    def test_bundle_with_captures_profiles(self, int_llm_module, tmp_path):
        import torch

        from unarygemm import BitWidth, profile_bundle
        from unarygemm.bundle import TensorBundle

        ids = torch.arange(8, dtype=torch.int32).reshape(1, 8)
        root = export_llm_layers(int_llm_module, tmp_path / "b", qk_input=ids)
        bundle = TensorBundle.load(root)
        roles = {l.role for l in bundle.layers}
        assert roles == {"weight", "activation"}
        report = profile_bundle(bundle, BitWidth(8), allow_truncate=True)
        assert len(report.layers) == 4

    def test_float_activations_refused(self):
        import torch
        import torch.nn as nn

        class FloatBlock(nn.Module):
            def __init__(self):
                super().__init__()
                self.q_proj = nn.Linear(4, 4)
                self.k_proj = nn.Linear(4, 4)

            def forward(self, x):
                return self.q_proj(x) + self.k_proj(x)

        with pytest.raises(ExportError, match="will not quantize"):
            capture_qk(FloatBlock().eval(), torch.randn(1, 4))

    def test_no_projections_is_error(self, int_llm_module):
        import torch

        with pytest.raises(ExportError, match="nothing to capture"):
            capture_qk(int_llm_module, torch.zeros(1, 2, dtype=torch.int32),
                       q_suffix="query_x", k_suffix="key_x")


class TestCli:
    def test_unknown_model_is_usage_error(self, tmp_path, capsys):
        code = main(["--model", "lenet", "--out", str(tmp_path / "b")])
        assert code == EXIT_USAGE
        assert "unknown CNN" in capsys.readouterr().err

    def test_llm_filter_on_cnn_is_usage_error(self, tmp_path, capsys):
        code = main(["--model", "resnet18", "--layers", "attention-fc",
                     "--out", str(tmp_path / "b")])
        assert code == EXIT_USAGE

    def test_missing_flags(self):
        with pytest.raises(SystemExit) as exc:
            main(["--model", "resnet18"])
        assert exc.value.code == EXIT_USAGE

    @pytest.mark.filterwarnings("ignore::DeprecationWarning")
    def test_hub_download_failure_is_io_error(self, no_hub, tmp_path, capsys):
        code = main(["--model", "resnet18", "--out", str(tmp_path / "b")])
        assert code == EXIT_IO
        assert "could not load" in capsys.readouterr().err
