"""The disk format is the contract: bundles written here must load and
profile through the downstream tooling with no shared code."""

import json

import numpy as np
import pytest

from bundle_exporter import ExportError, manifest_digest, write_bundle


@pytest.fixture
def tensors():
    gen = np.random.Generator(np.random.PCG64(0))
    return [
        ("conv.weight", "weight", gen.integers(-128, 128, (4, 3, 3, 3)).astype(np.int8)),
        ("fc.weight", "weight", gen.integers(-(2 ** 24), 2 ** 24, (8, 8)).astype(np.int32)),
        ("q.tokens", "activation", gen.integers(-50, 50, (2, 4, 8)).astype(np.int32)),
    ]


class TestWriter:
    def test_manifest_records_layers_and_meta(self, tmp_path, tensors):
        root = write_bundle(tmp_path / "b", tensors, meta={"source_model": "unit"})
        manifest = json.loads((root / "manifest.json").read_text())
        assert manifest["source_model"] == "unit"
        assert [l["name"] for l in manifest["layers"]] == [t[0] for t in tensors]
        rec = manifest["layers"][0]
        assert rec["dtype"] == "int8"
        assert rec["shape"] == [4, 3, 3, 3]
        assert len(rec["sha256"]) == 64

    def test_blobs_little_endian_row_major(self, tmp_path, tensors):
        root = write_bundle(tmp_path / "b", tensors)
        fc = tensors[1][2]
        assert (root / "fc_weight.bin").read_bytes() == fc.astype("<i4").tobytes()

    def test_reexport_identical_manifest(self, tmp_path, tensors):
        a = write_bundle(tmp_path / "a", tensors, meta={"source_model": "unit"})
        b = write_bundle(tmp_path / "b", tensors, meta={"source_model": "unit"})
        assert manifest_digest(a) == manifest_digest(b)

    def test_float_refused(self, tmp_path):
        with pytest.raises(ExportError, match="int8 or int32"):
            write_bundle(tmp_path / "b", [("w", "weight", np.zeros((2, 2), np.float32))])

    def test_empty_refused(self, tmp_path):
        with pytest.raises(ExportError, match="no layers"):
            write_bundle(tmp_path / "b", [])

    def test_duplicate_names_refused(self, tmp_path):
        t = ("w", "weight", np.zeros((2, 2), np.int8))
        with pytest.raises(ExportError, match="duplicate"):
            write_bundle(tmp_path / "b", [t, t])

    def test_bad_role_refused(self, tmp_path):
        with pytest.raises(ExportError, match="role"):
            write_bundle(tmp_path / "b", [("w", "bias", np.zeros((2, 2), np.int8))])


class TestCrossToolContract:
    def test_profiler_loads_and_verifies(self, tmp_path, tensors):
        # the downstream profiler reads the directory with its own loader
        from unarygemm.bundle import TensorBundle

        root = write_bundle(tmp_path / "b", tensors, meta={"source_model": "unit"})
        bundle = TensorBundle.load(root)
        assert bundle.meta["source_model"] == "unit"
        for name, role, arr in tensors:
            rec = bundle.layer(name)
            assert rec.role == role
            got = bundle.tensor(name)
            assert got.shape == arr.shape
            assert np.array_equal(got, arr.astype(np.int64))

    def test_profiler_catches_tamper(self, tmp_path, tensors):
        from unarygemm.bundle import BundleError, TensorBundle

        root = write_bundle(tmp_path / "b", tensors)
        blob = root / "fc_weight.bin"
        data = bytearray(blob.read_bytes())
        data[3] ^= 0x01
        blob.write_bytes(bytes(data))
        with pytest.raises(BundleError, match="checksum"):
            TensorBundle.load(root).tensor("fc.weight")

    def test_profile_report_runs(self, tmp_path, tensors):
        from unarygemm import BitWidth, profile_bundle
        from unarygemm.bundle import TensorBundle

        root = write_bundle(tmp_path / "b", tensors)
        report = profile_bundle(
            TensorBundle.load(root), BitWidth(8), allow_truncate=True
        )
        assert len(report.layers) == 3
        assert 0.0 <= report.model_bit <= 1.0
