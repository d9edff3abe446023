"""Format round-trip and validation tests.

The binary layout is pinned by a hand-assembled file built with struct
alone, so an accidental layout change fails loudly instead of silently
round-tripping. Everything else is bit-exactness plus rejection of every
way a file can lie about itself.
"""

import json
import os
import struct

import numpy as np
import pytest

from ratbary import (
    AaaConfig,
    BarycentricModel,
    FileFormatError,
    SampleGrid,
    gen_scalar,
    qr_aaa,
    sv_aaa,
)
from ratbary.fileio import read_matrix, read_model, write_matrix, write_model


def _sample_grid():
    return SampleGrid.equispaced(-1.0, 1.0, 40, axis="real")


def _sample_matrix():
    grid = _sample_grid()
    z = grid.points
    f = np.column_stack([np.exp(z), 1.0 / (z - 2.0), np.sin(3 * z) + 1j * z])
    return f, grid


def _fitted_model():
    prob = gen_scalar("runge")
    f = prob.sample()
    model = sv_aaa(f, prob.grid, AaaConfig(tol=1e-10))
    return model, f, prob.grid


class TestMatrixFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        f, grid = _sample_matrix()
        path = tmp_path / "samples.svaa"
        write_matrix(path, f, grid, labels=["a", "b", "c"])
        back = read_matrix(path)
        assert np.array_equal(back.f, f)
        assert np.array_equal(back.grid.points, grid.points)
        assert back.grid.chart == grid.chart
        assert back.labels == ["a", "b", "c"]
        twin = tmp_path / "again.svaa"
        write_matrix(twin, back.f, back.grid, back.labels)
        assert path.read_bytes() == twin.read_bytes()

    def test_hand_assembled_file_parses(self, tmp_path):
        # layout oracle written with struct only: magic, version, axis tag,
        # point count, points, column count, column-major payload, label flag
        payload = b"SVAA"
        payload += struct.pack("<I", 1)
        payload += struct.pack("<B", 0)
        payload += struct.pack("<Q", 2)
        payload += np.array([1 + 0j, 2 + 0j], dtype="<c16").tobytes()
        payload += struct.pack("<Q", 1)
        payload += np.array([3 + 4j, 5 - 6j], dtype="<c16").tobytes()
        payload += struct.pack("<B", 0)
        path = tmp_path / "hand.svaa"
        path.write_bytes(payload)
        back = read_matrix(path)
        assert back.grid.chart is None
        assert np.array_equal(back.grid.points, [1 + 0j, 2 + 0j])
        assert np.array_equal(back.f, [[3 + 4j], [5 - 6j]])
        assert back.labels is None

    def test_chart_block_holds_endpoints(self, tmp_path):
        grid = SampleGrid.equispaced(2.0, 6.0, 9, axis="imag")
        f = np.exp(grid.points)[:, None]
        path = tmp_path / "seg.svaa"
        write_matrix(path, f, grid)
        assert read_matrix(path).grid.chart == (2.0, 6.0, "imag")

    def test_unicode_labels(self, tmp_path):
        f, grid = _sample_matrix()
        labels = ["stiffness", "dämpfung", "μ-term"]
        path = tmp_path / "lab.svaa"
        write_matrix(path, f, grid, labels=labels)
        assert read_matrix(path).labels == labels

    def test_truncation_rejected_at_any_point(self, tmp_path):
        f, grid = _sample_matrix()
        path = tmp_path / "full.svaa"
        write_matrix(path, f, grid, labels=["x", "y", "z"])
        data = path.read_bytes()
        short = tmp_path / "short.svaa"
        for cut in (2, 7, 8, 20, len(data) // 2, len(data) - 1):
            short.write_bytes(data[:cut])
            with pytest.raises(FileFormatError):
                read_matrix(short)

    def test_trailing_bytes_rejected(self, tmp_path):
        f, grid = _sample_matrix()
        path = tmp_path / "long.svaa"
        write_matrix(path, f, grid)
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(FileFormatError, match="trailing"):
            read_matrix(path)

    def test_bad_magic_and_version(self, tmp_path):
        f, grid = _sample_matrix()
        path = tmp_path / "m.svaa"
        write_matrix(path, f, grid)
        data = bytearray(path.read_bytes())
        bad = tmp_path / "bad.svaa"
        bad.write_bytes(b"NOPE" + bytes(data[4:]))
        with pytest.raises(FileFormatError, match="not a sample-matrix"):
            read_matrix(bad)
        data[4:8] = struct.pack("<I", 99)
        bad.write_bytes(bytes(data))
        with pytest.raises(FileFormatError, match="version"):
            read_matrix(bad)

    def test_unknown_axis_tag_rejected(self, tmp_path):
        f, grid = _sample_matrix()
        path = tmp_path / "ax.svaa"
        write_matrix(path, f, grid)
        data = bytearray(path.read_bytes())
        data[8] = 7
        path.write_bytes(bytes(data))
        with pytest.raises(FileFormatError, match="axis"):
            read_matrix(path)

    def test_duplicate_grid_points_rejected(self, tmp_path):
        payload = b"SVAA" + struct.pack("<I", 1) + struct.pack("<B", 0)
        payload += struct.pack("<Q", 2)
        payload += np.array([1 + 0j, 1 + 0j], dtype="<c16").tobytes()
        payload += struct.pack("<Q", 1)
        payload += np.array([0j, 0j], dtype="<c16").tobytes()
        payload += struct.pack("<B", 0)
        path = tmp_path / "dup.svaa"
        path.write_bytes(payload)
        with pytest.raises(FileFormatError, match="distinct"):
            read_matrix(path)

    def test_no_temp_files_left_behind(self, tmp_path):
        f, grid = _sample_matrix()
        write_matrix(tmp_path / "a.svaa", f, grid)
        leftovers = [p for p in os.listdir(tmp_path) if p.startswith(".ratbary")]
        assert leftovers == []


class TestModelFormat:
    def test_round_trip_exact(self, tmp_path):
        model, _, _ = _fitted_model()
        path = tmp_path / "model.json"
        write_model(path, model, metadata={"method": "sv", "tol": 1e-10})
        back = read_model(path)
        assert np.array_equal(back.model.supports, model.supports)
        assert np.array_equal(back.model.weights, model.weights)
        assert np.array_equal(back.model.snapshots, model.snapshots)
        assert np.array_equal(back.model.support_indices, model.support_indices)
        assert back.model.history == list(model.history)
        assert back.metadata["method"] == "sv"
        assert back.metadata["tol"] == 1e-10
        twin = tmp_path / "twin.json"
        write_model(twin, back.model, back.scaling, back.metadata)
        assert path.read_bytes() == twin.read_bytes()

    def test_scaling_block_round_trips(self, tmp_path):
        grid = SampleGrid.equispaced(-1.0, 1.0, 120, axis="real")
        z = grid.points
        f = np.column_stack(
            [4.0 * np.exp(z), np.zeros_like(z), 0.25j / (z - 1.7)]
        )
        qm = qr_aaa(f, grid, 1e-10)
        path = tmp_path / "qr.json"
        write_model(path, qm.model, scaling=qm.scaling)
        back = read_model(path)
        assert np.array_equal(back.scaling.d, qm.scaling.d)
        assert np.array_equal(back.scaling.zero_columns, qm.scaling.zero_columns)

    def test_document_alone_suffices_to_evaluate(self, tmp_path):
        model, f, grid = _fitted_model()
        path = tmp_path / "model.json"
        write_model(path, model)
        back = read_model(path)
        probe = SampleGrid.equispaced(-0.9, 0.9, 57, axis="real")
        assert np.array_equal(
            back.model.evaluate_grid(probe), model.evaluate_grid(probe)
        )

    def test_snapshots_returned_verbatim_at_supports(self, tmp_path):
        model, f, _ = _fitted_model()
        path = tmp_path / "model.json"
        write_model(path, model)
        back = read_model(path)
        for k, z in enumerate(back.model.supports):
            assert np.array_equal(back.model.evaluate(z), model.snapshots[k])

    def test_weight_norm_validated_on_load(self, tmp_path):
        model, _, _ = _fitted_model()
        path = tmp_path / "model.json"
        write_model(path, model)
        doc = json.loads(path.read_text())
        doc["weights"] = [[2 * re, 2 * im] for re, im in doc["weights"]]
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError, match="2-norm"):
            read_model(path)

    def test_duplicate_supports_rejected_on_load(self, tmp_path):
        model, _, _ = _fitted_model()
        path = tmp_path / "model.json"
        write_model(path, model)
        doc = json.loads(path.read_text())
        doc["supports"][1] = doc["supports"][0]
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError, match="distinct"):
            read_model(path)

    def test_snapshot_payload_length_checked(self, tmp_path):
        model, _, _ = _fitted_model()
        path = tmp_path / "model.json"
        write_model(path, model)
        doc = json.loads(path.read_text())
        doc["snapshots"]["rows"] += 1
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError, match="payload"):
            read_model(path)

    def test_rejects_non_model_documents(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{]")
        with pytest.raises(FileFormatError, match="JSON"):
            read_model(path)
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(FileFormatError, match="model document"):
            read_model(path)

    def test_flagged_model_keeps_its_marker(self, tmp_path):
        grid = SampleGrid.equispaced(-1.0, 1.0, 60, axis="real")
        f = np.exp(grid.points)[:, None]
        model = sv_aaa(f, grid, AaaConfig(tol=1e-14, max_degree=2))
        assert not model.converged
        path = tmp_path / "flagged.json"
        write_model(path, model)
        back = read_model(path)
        assert back.model.converged is False
        assert back.model.failure == "max-degree"
        assert back.metadata["failure"] == "max-degree"

    def test_hand_built_model_document(self, tmp_path):
        # minimal document assembled without the writer
        snaps = np.array([[1 + 1j], [2 - 1j]], dtype="<c16")
        import base64

        doc = {
            "format": "ratbary-model",
            "version": 1,
            "supports": [[0.0, 0.0], [1.0, 0.0]],
            "weights": [[np.sqrt(0.5), 0.0], [-np.sqrt(0.5), 0.0]],
            "snapshots": {
                "rows": 2,
                "cols": 1,
                "data": base64.b64encode(snaps.tobytes()).decode(),
            },
            "metadata": {},
        }
        path = tmp_path / "hand.json"
        path.write_text(json.dumps(doc))
        back = read_model(path)
        assert isinstance(back.model, BarycentricModel)
        assert back.model.degree == 1
        assert back.scaling is None
        assert np.array_equal(back.model.snapshots, snaps.astype(np.complex128))
