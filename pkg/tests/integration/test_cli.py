"""End-to-end tests of the clue-assign command line."""

import json
from pathlib import Path

import numpy as np
import pytest
from flask.testing import FlaskCliRunner

from clue_assign.cfem import load_memory, load_params
from clue_assign.cfem.enhance import MATRIX_FIELDS
from clue_assign.cli import main
from clue_assign.ingest import load_matrices, save_matrices
from tests.oracle import reference_enhance

SMALL_MODEL = """
[memory]
num_classes = 2
dim = 4

[enhance]
in_channels = 2
roi_size = 2
num_heads = 2
"""


def _invoke(runner: FlaskCliRunner, *args: str) -> list[Path]:
    result = runner.invoke(main, list(args))
    assert result.exit_code == 0, result.output
    # stdout may carry log lines on older click versions; written paths exist
    return [Path(line) for line in result.output.splitlines() if line.strip() and Path(line).exists()]


@pytest.fixture
def small_model(tmp_path: Path, runner: FlaskCliRunner) -> dict[str, Path]:
    """Config, memory and parameter files for a 2-class, 4-wide model."""
    config = tmp_path / "model.toml"
    config.write_text(SMALL_MODEL, encoding="utf-8")
    memory, params = tmp_path / "memory.npz", tmp_path / "params.npz"
    _invoke(runner, "init-memory", "--config", str(config), "--seed", "3", "--out", str(memory))
    _invoke(runner, "init-params", "--config", str(config), "--seed", "3", "--out", str(params))
    return {"config": config, "memory": memory, "params": params}


class TestAssign:
    """Tests for the assign subcommand."""

    def test_writes_verdicts_and_positive_lists(self, runner: FlaskCliRunner, tmp_path: Path) -> None:
        out = tmp_path / "assign.json"
        paths = _invoke(runner, "assign", "--synth", "tiny", "--scenes", "3", "--assigner", "atss", "--out", str(out))
        assert paths == [out, tmp_path / "assign_gt.json"]

        preds = json.loads(out.read_text(encoding="utf-8"))
        assert preds["columns"] == ["assigner", "image_id", "pred_index", "verdict", "gt_index", "confidence"]
        assert len(preds["rows"]) == 3 * (3 * 4 + 8)
        assert {row["verdict"] for row in preds["rows"]} <= {"positive", "negative"}
        gts = json.loads((tmp_path / "assign_gt.json").read_text(encoding="utf-8"))
        assert len(gts["rows"]) == 9

    def test_output_is_byte_identical_across_runs(self, runner: FlaskCliRunner, tmp_path: Path) -> None:
        for name in ("a.csv", "b.csv"):
            _invoke(
                runner, "assign", "--seed", "11", "--scenes", "4", "--threads", "3", "--format", "csv",
                "--out", str(tmp_path / name),
            )  # fmt: skip
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a_gt.csv").read_bytes() == (tmp_path / "b_gt.csv").read_bytes()

    def test_unknown_assigner(self, runner: FlaskCliRunner, tmp_path: Path) -> None:
        result = runner.invoke(main, ["assign", "--assigner", "foo", "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2
        assert (
            "error=unknown_assigner_error status=400 "
            "message=unknown assigner 'foo'; valid names: mcss, iou_max, center, atss"
        ) in result.output
        assert not (tmp_path / "x.json").exists()

    def test_gt_requires_pred(self, runner: FlaskCliRunner, tmp_path: Path) -> None:
        gt = tmp_path / "gt.json"
        gt.write_text("{}", encoding="utf-8")
        result = runner.invoke(main, ["assign", "--gt", str(gt), "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2
        assert "--gt and --pred" in result.output

    def test_malformed_document(self, runner: FlaskCliRunner, tmp_path: Path) -> None:
        gt, pred = tmp_path / "gt.json", tmp_path / "pred.json"
        gt.write_text('{"images": [}', encoding="utf-8")
        pred.write_text("[]", encoding="utf-8")
        result = runner.invoke(main, ["assign", "--gt", str(gt), "--pred", str(pred), "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2
        assert "error=malformed_document_error status=422" in result.output

    def test_invalid_config_file(self, runner: FlaskCliRunner, tmp_path: Path) -> None:
        config = tmp_path / "run.toml"
        config.write_text("[assign]\nalpha = 2.0\n", encoding="utf-8")
        result = runner.invoke(main, ["assign", "--config", str(config), "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2
        assert "error=config_error status=422" in result.output
        assert "assign.alpha" in result.output


def test_exported_documents_feed_assign(runner: FlaskCliRunner, tmp_path: Path) -> None:
    gt = tmp_path / "gt.json"
    paths = _invoke(runner, "export-synth", "--synth", "tiny", "--scenes", "3", "--out", str(gt))
    assert paths == [gt, tmp_path / "gt_pred.json"]

    out = tmp_path / "files.json"
    _invoke(runner, "assign", "--gt", str(gt), "--pred", str(paths[1]), "--out", str(out))
    rows = json.loads(out.read_text(encoding="utf-8"))["rows"]
    assert [row["image_id"] for row in rows[:: 3 * 4 + 8]] == [0, 1, 2]
    assert not (tmp_path / "files_rejected.json").exists()


def test_degenerate_records_are_listed(runner: FlaskCliRunner, tmp_path: Path) -> None:
    gt, pred = tmp_path / "gt.json", tmp_path / "pred.json"
    gt.write_text(
        json.dumps(
            {
                "images": [{"id": 1, "width": 50, "height": 50}],
                "annotations": [
                    {"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10]},
                    {"id": 2, "image_id": 1, "category_id": 1, "bbox": [0, 0, 0, 10]},
                ],
                "categories": [{"id": 1, "name": "thing"}],
            }
        ),
        encoding="utf-8",
    )
    pred.write_text(json.dumps([{"image_id": 1, "bbox": [0, 0, 10, 10], "scores": [3.0]}]), encoding="utf-8")
    out = tmp_path / "out.csv"
    _invoke(runner, "assign", "--gt", str(gt), "--pred", str(pred), "--format", "csv", "--out", str(out))
    rejected = (tmp_path / "out_rejected.csv").read_text(encoding="utf-8").splitlines()
    assert rejected[0] == "source,index,record_id,reason"
    assert rejected[1].split(",")[1:3] == ["1", "2"]


def test_stats_writes_three_tables(runner: FlaskCliRunner, tmp_path: Path) -> None:
    out = tmp_path / "stats.csv"
    args = ["stats", "--assigner", "mcss", "--assigner", "iou_max", "--scenes", "5", "--format", "csv"]
    paths = _invoke(runner, *args, "--out", str(out))
    assert paths == [out, tmp_path / "stats_cov.csv", tmp_path / "stats_long.csv"]
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "assigner,bucket,gt_count,mean_positives,std_positives"
    assert [line.split(",")[:2] for line in lines[1:5]] == [["mcss", b] for b in ("eS", "rS", "gS", "Normal")]
    assert len(lines) == 1 + 2 * 4

    _invoke(runner, *args, "--out", str(tmp_path / "again.csv"))
    for suffix in ("", "_cov", "_long"):
        assert (tmp_path / f"stats{suffix}.csv").read_bytes() == (tmp_path / f"again{suffix}.csv").read_bytes()


def test_memory_sim(runner: FlaskCliRunner, tmp_path: Path) -> None:
    config = tmp_path / "sim.toml"
    config.write_text("[memory]\nnum_classes = 2\ndim = 8\n", encoding="utf-8")
    for name in ("a.json", "b.json"):
        _invoke(runner, "memory-sim", "--config", str(config), "--iterations", "20", "--out", str(tmp_path / name))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a_memory.npz").read_bytes() == (tmp_path / "b_memory.npz").read_bytes()

    rows = json.loads((tmp_path / "a.json").read_text(encoding="utf-8"))["rows"]
    assert len(rows) == 21 * 3
    first = {r["category"]: r["distance"] for r in rows if r["iteration"] == 0}
    last = {r["category"]: r["distance"] for r in rows if r["iteration"] == 20}
    assert all(last[c] < first[c] for c in first)


class TestEnhance:
    """Tests for init-memory, init-params and enhance."""

    def test_seeded_files_are_identical(self, runner: FlaskCliRunner, tmp_path: Path, small_model: dict) -> None:
        again = tmp_path / "again.npz"
        _invoke(runner, "init-params", "--config", str(small_model["config"]), "--seed", "3", "--out", str(again))
        assert again.read_bytes() == small_model["params"].read_bytes()
        assert load_memory(small_model["memory"]).matrix.shape == (3, 4)

    def test_matches_reference(self, runner: FlaskCliRunner, tmp_path: Path, small_model: dict) -> None:
        features = np.random.default_rng(5).standard_normal((6, 2, 2, 2))
        save_matrices(tmp_path / "features.npz", {"features": features})
        out = tmp_path / "out.npz"
        _invoke(
            runner, "enhance", "--params", str(small_model["params"]), "--features", str(tmp_path / "features.npz"),
            "--memory", str(small_model["memory"]), "--out", str(out),
        )  # fmt: skip

        result = load_matrices(out, required=("R", "P", "F_c", "R_enh"))
        params = load_params(small_model["params"])
        expected = reference_enhance(
            features.reshape(6, 8),
            load_memory(small_model["memory"]).matrix,
            {name: getattr(params, name) for name in MATRIX_FIELDS},
            num_heads=2,
        )
        for key, value in expected.items():
            assert np.allclose(result[key], value, rtol=1e-9, atol=1e-9), key

        _invoke(
            runner, "enhance", "--params", str(small_model["params"]), "--features", str(tmp_path / "features.npz"),
            "--memory", str(small_model["memory"]), "--out", str(tmp_path / "again.npz"),
        )  # fmt: skip
        assert (tmp_path / "again.npz").read_bytes() == out.read_bytes()

    def test_empty_feature_set(self, runner: FlaskCliRunner, tmp_path: Path, small_model: dict) -> None:
        save_matrices(tmp_path / "features.npz", {"features": np.zeros((0, 8))})
        out = tmp_path / "out.npz"
        _invoke(
            runner, "enhance", "--params", str(small_model["params"]), "--features", str(tmp_path / "features.npz"),
            "--memory", str(small_model["memory"]), "--out", str(out),
        )  # fmt: skip
        shapes = {key: value.shape for key, value in load_matrices(out).items()}
        assert shapes == {"R": (0, 4), "P": (0, 3), "F_c": (0, 4), "R_enh": (0, 4)}

    def test_shape_mismatch_is_reported(self, runner: FlaskCliRunner, tmp_path: Path, small_model: dict) -> None:
        save_matrices(tmp_path / "features.npz", {"features": np.ones((2, 5))})
        result = runner.invoke(
            main,
            [
                "enhance", "--params", str(small_model["params"]), "--features", str(tmp_path / "features.npz"),
                "--memory", str(small_model["memory"]), "--out", str(tmp_path / "out.npz"),
            ],
        )  # fmt: skip
        assert result.exit_code == 2
        assert "error=shape_mismatch_error status=400" in result.output
        assert not (tmp_path / "out.npz").exists()
