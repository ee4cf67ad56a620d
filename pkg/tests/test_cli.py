import json
import subprocess
import sys
from pathlib import Path

import pytest

from flowline_risk.cli import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, main
from flowline_risk.config import ConfigError, load_config


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "flowline_risk", *args],
        capture_output=True, text=True,
    )


def write_config(path: Path, **overrides) -> Path:
    base = {
        "seed": 7,
        "synth_preset": "a",
        "synth_n_lines": 240,  # enough lines for >= 2 spill-source positives
        "drop_id_like": "true",
        "reference_date": "2024-06-30",
        "gbdt_trees": 15,
        "adaboost_stumps": 15,
        "rf_trees": 15,
        "lr_epochs": 100,
        "svm_epochs": 60,
    }
    base.update(overrides)
    path.write_text("\n".join(f"{k} = {v}" for k, v in base.items()) + "\n")
    return path


class TestConfig:
    def test_file_plus_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed = 3\nladder = 0,5,25\n# comment\npca = off\n")
        cfg = load_config(path, {"pca_k": 4})
        assert cfg.seed == 3
        assert cfg.ladder == (0.0, 5.0, 25.0)
        assert cfg.pca is False
        assert cfg.pca_k == 4

    def test_seed_mandatory(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("pca = on\n")
        cfg = load_config(path)
        with pytest.raises(ConfigError):
            cfg.validate()

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("this is not a pair\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_input_path(self, tmp_path):
        cfg = load_config(None, {"seed": 1, "descriptive_path": str(tmp_path / "nope.geojson")})
        with pytest.raises(ConfigError):
            cfg.validate()


class TestExitCodes:
    def test_missing_seed_is_config_error(self, tmp_path):
        proc = run_cli("synth", "--out", str(tmp_path / "r"))
        assert proc.returncode == EXIT_CONFIG

    def test_train_without_featurize_is_stage_failure(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg")
        proc = run_cli("train", "--config", str(cfg), "--out", str(tmp_path / "r"))
        assert proc.returncode == EXIT_STAGE
        assert "artifact" in proc.stderr

    def test_bad_ladder_flag(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg")
        proc = run_cli("synth", "--config", str(cfg), "--out", str(tmp_path / "r"),
                       "--ladder", "5,4,3")
        assert proc.returncode == EXIT_CONFIG


class TestStageChaining:
    def test_run_all_and_artifacts(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg")
        out = tmp_path / "run"
        assert main(["run-all", "--config", str(cfg), "--out", str(out)]) == EXIT_OK

        report = json.loads((out / "report.json").read_text())
        assert len(report["metrics"]["rows"]) == 36
        assert len(report["clustering"]["scores"]) == 4  # sweep over k = 2..5
        assert len(list((out / "figures").glob("*.svg"))) == 8
        assert (out / "tables" / "metrics.csv").exists()
        assert (out / "artifacts" / "merge_audit.csv").exists()

    def test_stale_artifact_detected(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg")
        out = tmp_path / "run"
        assert main(["synth", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert main(["merge", "--config", str(cfg), "--out", str(out)]) == EXIT_OK

        merged = out / "artifacts" / "merged.json"
        doc = json.loads(merged.read_text())
        doc["records"] = doc["records"][:10]
        merged.write_text(json.dumps(doc))

        code = main(["attribute", "--config", str(cfg), "--out", str(out)])
        assert code == EXIT_STAGE

    def test_individual_stage_chain(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg", synth_n_lines=80)
        out = tmp_path / "run"
        for stage in ("synth", "merge", "attribute", "featurize"):
            assert main([stage, "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        features = out / "artifacts" / "features.csv"
        assert features.exists()

    def test_pca_off_halves_metric_rows(self, tmp_path):
        cfg = write_config(tmp_path / "run.cfg", synth_n_lines=300)
        out = tmp_path / "run"
        assert main(["run-all", "--config", str(cfg), "--out", str(out), "--pca", "off"]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert len(report["metrics"]["rows"]) == 18


class TestReportValidation:
    def test_schema_validates(self, tmp_path):
        from flowline_risk.report import validate_report
        cfg = write_config(tmp_path / "run.cfg", synth_n_lines=300)
        out = tmp_path / "run"
        assert main(["run-all", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        validate_report(report)

    def test_payload_refs_resolve(self, tmp_path):
        from flowline_risk.report import _resolve_ref, validate_report
        cfg = write_config(tmp_path / "run.cfg", synth_n_lines=300)
        out = tmp_path / "run2"
        assert main(["run-all", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        for fig in report["figures"]:
            assert _resolve_ref(report, fig["payload_ref"]) is not None
            assert (out / fig["file"]).exists()
