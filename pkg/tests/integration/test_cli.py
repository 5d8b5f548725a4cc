# reifenberg-lab/tests/integration/test_cli.py
"""
Integration tests for the reifenberg-lab command line.

Tests:
- build -> angles -> embed -> reifenberg -> report on a small cone
- Exit codes for invalid configs and missing artifacts
"""
import json
from pathlib import Path

import pytest


@pytest.fixture
def config_file(tmp_path, run_config):
    """Small run config on disk; Reifenberg runs on the flat lattice at one scale."""
    body = run_config.model_dump(mode="json")
    body["reifenberg"].update({"eps": 0.2, "scale_count": 1})
    path = tmp_path / "config.json"
    path.write_text(json.dumps(body), encoding="utf-8")
    return path


def _write(tmp_path, body: dict):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(body), encoding="utf-8")
    return str(path)


@pytest.mark.integration
class TestPipeline:
    """End-to-end runs through main()."""

    def test_full_run(self, config_file, run_config):
        """Every command should succeed and report should collect their artifacts."""
        from app.main import main

        out = Path(run_config.output_dir)
        for command in ("build", "angles", "embed", "reifenberg", "report"):
            assert main([command, "--config", str(config_file)]) == 0, command

        summary = json.loads((out / "summary.json").read_text())
        report = summary["report"]

        assert (out / "cone.npz").exists()
        assert (out / "angles.csv").exists()
        assert {"manifest", "angle_summary", "embedding_summary", "reifenberg_profiles"} <= set(report["artifacts"])
        assert report["verdict_counts"]["PASS"] == 1
        assert report["reports"]["manifest"]["reference"] == "warped"

    def test_build_tables(self, tmp_path, run_config):
        """schedule.csv should carry the pair and parameter interval; ricci.csv one row per sample."""
        from app.main import main
        from app.services.report_storage import ReportStorage

        body = run_config.model_dump(mode="json")
        body["cone"]["ricci_samples"] = 3
        path = _write(tmp_path, body)

        assert main(["build", "--config", path]) == 0

        storage = ReportStorage(run_config.output_dir, "unused")
        schedule = storage.read_csv("schedule.csv")
        ricci = storage.read_csv("ricci.csv")

        assert schedule
        for row in schedule:
            assert (row["pair_i"], row["pair_j"]) == ("0", "1")
            assert float(row["interval_start"]) < float(row["midpoint"]) < float(row["interval_end"])
        assert len(ricci) == 3
        assert set(ricci[0]) == {"r", "theta", "phi", "min_eigenvalue", "max_eigenvalue"}
        assert storage.exists("ricci.json")

    def test_rerun_with_other_seed_conflicts(self, config_file):
        """A different config should not overwrite artifacts without --force."""
        from app.main import main

        assert main(["build", "--config", str(config_file)]) == 0
        assert main(["build", "--config", str(config_file), "--seed", "7"]) == 2
        assert main(["build", "--config", str(config_file), "--seed", "7", "--force"]) == 0


@pytest.mark.integration
class TestExitCodes:
    """Exit codes for rejected inputs."""

    def test_invalid_h_inf(self, tmp_path):
        from app.main import main

        path = _write(tmp_path, {"cone": {"h_inf": 1.5}, "output_dir": str(tmp_path / "run")})

        assert main(["build", "--config", path]) == 2

    def test_missing_config_file(self, tmp_path):
        from app.main import main

        assert main(["build", "--config", str(tmp_path / "absent.json")]) == 2

    def test_angles_before_build(self, config_file):
        from app.main import main

        assert main(["angles", "--config", str(config_file)]) == 2

    def test_report_without_artifacts(self, config_file):
        from app.main import main

        assert main(["report", "--config", str(config_file)]) == 2

    def test_resource_cap(self, config_file, monkeypatch):
        from app.core.config import settings
        from app.main import main

        monkeypatch.setattr(settings, "max_points", 10)

        assert main(["build", "--config", str(config_file)]) == 3

    def test_unknown_command_is_rejected_by_parser(self):
        from app.main import main

        with pytest.raises(SystemExit):
            main(["compile"])
