# reifenberg-lab/tests/unit/services/test_report_storage.py
"""
Unit tests for app.services.report_storage module.

Tests:
- Config hashing
- Hash-tagged JSON, CSV and NPZ artifacts
- Overwrite protection and --force
"""
import numpy as np
import pytest


@pytest.fixture
def storage(tmp_path):
    from app.services.report_storage import ReportStorage

    return ReportStorage(tmp_path / "run", "abc123")


# =============================================================================
# config_hash Tests
# =============================================================================


@pytest.mark.unit
class TestConfigHash:
    """Tests for config_hash."""

    def test_output_dir_is_not_hashed(self, run_config):
        from app.services.report_storage import config_hash

        moved = run_config.model_copy(update={"output_dir": "/elsewhere"})

        assert config_hash(moved) == config_hash(run_config)

    def test_parameter_change_changes_hash(self, run_config):
        from app.services.report_storage import config_hash

        reseeded = run_config.model_copy(update={"seed": run_config.seed + 1})

        assert config_hash(reseeded) != config_hash(run_config)
        assert len(config_hash(run_config)) == 64


# =============================================================================
# Artifact Tests
# =============================================================================


@pytest.mark.unit
class TestArtifacts:
    """Tests for write/read of JSON, CSV and NPZ artifacts."""

    def test_json_envelope(self, storage):
        storage.write_json("summary.json", {"points": 3})

        assert storage.stored_hash("summary.json") == "abc123"
        assert storage.read_json("summary.json") == {"points": 3}

    def test_json_from_models(self, storage):
        from app.schemas.metric import ValidationReport

        report = ValidationReport(point_count=3, tol=1e-9, passed=True)
        storage.write_json("checks.json", [report])

        body = storage.read_json("checks.json")

        assert body[0]["point_count"] == 3
        assert body[0]["passed"] is True

    def test_csv_hash_line_and_rows(self, storage):
        storage.write_csv("rows.csv", ["a", "b"], [[1, None], [2, 0.5]])

        first = storage.path("rows.csv").read_text(encoding="utf-8").splitlines()[0]
        rows = storage.read_csv("rows.csv")

        assert first == "# config_hash=abc123"
        assert rows == [{"a": "1", "b": ""}, {"a": "2", "b": "0.5"}]

    def test_npz(self, storage):
        storage.write_npz("cone.npz", dist=np.eye(2))

        data = storage.read_npz("cone.npz")

        assert storage.stored_hash("cone.npz") == "abc123"
        assert np.array_equal(data["dist"], np.eye(2))

    def test_missing_artifact_has_no_hash(self, storage):
        assert storage.stored_hash("absent.json") is None
        assert not storage.exists("absent.json")


# =============================================================================
# Overwrite Tests
# =============================================================================


@pytest.mark.unit
class TestOverwrite:
    """Tests for the hash guard."""

    def test_same_config_may_rewrite(self, storage):
        storage.write_json("a.json", {"v": 1})
        storage.write_json("a.json", {"v": 2})

        assert storage.read_json("a.json") == {"v": 2}

    def test_other_config_conflicts(self, tmp_path, storage):
        from app.services.report_storage import ArtifactConflict, ReportStorage

        storage.write_csv("a.csv", ["x"], [[1]])
        other = ReportStorage(tmp_path / "run", "def456")

        with pytest.raises(ArtifactConflict):
            other.write_csv("a.csv", ["x"], [[2]])

    def test_force_overwrites(self, tmp_path, storage):
        from app.services.report_storage import ReportStorage

        storage.write_json("a.json", {"v": 1})
        forced = ReportStorage(tmp_path / "run", "def456", force=True)
        forced.write_json("a.json", {"v": 2})

        assert forced.stored_hash("a.json") == "def456"
        assert forced.read_json("a.json") == {"v": 2}
