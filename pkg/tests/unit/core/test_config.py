# reifenberg-lab/tests/unit/core/test_config.py
"""
Unit tests for app.core.config and the run configuration schema.

Tests:
- Settings defaults and environment overrides
- RunConfig validation of cone, schedule and angle sections
"""
import pytest
from pydantic import ValidationError


# =============================================================================
# Settings Tests
# =============================================================================


@pytest.mark.unit
class TestSettings:
    """Tests for Settings."""

    def test_resource_caps(self):
        """Caps should default to desk-sized runs."""
        from app.core.config import Settings

        s = Settings(_env_file=None)

        assert s.max_points == 5000
        assert s.gh_size_cap == 600
        assert s.schedule_pair_cap == 20000
        assert s.rho_truncation == "tent"
        assert s.reference_kind == "lattice"

    def test_environment_override(self, monkeypatch):
        """Environment variables should override defaults."""
        from app.core.config import Settings

        monkeypatch.setenv("GH_SIZE_CAP", "42")
        monkeypatch.setenv("N_JOBS", "3")

        s = Settings(_env_file=None)

        assert s.gh_size_cap == 42
        assert s.n_jobs == 3


# =============================================================================
# RunConfig Tests
# =============================================================================


@pytest.mark.unit
class TestRunConfig:
    """Tests for RunConfig and its sections."""

    def test_defaults_validate(self):
        from app.schemas.run import RunConfig

        config = RunConfig()

        assert config.cone.h_inf == 0.5
        assert config.cone.r_min == 1e-10
        assert config.schedule.first_level == 4
        assert config.reifenberg.reference_kind == "lattice"
        assert config.reifenberg.r == 0.4
        assert config.cone.shell_window == 1
        assert config.angles.columns == ["angle_mesh", "angle_chord"]

    @pytest.mark.parametrize("h_inf", [0.0, 1.0, 1.2, -0.5])
    def test_h_inf_range(self, h_inf):
        """h_inf should be rejected outside (0, 1)."""
        from app.schemas.run import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate({"cone": {"h_inf": h_inf}})

    def test_radii_ordered(self):
        from app.schemas.run import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate({"cone": {"r_min": 0.5, "r_max": 0.1}})

    def test_sphere_resolution_floor(self):
        from app.schemas.run import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate({"cone": {"sphere_res": 4}})

    @pytest.mark.parametrize("targets", [[0.0], [3.2], [0.5, -1.0]])
    def test_schedule_targets(self, targets):
        """Target angles should lie in (0, pi)."""
        from app.schemas.run import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate({"schedule": {"targets": targets}})

    def test_schedule_points_are_three_vectors(self):
        from app.schemas.run import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate({"schedule": {"y": [1.0, 0.0]}})

    def test_holder_betas(self):
        from app.schemas.run import RunConfig

        ok = RunConfig.model_validate({"angles": {"holder_betas": [0.25, 0.5]}})

        assert ok.angles.holder_betas == [0.25, 0.5]
        with pytest.raises(ValidationError):
            RunConfig.model_validate({"angles": {"holder_betas": [1.0]}})

    def test_projection_energy_bounds(self):
        from app.schemas.run import RunConfig

        with pytest.raises(ValidationError):
            RunConfig.model_validate({"embed": {"energy": 1.5}})
