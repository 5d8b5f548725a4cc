# reifenberg-lab/tests/unit/services/test_flow_diagnostics.py
"""
Unit tests for app.services.flow_diagnostics module.

Tests:
- Divergence of truncated fields
- Jacobian determinant and cell areas under the flow
- Parameter-derivative bounds and their reparametrization scaling
- Dijkstra cross-check of the pullback metric
"""
import numpy as np
import pytest

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])


@pytest.fixture
def family():
    """One segment on [-1, 0] carrying e2 to distance 1 from e1."""
    from app.services.sphere_flow import DiffeoFamily, make_segment

    return DiffeoFamily(segments=(make_segment(E1, E2, 1.0, 0.15, start=-1.0),))


# =============================================================================
# Volume preservation Tests
# =============================================================================


@pytest.mark.unit
class TestVolumePreservation:
    """Tests for divergence_check, jacobian_check and volume_check."""

    def test_truncated_field_is_divergence_free(self):
        from app.services.flow_diagnostics import divergence_check
        from app.services.sphere_flow import build_field

        assert divergence_check(build_field(E1, E2, 0.15), fd_step=5e-5) <= 1e-5

    def test_killing_field_is_divergence_free(self):
        from app.services.flow_diagnostics import divergence_check
        from app.services.sphere_flow import build_field

        field = build_field(E1, E2, 0.15).untruncated()

        assert divergence_check(field) <= 1e-8

    def test_jacobian_is_one(self, family):
        from app.services.flow_diagnostics import jacobian_check, random_sphere_points

        points = random_sphere_points(300, seed=2)

        assert jacobian_check(family, -0.5, points) <= 1e-4

    def test_total_area_preserved(self, family):
        from app.services.flow_diagnostics import volume_check
        from app.services.mesh_builders import sphere_mesh

        mesh = sphere_mesh(200)
        check = volume_check(family, -0.5, mesh)

        assert check.total_area_change <= 1e-9
        assert check.max_jacobian_error <= 1e-4
        assert check.points == 200


# =============================================================================
# Derivative bound Tests
# =============================================================================


@pytest.mark.unit
class TestDerivativeBounds:
    """Tests for derivative_bounds and schedule_derivative_bounds."""

    def test_identity_family_has_zero_bounds(self):
        from app.services.flow_diagnostics import schedule_derivative_bounds
        from app.services.sphere_flow import identity_family

        bounds = schedule_derivative_bounds(identity_family())

        assert bounds.worst == 0.0

    def test_active_segment_has_positive_bounds(self, family):
        from app.services.flow_diagnostics import schedule_derivative_bounds

        bounds = schedule_derivative_bounds(family)

        assert bounds.d_s > 0.0
        assert bounds.sites == 8
        assert bounds.s_samples == 13

    def test_stretch_rescales_bounds(self, family):
        """Stretching by 2 halves first derivatives and quarters the second."""
        from app.services.flow_diagnostics import derivative_bounds, segment_sites

        segment = family.segments[0]
        sites = segment_sites(segment)
        raw = derivative_bounds(family, sites, [-0.6, -0.4])
        stretched = family.stretched(2.0)
        scaled = derivative_bounds(stretched, sites, [-1.2, -0.8])

        assert scaled.d_s == pytest.approx(raw.d_s / 2.0, rel=1e-9)
        assert scaled.d_ss == pytest.approx(raw.d_ss / 4.0, rel=1e-9)
        assert scaled.grad_d_s == pytest.approx(raw.grad_d_s / 2.0, rel=1e-9)

    def test_sites_sit_in_transition_band(self, family):
        from app.services.flow_diagnostics import segment_sites

        segment = family.segments[0]
        band = segment.field.frame.distance_to_circle(segment_sites(segment))

        assert np.all(band > segment.field.eps)
        assert np.all(band < 2.0 * segment.field.eps)


# =============================================================================
# Isometry cross-check Tests
# =============================================================================


@pytest.mark.unit
class TestIsometryCrossCheck:
    """Tests for isometry_cross_check and identity_displacement."""

    def test_identity_window_matches_round_metric(self, family):
        from app.services.flow_diagnostics import isometry_cross_check
        from app.services.mesh_builders import sphere_mesh

        check = isometry_cross_check(family, -0.9, sphere_mesh(200))

        assert check.pairs > 0
        assert check.mean_relative_error <= 0.1

    def test_small_rotation_window(self):
        from app.services.flow_diagnostics import isometry_cross_check
        from app.services.mesh_builders import sphere_mesh
        from app.services.sphere_flow import DiffeoFamily, make_segment

        family = DiffeoFamily(segments=(make_segment(E1, E2, 1.5, 0.15, start=-1.0),))
        check = isometry_cross_check(family, -0.5, sphere_mesh(400))

        assert check.mean_relative_error <= 0.25

    def test_identity_displacement(self, family):
        from app.services.flow_diagnostics import identity_displacement, random_sphere_points

        points = random_sphere_points(100)

        assert identity_displacement(family, -0.9, points) == 0.0
        assert identity_displacement(family, -0.5, points) > 0.0
