# reifenberg-lab/tests/unit/services/test_sphere_flow.py
"""
Unit tests for app.services.sphere_flow module.

Tests:
- Field frame construction and clearance
- RK4 flow against the closed-form rotation
- Target rotation angles
- Segment / family parametrization (plateau, freeze, stretch)
- Pair and covering schedules
"""
import math

import numpy as np
import pytest

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


# =============================================================================
# build_field Tests
# =============================================================================


@pytest.mark.unit
class TestBuildField:
    """Tests for build_field and TruncatedField."""

    def test_circle_through_y_at_clearance(self):
        """The circle should pass through y and stay 4 eps away from x."""
        from app.services.sphere_flow import build_field

        field = build_field(E1, E2, 0.1)

        assert float(field.axis @ E2) == pytest.approx(0.0, abs=1e-12)
        assert float(field.frame.distance_to_circle(E1)) == pytest.approx(0.4, abs=1e-12)

    def test_anchor_fixed_and_y_rigid(self):
        """The field should vanish at x and equal the Killing field at y."""
        from app.services.sphere_flow import build_field

        field = build_field(E1, E2, 0.1)

        assert np.allclose(field(E1), 0.0)
        assert np.allclose(field(E2), field.amplitude * field.killing(E2))

    def test_eps_range(self):
        from app.services.sphere_flow import MAX_EPS, build_field

        with pytest.raises(ValueError):
            build_field(E1, E2, MAX_EPS)
        with pytest.raises(ValueError):
            build_field(E1, E2, 0.0)

    def test_clearance_infeasible(self):
        """Points closer than 4 eps leave no admissible circle."""
        from app.services.sphere_flow import ClearanceInfeasible, build_field

        close = (E1 + 0.1 * E2) / np.linalg.norm(E1 + 0.1 * E2)
        with pytest.raises(ClearanceInfeasible):
            build_field(E1, close, 0.1)

    def test_clearance_error_is_validation_failure(self):
        from app.core.errors import ValidationFailure
        from app.services.sphere_flow import ClearanceInfeasible

        assert issubclass(ClearanceInfeasible, ValidationFailure)


# =============================================================================
# flow Tests
# =============================================================================


@pytest.mark.unit
class TestFlow:
    """Tests for flow and exact_flow."""

    def test_rk4_matches_closed_form(self):
        from app.services.flow_diagnostics import random_sphere_points
        from app.services.sphere_flow import build_field, exact_flow, flow

        field = build_field(E1, E2, 0.15)
        points = random_sphere_points(200, seed=1)

        assert np.allclose(flow(field, points, 0.7), exact_flow(field, points, 0.7), atol=1e-8)

    def test_flow_stays_on_sphere(self):
        from app.services.flow_diagnostics import random_sphere_points
        from app.services.sphere_flow import build_field, flow

        moved = flow(build_field(E1, E3, 0.1), random_sphere_points(50), -1.3)

        assert np.allclose(np.linalg.norm(moved, axis=1), 1.0)

    def test_zero_time_is_identity(self):
        from app.services.sphere_flow import build_field, flow

        assert np.array_equal(flow(build_field(E1, E2, 0.1), E3, 0.0), E3)

    def test_rotation_reaches_target(self):
        """Rotating y by the returned angle should put it at the target distance from x."""
        from app.services.sphere_flow import build_field, exact_flow, rotation_for_target
        from app.utils.sphere_geometry import great_circle_distance

        field = build_field(E1, E2, 0.1)
        angle, achieved = rotation_for_target(field, 1.0)
        moved = exact_flow(field, E2, angle / field.amplitude)

        assert achieved == pytest.approx(1.0, abs=1e-9)
        assert float(great_circle_distance(moved, E1)) == pytest.approx(1.0, abs=1e-9)

    def test_unreachable_target_is_clamped(self):
        """Targets below the clearance clamp to the closest reachable distance."""
        from app.services.sphere_flow import build_field, rotation_for_target

        field = build_field(E1, E2, 0.1)
        _, achieved = rotation_for_target(field, 0.1)

        assert achieved == pytest.approx(0.4, abs=1e-9)


# =============================================================================
# DiffeoFamily Tests
# =============================================================================


@pytest.mark.unit
class TestDiffeoFamily:
    """Tests for segments, freezing and reparametrization."""

    @pytest.fixture
    def family(self):
        from app.services.sphere_flow import DiffeoFamily, make_segment

        return DiffeoFamily(segments=(make_segment(E1, E2, 1.0, 0.1, start=-1.0),))

    def test_plateau_realizes_target(self, family):
        from app.services.sphere_flow import pullback_distance

        assert pullback_distance(family, -0.5, E1, E2) == pytest.approx(1.0, abs=1e-6)

    def test_identity_outside_plateau_ramps(self, family):
        """Outer quarters of the unit interval and other intervals are the identity."""
        assert family.is_identity(-0.9)
        assert family.is_identity(-0.1)
        assert family.is_identity(0.5)
        assert not family.is_identity(-0.5)

    def test_freeze(self, family):
        assert not family.frozen(0.6).is_identity(-0.5)
        assert family.frozen(0.4).is_identity(-0.5)

    def test_stretch_moves_midpoint(self, family):
        from app.services.sphere_flow import pullback_distance

        stretched = family.stretched(2.0)
        segment = stretched.segments[0]

        assert stretched.midpoint(segment) == pytest.approx(-1.0)
        assert stretched.interval(segment) == (-2.0, 0.0)
        assert pullback_distance(stretched, -1.0, E1, E2) == pytest.approx(1.0, abs=1e-6)

    def test_stretch_below_one_rejected(self, family):
        with pytest.raises(ValueError):
            family.stretched(0.5)

    def test_overlapping_segments_rejected(self):
        from app.services.sphere_flow import DiffeoFamily, make_segment

        a = make_segment(E1, E2, 1.0, 0.1, start=-1.0)
        b = make_segment(E1, E3, 1.0, 0.1, start=-1.0)
        with pytest.raises(ValueError):
            DiffeoFamily(segments=(a, b))

    def test_identity_family(self):
        from app.services.sphere_flow import identity_family

        family = identity_family()

        assert np.array_equal(family.apply(3.0, np.stack([E1, E2])), np.stack([E1, E2]))
        assert family.total_length == 0.0


# =============================================================================
# Schedule Tests
# =============================================================================


@pytest.mark.unit
class TestSchedules:
    """Tests for level scales, pair schedules and covering schedules."""

    def test_level_eps(self):
        from app.services.sphere_flow import MAX_EPS, level_eps

        assert level_eps(1) == pytest.approx(0.95 * MAX_EPS)
        assert level_eps(4) == pytest.approx(1.0 / 16.0)

    def test_theta_values(self):
        from app.services.sphere_flow import theta_values

        assert np.allclose(theta_values(2), [math.pi / 4, 3 * math.pi / 4])

    def test_pair_schedule_hits_every_target(self):
        """Each segment's plateau midpoint should realize its target for the fixed pair."""
        from app.services.sphere_flow import build_pair_schedule, pullback_distance

        family = build_pair_schedule(E1, E2, [0.3, 2.8], levels=2, origin=-1.0, first_level=4)

        assert len(family.segments) == 4
        assert [seg.level for seg in family.segments] == [4, 4, 5, 5]
        for segment in family.segments:
            assert segment.start <= -2.0
            achieved = pullback_distance(family, family.midpoint(segment), E1, E2)
            assert achieved == pytest.approx(segment.target, abs=1e-6)

    def test_pair_schedule_rejects_bad_levels(self):
        from app.services.sphere_flow import build_pair_schedule

        with pytest.raises(ValueError):
            build_pair_schedule(E1, E2, [1.0], levels=0)

    def test_covering_schedule_entries(self):
        """Level-1 covering schedule: every entry realizes its target."""
        from app.services.sphere_flow import build_schedule

        family, entries, skipped, summary = build_schedule(
            1, 2, sample_count=200, reparametrize=False
        )

        assert summary.segments == len(entries) == len(family.segments)
        assert summary.stretch == 1.0
        assert entries
        for entry in entries:
            assert entry.error <= 4.0 * 2.0 ** (-entry.level)
        assert summary.max_target_error < 1e-5

    def test_schedule_overflow(self, monkeypatch):
        from app.core.config import settings
        from app.services.sphere_flow import ScheduleOverflow, build_schedule

        monkeypatch.setattr(settings, "schedule_pair_cap", 1)
        with pytest.raises(ScheduleOverflow):
            build_schedule(1, 2, sample_count=200, reparametrize=False)
