# reifenberg-lab/tests/unit/services/test_warp_profile.py
"""
Unit tests for app.services.warp_profile module.
"""
import math

import numpy as np
import pytest


@pytest.mark.unit
class TestWarpProfile:
    """Tests for WarpProfile, default_profile and flat_profile."""

    def test_default_profile_limits(self):
        """Should run from 1 at the tip to h_inf far out."""
        from app.services.warp_profile import default_profile

        profile = default_profile(0.5)

        assert float(profile.h(1e-12)) == pytest.approx(1.0, abs=1e-9)
        assert float(profile.h(1e12)) == pytest.approx(0.5, abs=1e-9)
        assert float(profile.h(1.0)) == pytest.approx(0.75)

    def test_check_passes(self):
        from app.services.warp_profile import WarpProfile

        report = WarpProfile(h_inf=0.3).check()

        assert report.passed
        assert report.failures == []
        assert report.rf_small == pytest.approx(1.0 / (2.0 * math.sqrt(30.0)))

    def test_f_visits_the_whole_line(self):
        from app.services.warp_profile import default_profile

        profile = default_profile(0.5)
        r = np.array([math.exp(-4.0), 1.0, math.exp(9.0)])

        assert np.allclose(profile.f(r), [-2.0, 0.0, 3.0])
        assert np.allclose(profile.f_inverse(profile.f(r)), r)

    def test_h_prime_matches_difference(self):
        from app.services.warp_profile import default_profile

        profile = default_profile(0.4, freeze_radius=0.05)
        r, step = 0.3, 1e-6
        numeric = (profile.h(r + step) - profile.h(r - step)) / (2.0 * step)

        assert float(profile.h_prime(r)) == pytest.approx(float(numeric), rel=1e-6)

    def test_freeze_radius_holds_h_at_one(self):
        from app.services.warp_profile import default_profile

        profile = default_profile(0.5, freeze_radius=0.01)

        assert np.all(profile.h(np.geomspace(1e-6, 0.01, 20)) == 1.0)
        assert float(profile.h(1.0)) < 1.0

    @pytest.mark.parametrize("h_inf", [0.0, 1.0, 1.5, -0.2])
    def test_out_of_range_h_inf(self, h_inf):
        from app.services.warp_profile import ConstraintViolated, default_profile

        with pytest.raises(ConstraintViolated):
            default_profile(h_inf)

    def test_flat_profile(self):
        from app.services.warp_profile import flat_profile

        profile = flat_profile()

        assert np.all(profile.h(np.geomspace(1e-6, 1e6, 13)) == 1.0)
        assert profile.check().passed
