# reifenberg-lab/tests/unit/services/test_reifenberg.py
"""
Unit tests for app.services.reifenberg module.

Tests:
- Euclidean reference balls (lattice and sampled)
- Sharp cone model space
- Verdict logic and scale resolution
- Classification of flat and conical points
- Interior sample nets and the uniform (eps, r) profile
"""
import math

import numpy as np
import pytest

FLAT_CENTER = (41 * 41 - 1) // 2


@pytest.fixture
def flat_plane():
    """41 x 41 lattice of spacing 0.05 centered at the origin."""
    from app.services.mesh_builders import flat_lattice_space

    return flat_lattice_space(2, 41, 0.05)


# =============================================================================
# Model space Tests
# =============================================================================


@pytest.mark.unit
class TestModelSpaces:
    """Tests for euclidean_reference_ball, sharp_cone_space and mesh_spacing."""

    def test_lattice_reference(self):
        from app.services.reifenberg import euclidean_reference_ball

        ball = euclidean_reference_ball(2, 1.0, spacing=0.5, kind="lattice")

        assert ball.size == 13
        assert np.array_equal(ball.coords[0], [0.0, 0.0])
        assert ball.diameter == pytest.approx(2.0)

    def test_sampled_reference(self):
        from app.services.reifenberg import euclidean_reference_ball

        ball = euclidean_reference_ball(3, 0.5, count=50, kind="sampled", seed=1)

        assert ball.size == 50
        assert np.array_equal(ball.coords[0], [0.0, 0.0, 0.0])
        assert np.all(np.linalg.norm(ball.coords, axis=1) <= 0.5)

    @pytest.mark.parametrize(
        "kwargs",
        [{"kind": "lattice"}, {"kind": "sampled"}, {"kind": "hexagonal", "spacing": 0.1}],
    )
    def test_reference_arguments(self, kwargs):
        from app.services.reifenberg import euclidean_reference_ball

        with pytest.raises(ValueError):
            euclidean_reference_ball(2, 1.0, **kwargs)

    def test_sharp_cone_distances(self):
        """Opposite points of one ring sit at opening pi h_inf across the tip."""
        from app.services.reifenberg import sharp_cone_space

        cone = sharp_cone_space(0.5, rings=10, angular=16)
        r = 0.1

        assert cone.size == 161
        assert cone.dist[0, 1] == pytest.approx(r)
        assert cone.dist[1, 9] == pytest.approx(math.sqrt(2.0) * r)
        assert cone.boundary.sum() == 16

    def test_flat_sharp_cone_is_a_disc(self):
        from app.services.reifenberg import sharp_cone_space
        from scipy.spatial.distance import cdist

        cone = sharp_cone_space(1.0, rings=5, angular=8)

        assert np.allclose(cone.dist, cdist(cone.coords, cone.coords), atol=1e-12)

    def test_sharp_cone_rejects_h_inf(self):
        from app.core.errors import ValidationFailure
        from app.services.reifenberg import sharp_cone_space

        with pytest.raises(ValidationFailure):
            sharp_cone_space(0.0)

    def test_mesh_spacing(self, chain):
        from app.services.reifenberg import mesh_spacing

        assert mesh_spacing(chain) == pytest.approx(1.0)


@pytest.mark.unit
class TestSampleNet:
    """Tests for sample_net."""

    def test_net_stays_in_the_interior(self, flat_plane):
        from app.services.reifenberg import sample_net

        net = sample_net(flat_plane, 9, margin=0.5, seed_point=FLAT_CENTER)

        assert len(net) == 9
        assert len(set(net)) == 9
        assert net[0] == FLAT_CENTER
        assert np.all(np.abs(flat_plane.coords[net]).max(axis=1) < 0.5 + 1e-9)

    def test_net_spreads_out(self, flat_plane):
        """Farthest-point order: the second point sits at the interior corner."""
        from app.services.reifenberg import sample_net

        net = sample_net(flat_plane, 2, margin=0.5, seed_point=FLAT_CENTER)

        assert np.linalg.norm(flat_plane.coords[net[1]]) > 0.6

    def test_cone_net_starts_at_tip(self):
        from app.services.reifenberg import sample_net, sharp_cone_space

        cone = sharp_cone_space(0.5, rings=10, angular=16)
        net = sample_net(cone, 5, margin=0.2)

        assert net[0] == 0
        assert not cone.boundary[net].any()

    def test_margin_beyond_space(self, flat_plane):
        from app.core.errors import ValidationFailure
        from app.services.reifenberg import sample_net

        with pytest.raises(ValidationFailure):
            sample_net(flat_plane, 4, margin=5.0)


# =============================================================================
# Verdict Tests
# =============================================================================


@pytest.mark.unit
class TestVerdicts:
    """Tests for scale_grid, _verdict, _combine and _resolvable."""

    def test_scale_grid(self):
        from app.services.reifenberg import scale_grid

        assert scale_grid(0.8, 3) == [0.4, 0.2, 0.1]
        assert max(scale_grid(0.3, 1)) < 0.3
        with pytest.raises(ValueError):
            scale_grid(0.0, 2)

    def test_verdict_bracket(self):
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import _verdict

        assert _verdict(0.2, 0.3, 0.1) == Verdict.FAIL
        assert _verdict(0.0, 0.05, 0.1) == Verdict.PASS
        assert _verdict(0.05, 0.2, 0.1) == Verdict.INCONCLUSIVE

    def test_combine(self):
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import _combine

        assert _combine([Verdict.PASS, Verdict.FAIL, Verdict.INCONCLUSIVE]) == Verdict.FAIL
        assert _combine([Verdict.PASS, Verdict.PASS]) == Verdict.PASS
        assert _combine([Verdict.PASS, Verdict.INCONCLUSIVE]) == Verdict.INCONCLUSIVE
        assert _combine([]) == Verdict.INCONCLUSIVE

    def test_resolvable_splits_scales(self):
        from app.services.reifenberg import _resolvable

        kept, skipped = _resolvable([1.0, 0.5, 0.25], 0.1)

        assert kept == [1.0, 0.5]
        assert skipped == [0.25]


# =============================================================================
# Classification Tests
# =============================================================================


@pytest.mark.unit
class TestClassify:
    """Tests for reifenberg_classify and uniform_profile."""

    def test_flat_center_passes(self, flat_plane):
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import reifenberg_classify

        profile = reifenberg_classify(
            flat_plane, FLAT_CENTER, eps=0.2, r=1.0, scale_count=1, euclid_dim=2,
            reference_kind="lattice", n_jobs=1,
        )

        assert profile.verdict == Verdict.PASS
        assert profile.scales[0].scale == 0.5
        assert profile.scales[0].ball_size > 300

    def test_sampled_reference_is_not_refuted(self, flat_plane):
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import reifenberg_classify

        profile = reifenberg_classify(
            flat_plane, FLAT_CENTER, eps=0.2, r=1.0, scale_count=1, euclid_dim=2,
            reference_kind="sampled", n_jobs=1,
        )

        assert profile.reference_kind == "sampled"
        assert profile.verdict != Verdict.FAIL

    def test_sharp_cone_tip_fails(self):
        """Ball of radius s at the tip has diameter sqrt(2) s against 2 s for the flat disc."""
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import reifenberg_classify, sharp_cone_space

        cone = sharp_cone_space(0.5, rings=20, angular=32)
        profile = reifenberg_classify(cone, 0, eps=0.05, r=0.8, scale_count=1, euclid_dim=2, n_jobs=1)

        assert profile.verdict == Verdict.FAIL
        assert profile.scales[0].lower >= profile.scales[0].threshold

    def test_scale_below_resolution(self, chain):
        from app.services.reifenberg import ScaleBelowResolution, reifenberg_classify

        with pytest.raises(ScaleBelowResolution):
            reifenberg_classify(chain, 5, eps=0.1, r=1.0, scale_count=2, euclid_dim=1, n_jobs=1)

    def test_eps_must_be_positive(self, chain):
        from app.core.errors import ValidationFailure
        from app.services.reifenberg import reifenberg_classify

        with pytest.raises(ValidationFailure):
            reifenberg_classify(chain, 5, eps=0.0, r=8.0, euclid_dim=1, n_jobs=1)

    def test_uniform_profile(self, flat_plane):
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import uniform_profile

        rows, profiles = uniform_profile(
            flat_plane, [0.2], [0.2, 1.0], [FLAT_CENTER], euclid_dim=2, scale_count=1,
            reference_kind="lattice", n_jobs=1,
        )

        assert len(rows) == 1
        assert rows[0].r == 1.0
        assert rows[0].points == 1
        assert [p.verdict for p in profiles] == [Verdict.PASS]

    def test_uniform_profile_over_interior_net(self, flat_plane):
        """Every net point keeps its largest ball inside the lattice, so all of them pass."""
        from app.schemas.reifenberg import Verdict
        from app.services.reifenberg import sample_net, uniform_profile

        net = sample_net(flat_plane, 3, margin=0.5, seed_point=FLAT_CENTER)
        rows, profiles = uniform_profile(
            flat_plane, [0.2], [1.0], net, euclid_dim=2, scale_count=1,
            reference_kind="lattice", n_jobs=1,
        )

        assert rows[0].points == 3
        assert rows[0].r == 1.0
        assert {p.point for p in profiles} == set(net)
        assert all(p.verdict == Verdict.PASS for p in profiles)

    def test_uniform_profile_below_resolution(self, chain):
        from app.services.reifenberg import ScaleBelowResolution, uniform_profile

        with pytest.raises(ScaleBelowResolution):
            uniform_profile(chain, [0.1], [1.0], [5], euclid_dim=1, n_jobs=1)
