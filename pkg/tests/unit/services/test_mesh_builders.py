# reifenberg-lab/tests/unit/services/test_mesh_builders.py
"""
Unit tests for app.services.mesh_builders and app.services.metric_io.

Tests:
- Fibonacci sphere mesh (orientation, areas, stencils)
- Sphere graph and exact sample spaces
- Flat lattices, tori and chains
- Text and CSV metric files
"""
import math

import numpy as np
import pytest


# =============================================================================
# Sphere mesh Tests
# =============================================================================


@pytest.mark.unit
class TestSphereMesh:
    """Tests for sphere_mesh and SphereMesh."""

    def test_vertex_areas_cover_sphere(self):
        from app.services.mesh_builders import sphere_mesh

        mesh = sphere_mesh(100)

        assert mesh.vertex_areas().sum() == pytest.approx(4.0 * math.pi, rel=1e-9)

    def test_triangles_outward(self):
        """Every triangle should have positive orientation seen from outside."""
        from app.services.mesh_builders import sphere_mesh

        mesh = sphere_mesh(100)
        a, b, c = (mesh.vertices[mesh.triangles[:, k]] for k in range(3))

        assert np.all(np.sum(a * np.cross(b, c), axis=-1) > 0)

    def test_stencil_rings(self):
        """Two rings should add the second-ring edges to the first ring."""
        from app.services.mesh_builders import sphere_mesh

        mesh = sphere_mesh(60)

        assert len(mesh.stencil(1)) == len(mesh.edges)
        assert len(mesh.stencil(2)) == len(mesh.edges) + len(mesh.second_ring)
        assert len(mesh.second_ring) > 0

    def test_nearest_vertex(self):
        from app.services.mesh_builders import sphere_mesh

        mesh = sphere_mesh(60)

        assert mesh.nearest_vertex(mesh.vertices[17] * 2.0) == 17


# =============================================================================
# Space builder Tests
# =============================================================================


@pytest.mark.unit
class TestSpaceBuilders:
    """Tests for the finite metric space builders."""

    def test_graph_distances_dominate_great_circle(self):
        """Mesh paths can never be shorter than the sphere geodesic."""
        from app.services.mesh_builders import sphere_graph_space
        from app.utils.sphere_geometry import pairwise_great_circle

        space = sphere_graph_space(80)
        exact = pairwise_great_circle(space.coords)

        assert np.all(space.dist >= exact - 1e-12)
        assert space.weight.sum() == pytest.approx(4.0 * math.pi, rel=1e-9)

    def test_sphere_sample_space_is_exact(self, sphere_sample):
        assert sphere_sample.diameter <= math.pi + 1e-12
        assert sphere_sample.weight.sum() == pytest.approx(4.0 * math.pi)

    def test_torus_wraps(self, torus_grid):
        """(0, 0) and (7/8, 0) are 1/8 apart on the unit torus."""
        assert torus_grid.dist[0, 56] == pytest.approx(0.125)
        assert torus_grid.diameter == pytest.approx(math.sqrt(2.0) / 2.0)

    def test_lattice_is_centered_with_boundary(self):
        from app.services.mesh_builders import flat_lattice_space, lattice_points

        points = lattice_points(3, 5, 0.5)
        space = flat_lattice_space(3, 5, 0.5)

        assert np.allclose(points.mean(axis=0), 0.0)
        assert space.boundary.sum() == 5 ** 3 - 3 ** 3

    def test_chain_geodesics_are_intervals(self, chain):
        assert chain.geodesic(2, 6) == [2, 3, 4, 5, 6]
        assert chain.dist[2, 6] == pytest.approx(4.0)

    def test_euclidean_space_cap(self):
        from app.core.config import settings
        from app.services.mesh_builders import euclidean_space
        from app.services.metric_core import ResourceCap

        with pytest.raises(ResourceCap):
            euclidean_space(np.zeros((settings.max_points + 1, 2)))


# =============================================================================
# metric_io Tests
# =============================================================================


@pytest.mark.unit
class TestMetricIO:
    """Tests for the documented text and CSV formats."""

    def test_text_file_keeps_weights_and_coords(self, triangle, tmp_path):
        from app.services.metric_io import load_text, save_text

        path = save_text(triangle, tmp_path / "triangle.txt")
        loaded = load_text(path)

        assert np.array_equal(loaded.dist, triangle.dist)
        assert np.array_equal(loaded.coords, triangle.coords)
        assert loaded.name == "triangle"

    def test_text_file_without_header(self, tmp_path):
        from app.services.metric_io import MetricFormatError, load_text

        path = tmp_path / "bad.txt"
        path.write_text("0 1\n1 0\n")
        with pytest.raises(MetricFormatError):
            load_text(path)

    def test_text_file_with_missing_rows(self, tmp_path):
        from app.services.metric_io import MetricFormatError, load_text

        path = tmp_path / "short.txt"
        path.write_text("points 2 weights 0 coords 0\n0 1\n")
        with pytest.raises(MetricFormatError):
            load_text(path)

    def test_csv_file(self, chain, tmp_path):
        from app.services.metric_io import load_csv, save_csv

        loaded = load_csv(save_csv(chain, tmp_path / "chain.csv"))

        assert np.array_equal(loaded.dist, chain.dist)
        assert np.array_equal(loaded.weight, chain.weight)

    def test_csv_wrong_shape(self, tmp_path):
        from app.services.metric_io import MetricFormatError, load_csv

        path = tmp_path / "bad.csv"
        path.write_text("weight,d0,d1\n1,0,1,5\n1,1,0,5\n")
        with pytest.raises(MetricFormatError):
            load_csv(path)
