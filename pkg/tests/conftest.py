# reifenberg-lab/tests/conftest.py
"""
Pytest fixtures for reifenberg-lab tests.

Fixtures:
- chain: Path graph of 11 unit-spaced points
- triangle: Three-point Euclidean right triangle
- sphere_sample: Exact great-circle metric on 60 Fibonacci points
- torus_grid: Flat torus sampled on an 8 x 8 grid
- run_config: Small RunConfig writing into a temporary directory
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure app module is importable
sys.path.insert(0, str(Path(__file__).parent.parent))


@pytest.fixture
def chain():
    """Path graph 0 - 1 - ... - 10 with unit edges."""
    from app.services.mesh_builders import chain_space

    return chain_space(11)


@pytest.fixture
def triangle():
    """Points (0,0), (3,0), (0,4): sides 3, 4, 5."""
    from app.services.mesh_builders import euclidean_space

    return euclidean_space(np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]]), name="triangle")


@pytest.fixture
def sphere_sample():
    from app.services.mesh_builders import sphere_sample_space
    from app.utils.sphere_geometry import fibonacci_sphere

    return sphere_sample_space(fibonacci_sphere(60))


@pytest.fixture
def torus_grid():
    from app.services.mesh_builders import flat_torus_space

    return flat_torus_space(8)


@pytest.fixture
def run_config(tmp_path):
    """Desk-sized config: small cone, one schedule level, tiny embedding and GH runs."""
    from app.schemas.run import RunConfig

    return RunConfig.model_validate({
        "name": "test",
        "output_dir": str(tmp_path / "run"),
        "cone": {"shells": 6, "sphere_res": 40, "r_min": 1e-3, "r_max": 0.2, "ricci_samples": 0},
        "schedule": {"levels": 1, "first_level": 4, "origin": -1.0},
        "embed": {"per_axis": 8, "r": 0.05},
        "reifenberg": {"space": "flat", "eps": 0.1, "r": 1.0, "scale_count": 2},
    })
