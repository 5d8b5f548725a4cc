"""
Configuration settings for the Reifenberg lab
"""
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application
    log_level: str = "INFO"
    output_dir: str = "runs"
    n_jobs: int = 1

    # Resource caps
    max_points: int = 5000
    gh_size_cap: int = 600
    schedule_length_cap: float = 100000.0
    schedule_pair_cap: int = 20000

    # Metric tolerances
    tol_triangle_exact: float = 1e-9
    tol_triangle_mesh: float = 1e-6
    tol_geodesic: float = 1e-6
    tol_clamp: float = 1e-9

    # Sphere flow
    flow_step_ratio: float = 0.05  # integrator step = eps * ratio
    flow_amplitude: float = 1.0
    derivative_slack: float = 0.1
    sphere_net_samples: int = 2000

    # Cone space
    h_inf: float = 0.5
    freeze_radius: Optional[float] = None
    shells: int = 24
    sphere_res: int = 200
    r_min: float = 1e-3
    r_max: float = 1.0
    radial_spacing: str = "geometric"
    shell_window: int = 1

    # Embedding
    rho_truncation: str = "tent"  # "tent" | "hard"
    projection_energy: float = 0.999

    # Gromov-Hausdorff / Reifenberg
    gh_restarts: int = 4
    gh_local_search_rounds: int = 200
    resolution_factor: float = 5.0
    reference_kind: str = "lattice"  # "lattice" | "sampled"

    class Config:
        env_file = ".env"
        extra = "ignore"


settings = Settings()
