"""
Run Configuration Schemas
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


# =====================================================
# Cone construction
# =====================================================

class ConeConfig(BaseModel):
    """Warped cone mesh parameters."""
    flat: bool = Field(False, description="Identity family and h = 1 (flat R^3 reference)")
    h_inf: float = 0.5
    freeze_radius: Optional[float] = Field(None, gt=0)
    r_min: float = Field(1e-10, gt=0)
    r_max: float = Field(0.2, gt=0)
    shells: int = Field(40, ge=1)
    sphere_res: int = Field(120, ge=12)
    radial_spacing: Literal["geometric", "uniform"] = "geometric"
    shell_window: int = Field(1, ge=1, description="Outer shells joined to each shell by chord edges")
    ricci_samples: int = Field(10, ge=0)

    @field_validator("h_inf")
    @classmethod
    def h_inf_in_unit_interval(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("h_inf must lie strictly between 0 and 1")
        return v

    @model_validator(mode="after")
    def radii_ordered(self) -> "ConeConfig":
        if self.r_min >= self.r_max:
            raise ValueError("r_min must be smaller than r_max")
        return self


class ScheduleConfig(BaseModel):
    """Sphere diffeomorphism schedule.

    "pair" drives one fixed pair (y, z) through the targets at every level;
    "covering" runs over all net pairs with a theta grid.
    """
    mode: Literal["pair", "covering"] = "pair"
    y: List[float] = Field(default_factory=lambda: [1.0, 0.0, 0.0], min_length=3, max_length=3)
    z: List[float] = Field(default_factory=lambda: [0.0, 1.0, 0.0], min_length=3, max_length=3)
    targets: List[float] = Field(default_factory=lambda: [0.3, 2.8], min_length=1)
    levels: int = Field(2, ge=1)
    first_level: int = Field(4, ge=1)
    origin: float = -1.0
    theta_grid: int = Field(4, ge=1)
    sample_count: int = Field(500, ge=2)

    @field_validator("targets")
    @classmethod
    def targets_in_range(cls, v: List[float]) -> List[float]:
        for theta in v:
            if not 0.0 < theta < 3.141592653589793:
                raise ValueError(f"target {theta} must lie in (0, pi)")
        return v


# =====================================================
# Experiments
# =====================================================

class AngleConfig(BaseModel):
    tol: float = Field(0.1, gt=0)
    columns: List[Literal["angle_mesh", "angle_chord"]] = Field(
        default_factory=lambda: ["angle_mesh", "angle_chord"], min_length=1
    )
    holder_betas: List[float] = Field(default_factory=list)

    @field_validator("holder_betas")
    @classmethod
    def betas_in_unit_interval(cls, v: List[float]) -> List[float]:
        if any(not 0.0 < b < 1.0 for b in v):
            raise ValueError("holder betas must lie in (0, 1)")
        return v


class EmbedConfig(BaseModel):
    space: Literal["torus", "sphere", "cone"] = "torus"
    per_axis: int = Field(24, ge=3)
    sphere_points: int = Field(400, ge=12)
    r: float = Field(0.05, gt=0)
    truncation: Literal["tent", "hard"] = "tent"
    energy: float = Field(0.999, gt=0, le=1)
    near_pairs: int = Field(0, ge=0)


class ReifenbergConfig(BaseModel):
    space: Literal["sharp_cone", "flat", "cone"] = "sharp_cone"
    eps: float = Field(0.05, gt=0)
    r: float = Field(0.4, gt=0)
    scale_count: int = Field(2, ge=1)
    points: Optional[List[int]] = Field(None, description="Default: the tip for cones, the center for lattices")
    net_points: int = Field(16, ge=1, description="Uniform profile net size when points is unset")
    eps_grid: List[float] = Field(default_factory=list)
    r_grid: List[float] = Field(default_factory=list)
    reference_kind: Literal["lattice", "sampled"] = "lattice"
    # sharp cone
    sharp_h_inf: float = Field(0.5, gt=0, le=1)
    rings: int = Field(40, ge=1)
    angular: int = Field(64, ge=3)
    # flat lattice
    dim: int = Field(2, ge=1)
    lattice_per_axis: int = Field(41, ge=3)
    lattice_spacing: float = Field(0.05, gt=0)


# =====================================================
# Run
# =====================================================

class RunConfig(BaseModel):
    """One experiment; validated before any computation starts."""
    name: str = "default"
    seed: int = 0
    output_dir: str = "runs/default"
    cone: ConeConfig = Field(default_factory=ConeConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    angles: AngleConfig = Field(default_factory=AngleConfig)
    embed: EmbedConfig = Field(default_factory=EmbedConfig)
    reifenberg: ReifenbergConfig = Field(default_factory=ReifenbergConfig)


class Manifest(BaseModel):
    """Provenance of a built cone space."""
    config_hash: str
    version: str
    command: str
    reference: Literal["flat", "warped"]
    points: int
    segments: int
    config: RunConfig
    artifacts: List[str] = Field(default_factory=list)
