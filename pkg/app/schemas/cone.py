"""
Cone Space Report Schemas
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# =============================================================================
# Warp profile
# =============================================================================


class ProfileCheck(BaseModel):
    """Asymptotic checks of a warp profile on a log-spaced radius grid."""
    grid_points: int
    h_small: float
    h_large: float
    rf_small: float
    rf_large: float
    f_small: float
    f_large: float
    passed: bool
    failures: List[str] = Field(default_factory=list)


# =============================================================================
# Cone mesh
# =============================================================================


class ConeSummary(BaseModel):
    """Shape of a meshed cone and its radial-exactness measurement."""
    points: int
    shells: int
    sphere_res: int
    r_min: float
    r_max: float
    radial_spacing: str
    h_inf: float
    freeze_radius: Optional[float] = None
    reference: str = "warped"
    max_radial_error: Optional[float] = None


class AnglePoint(BaseModel):
    """One row of an angle trace."""
    t: float
    s: float
    angle_mesh: float
    angle_chord: float
    active_target: Optional[float] = None
    level: Optional[int] = None


class LevelHits(BaseModel):
    level: Optional[int] = None
    t_values: List[float] = Field(default_factory=list)


class TargetAttainment(BaseModel):
    """Trace rows whose angle lies within tol of a target, grouped by schedule level."""
    target: float
    tol: float
    column: str = "angle_chord"
    hits: List[float] = Field(default_factory=list)
    levels: List[LevelHits] = Field(default_factory=list)
    missing_levels: List[int] = Field(default_factory=list, description="Levels in range with no hit")

    @property
    def attained(self) -> bool:
        return bool(self.hits)


class AngleSummary(BaseModel):
    """Angle experiment outcome."""
    rows: int
    oscillation_mesh: float
    oscillation_chord: float
    attainment: List[TargetAttainment] = Field(default_factory=list)
    levels_in_range: List[int] = Field(default_factory=list)


# =============================================================================
# Curvature and drift
# =============================================================================


class RicciSample(BaseModel):
    """Ricci eigenvalue range at one chart point."""
    r: float
    theta: float
    phi: float
    min_eigenvalue: float
    max_eigenvalue: float


class RicciReport(BaseModel):
    """Ricci eigenvalue spot-check in (r, theta, phi) coordinates."""
    samples: int
    fd_step: float
    min_eigenvalue: float
    max_eigenvalue: float
    resampled: int = 0
    points: List[RicciSample] = Field(default_factory=list)


class HolderDriftReport(BaseModel):
    """Dyadic angle drift of two geodesics from the origin under a Holder metric."""
    beta: float
    amplitude: float
    t_grid: List[float]
    angles: List[float]
    drifts: List[float]
    exponent: Optional[float] = None
    constant: Optional[float] = None
    extra: Dict[str, float] = Field(default_factory=dict)
