"""
Sphere Flow Report Schemas
"""
from typing import Optional, List, Tuple

from pydantic import BaseModel, Field


class ScheduleEntry(BaseModel):
    """One flow segment of the covering schedule."""
    level: int = Field(..., ge=1)
    pair: Tuple[int, int]
    sample_ids: Optional[Tuple[int, int]] = None
    theta: float = Field(..., ge=0)
    eps: float = Field(..., gt=0)
    interval: Tuple[float, float]
    midpoint: float
    achieved: float
    error: float

    @property
    def pair_i(self) -> int:
        return self.pair[0]

    @property
    def pair_j(self) -> int:
        return self.pair[1]

    @property
    def interval_start(self) -> float:
        return self.interval[0]

    @property
    def interval_end(self) -> float:
        return self.interval[1]


class SkippedPair(BaseModel):
    """Net pair with no admissible great circle at this level."""
    level: int
    pair: Tuple[int, int]
    distance: float
    reason: str


class DerivativeBounds(BaseModel):
    """Measured sup-norms of the parameter derivatives of g_s (g_s norm)."""
    d_s: float = Field(..., ge=0)
    d_ss: float = Field(..., ge=0)
    grad_d_s: float = Field(..., ge=0)
    sites: int = 0
    s_samples: int = 0

    @property
    def worst(self) -> float:
        return max(self.d_s, self.d_ss, self.grad_d_s)


class ScheduleSummary(BaseModel):
    """Schedule construction outcome."""
    levels: int
    theta_grid: int
    segments: int
    skipped: int
    stretch: float
    total_length: float
    raw_bounds: Optional[DerivativeBounds] = None
    bounds_after: Optional[DerivativeBounds] = None
    max_target_error: float = 0.0


class VolumeCheck(BaseModel):
    """Volume-form preservation measurements at one parameter value."""
    s: float
    max_jacobian_error: float
    total_area_change: float
    max_cell_change: float = 0.0
    points: int
    cells: int


class IsometryCheck(BaseModel):
    """Flow-map distances against Dijkstra on the meshed pullback tensor."""
    s: float
    pairs: int
    max_relative_error: float
    mean_relative_error: float
