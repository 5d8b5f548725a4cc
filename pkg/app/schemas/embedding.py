"""
Embedding Report Schemas
"""
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class DistortionReport(BaseModel):
    """Bi-Lipschitz constants of x -> rho_x over all pairs of a subset."""
    subset_size: int
    pairs: int
    c_up: float = Field(..., description="max ||rho_x - rho_y|| / d(x, y)")
    c_lo: float = Field(..., description="max min(d(x, y), 1) / ||rho_x - rho_y||")
    up_witness: Optional[Tuple[int, int]] = None
    lo_witness: Optional[Tuple[int, int]] = None

    @property
    def product(self) -> float:
        return self.c_up * self.c_lo


class BoundCheck(BaseModel):
    """Violations of one of the two Lipschitz bounds over all checked pairs."""
    bound: str
    pairs: int
    violations: int
    worst_ratio: float
    worst_pair: Optional[Tuple[int, int]] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0


class ProjectionReport(BaseModel):
    """Spectral truncation of the Gram matrix."""
    energy: float
    dimension: int
    captured: float
    max_increase: float
    before: DistortionReport
    after: DistortionReport


class NearPairEstimate(BaseModel):
    """Expansion-set lower estimate against the measured norm for d(x, y) <= r."""
    x: int
    y: int
    distance: float
    expansion_weight: float
    estimate: float
    measured: float

    @property
    def holds(self) -> bool:
        return self.measured >= self.estimate


class EmbeddingSummary(BaseModel):
    """Everything the embed command reports."""
    space: str
    points: int
    r: float
    truncation: str
    interior: int
    upper: BoundCheck
    far_pair: BoundCheck
    distortion: DistortionReport
    projection: Optional[ProjectionReport] = None
    near_pairs: List[NearPairEstimate] = Field(default_factory=list)
    contraction_ratios: List[float] = Field(default_factory=list)
