"""
Gromov-Hausdorff / Reifenberg Report Schemas
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


class GHBounds(BaseModel):
    """Certified lower and heuristic upper bound on d_GH."""
    lower: float = Field(..., ge=0)
    upper: float = Field(..., ge=0)
    diameter_bound: float = 0.0
    eccentricity_bound: float = 0.0
    value_set_bound: float = 0.0
    seeds: int = 0


class ScaleVerdict(BaseModel):
    """GH bracket of one ball against the Euclidean ball of the same radius."""
    scale: float
    threshold: float
    lower: float
    upper: float
    ball_size: int
    reference_size: int
    verdict: Verdict


class ReifenbergProfile(BaseModel):
    """Per-scale classification of one point."""
    point: int
    eps: float
    r: float
    euclid_dim: int
    spacing: float
    reference_kind: str
    scales: List[ScaleVerdict] = Field(default_factory=list)
    skipped_scales: List[float] = Field(default_factory=list)
    verdict: Verdict


class UniformProfileRow(BaseModel):
    """Largest tested r at which every sampled point passes for this eps."""
    eps: float
    r: Optional[float] = None
    points: int


class ClassificationRow(BaseModel):
    """One line of the classification summary CSV."""
    point: int
    eps: float
    r: float
    verdict: Verdict
