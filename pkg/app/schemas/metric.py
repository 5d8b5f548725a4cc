"""
Finite Metric Space Report Schemas
"""
from typing import Optional, List, Tuple

from pydantic import BaseModel, Field


# =====================================================
# Metric Axiom Validation
# =====================================================

class ValidationReport(BaseModel):
    """Outcome of checking the metric axioms on a distance matrix."""
    point_count: int = Field(..., ge=0)
    tol: float = Field(..., ge=0)
    passed: bool
    worst_triangle_violation: float = 0.0
    worst_triangle: Optional[Tuple[int, int, int]] = None
    worst_asymmetry: float = 0.0
    nonzero_diagonal: List[int] = Field(default_factory=list)
    negative_entries: int = 0
    triples_checked: int = 0
    exhaustive: bool = True


# =====================================================
# Reverse Triangle Propagation
# =====================================================

class PropagationPoint(BaseModel):
    """Reverse-triangle check at one later point of a geodesic."""
    point: int
    arc_length: float
    gap: float
    required: float
    passed: bool


class PropagationReport(BaseModel):
    """Per-point verdicts along the geodesic beyond z."""
    x: int
    y: int
    z: int
    eps: float
    slack: float = 0.0
    points: List[PropagationPoint] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def failures(self) -> List[PropagationPoint]:
        return [p for p in self.points if not p.passed]


# =====================================================
# Nets
# =====================================================

class NetResult(BaseModel):
    """Greedy farthest-point net."""
    indices: List[int]
    covering_radius: float = Field(..., ge=0)
