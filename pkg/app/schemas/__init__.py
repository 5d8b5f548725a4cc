"""Reifenberg Lab Schemas"""
from app.schemas.metric import (
    ValidationReport,
    PropagationPoint,
    PropagationReport,
    NetResult,
)
from app.schemas.flow import (
    ScheduleEntry,
    SkippedPair,
    DerivativeBounds,
    ScheduleSummary,
    VolumeCheck,
    IsometryCheck,
)
from app.schemas.cone import (
    ProfileCheck,
    ConeSummary,
    AnglePoint,
    TargetAttainment,
    AngleSummary,
    RicciReport,
    HolderDriftReport,
)
from app.schemas.embedding import (
    DistortionReport,
    BoundCheck,
    ProjectionReport,
    NearPairEstimate,
    EmbeddingSummary,
)
from app.schemas.reifenberg import (
    Verdict,
    GHBounds,
    ScaleVerdict,
    ReifenbergProfile,
    UniformProfileRow,
    ClassificationRow,
)
from app.schemas.run import RunConfig, Manifest

__all__ = [
    "ValidationReport",
    "PropagationPoint",
    "PropagationReport",
    "NetResult",
    "ScheduleEntry",
    "SkippedPair",
    "DerivativeBounds",
    "ScheduleSummary",
    "VolumeCheck",
    "IsometryCheck",
    "ProfileCheck",
    "ConeSummary",
    "AnglePoint",
    "TargetAttainment",
    "AngleSummary",
    "RicciReport",
    "HolderDriftReport",
    "DistortionReport",
    "BoundCheck",
    "ProjectionReport",
    "NearPairEstimate",
    "EmbeddingSummary",
    "Verdict",
    "GHBounds",
    "ScaleVerdict",
    "ReifenbergProfile",
    "UniformProfileRow",
    "ClassificationRow",
    "RunConfig",
    "Manifest",
]
