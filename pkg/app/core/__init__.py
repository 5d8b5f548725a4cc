"""Core module for the Reifenberg lab"""
from app.core.config import settings
from app.core.errors import LabError, ValidationFailure, ResourceLimitError, MissingArtifactError

__all__ = [
    "settings",
    "LabError",
    "ValidationFailure",
    "ResourceLimitError",
    "MissingArtifactError",
]
