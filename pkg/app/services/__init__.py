"""Reifenberg Lab Services"""
from app.services.metric_core import FiniteMetricSpace, PointedBall, validate_metric
from app.services.sphere_flow import DiffeoFamily, build_pair_schedule, build_schedule
from app.services.cone_space import ConeSpace, angle_trace, mesh_cone
from app.services.embedding import EmbeddingGram, build_gram
from app.services.gh_distance import gh_bounds
from app.services.reifenberg import reifenberg_classify, uniform_profile

__all__ = [
    "FiniteMetricSpace",
    "PointedBall",
    "validate_metric",
    "DiffeoFamily",
    "build_pair_schedule",
    "build_schedule",
    "ConeSpace",
    "angle_trace",
    "mesh_cone",
    "EmbeddingGram",
    "build_gram",
    "gh_bounds",
    "reifenberg_classify",
    "uniform_profile",
]
