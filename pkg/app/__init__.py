"""Reifenberg lab: warped cones, truncated-distance embeddings and GH classification."""

__version__ = "1.0.0"
