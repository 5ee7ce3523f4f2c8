"""Render sembn pipeline JSON artifacts as figures.

The renderer consumes only the serialized artifacts (contour grids,
information-gain edge lists, conditional profiles, estimator metric
comparisons) and never computes statistics of its own.
"""
from .schemas import SchemaMismatch, detect_kind, load_artifact
from .figures import (
    render_contours,
    render_flow,
    render_metric_bars,
    render_profiles,
)

__version__ = "0.1.0"

__all__ = [
    "SchemaMismatch",
    "detect_kind",
    "load_artifact",
    "render_contours",
    "render_flow",
    "render_metric_bars",
    "render_profiles",
]
