"""Figure rendering for experiment CSVs."""

from .render import FigureSpec, SchemaError, build_figure, detectability_threshold, render

__all__ = [
    "FigureSpec",
    "SchemaError",
    "build_figure",
    "detectability_threshold",
    "render",
]
