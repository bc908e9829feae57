"""Figure rendering for stemfluff sweep output.

This package knows nothing about the simulator: it consumes the harness's
CSV files and ``*.manifest.json`` descriptions and produces deterministic
PNG figures.  See :mod:`stemfluff_figures.spec` for the figure description
format and :mod:`stemfluff_figures.render` for the drawing contract.
"""

from .cli import render_preset
from .render import (EmptyDataError, MissingColumnError, RenderResult,
                     aggregate, band_curves, render)
from .spec import FigureSpec, SpecError, load_spec, spec_from_manifest

__all__ = [
    "EmptyDataError",
    "FigureSpec",
    "MissingColumnError",
    "RenderResult",
    "SpecError",
    "aggregate",
    "band_curves",
    "load_spec",
    "render",
    "render_preset",
    "spec_from_manifest",
]
