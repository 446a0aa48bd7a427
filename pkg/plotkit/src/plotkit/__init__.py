"""Figure renderer for sweep harness outputs.

Consumes the harness's documented file formats (sweep.csv, snapshot CSVs,
rate.json) and renders profile overlays, shifted-variable profiles,
convergence curves, and 2D field heatmaps, deterministically.
"""

from .figures import KINDS, FigureSpec, load_figure_spec, render
from .io import SchemaMismatchError, read_rate, read_snapshot, read_sweep

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "FigureSpec",
    "SchemaMismatchError",
    "load_figure_spec",
    "read_rate",
    "read_snapshot",
    "read_sweep",
    "render",
]
