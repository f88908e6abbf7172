"""Figure regeneration for legvp diagnostics and snapshots."""

from .figures import KINDS, FigureSpec, PlotError, load_csv, load_snapshot, render

__all__ = ["KINDS", "FigureSpec", "PlotError", "load_csv", "load_snapshot", "render"]
__version__ = "0.1.0"
