"""Batch figure rendering for trotterlab sweep outputs."""

from trotterlab_figures.plots import FigureSpec, build_figure, render

__all__ = ["FigureSpec", "build_figure", "render"]

__version__ = "0.1.0"
