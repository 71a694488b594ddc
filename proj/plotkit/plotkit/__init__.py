"""Figures from racing run artifacts (CSV and JSON only)."""

from .artifacts import ArtifactError, load_run
from .cli import main, plot_run

__all__ = ["ArtifactError", "load_run", "main", "plot_run"]
