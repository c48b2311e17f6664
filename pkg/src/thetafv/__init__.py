"""Theta-scheme finite-volume solvers with a selectable coefficient-matrix truncation."""

from .driver import RunOptions, RunResult, run_solver
from .linalg import MatrixLevel
from .mesh import Geometry, Grid, build_grid, cell_metrics
from .scheme import SchemeConfig, State, step
from .stepping import CflController, History, Outcome, Tolerances

__version__ = "0.1.0"

__all__ = [
    "CflController",
    "Geometry",
    "Grid",
    "History",
    "MatrixLevel",
    "Outcome",
    "RunOptions",
    "RunResult",
    "SchemeConfig",
    "State",
    "Tolerances",
    "build_grid",
    "cell_metrics",
    "run_solver",
    "step",
]
