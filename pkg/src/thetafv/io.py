"""CSV output for cell profiles."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .mesh import Grid

PROFILE_PREFIX = ("cell_index", "r_center")


def write_profile_csv(path: str | Path, grid: Grid, q: np.ndarray, variable_names: Sequence[str]) -> None:
    """One row per cell: index, center radius, then one column per variable."""
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    if q.shape != (grid.n_cells, len(variable_names)):
        raise ValueError(f"profile shape {q.shape} does not match the grid and variables")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*PROFILE_PREFIX, *variable_names])
        for j in range(grid.n_cells):
            writer.writerow([j, repr(float(grid.centers[j])), *(repr(float(v)) for v in q[j])])


def read_profile_csv(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Return ``(variable_names, r_center, values)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[:2]) != PROFILE_PREFIX:
            raise ValueError(f"{path} is not a profile CSV")
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return header[2:], data[:, 1], data[:, 2:]
