"""One-dimensional finite-volume grids in planar or spherical geometry.

Cells are indexed in increasing radius. Cell ``j`` is bounded by the
interfaces ``r[j]`` and ``r[j+1]`` and carries its unknowns at the
arithmetic midpoint of the two.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class Geometry(str, enum.Enum):
    PLANAR = "planar"
    SPHERICAL = "spherical"


@dataclass(frozen=True)
class Grid:
    """Immutable 1D finite-volume mesh.

    Attributes
    ----------
    geometry : Geometry
    interfaces : ndarray, shape (N+1,)
        Strictly increasing face coordinates.
    centers : ndarray, shape (N,)
    volumes : ndarray, shape (N,)
        Cell length (planar) or ``(r_{j+1}^3 - r_j^3)/3`` (spherical,
        per unit solid angle).
    center_spacings : ndarray, shape (N+1,)
        Distance between the centers adjacent to each face. The two
        boundary faces use the half-cell distance from the first/last
        center to the boundary.
    """

    geometry: Geometry
    interfaces: np.ndarray
    centers: np.ndarray = field(init=False)
    volumes: np.ndarray = field(init=False)
    center_spacings: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        r = np.array(self.interfaces, dtype=float)
        if r.ndim != 1 or r.size < 4:
            raise ValueError("a grid needs at least 3 cells")
        if not np.all(np.isfinite(r)):
            raise ValueError("interfaces must be finite")
        if np.any(np.diff(r) <= 0.0):
            raise ValueError("interfaces must be strictly increasing")
        geometry = Geometry(self.geometry)
        if geometry is Geometry.SPHERICAL and r[0] <= 0.0:
            raise ValueError("spherical grids need r_in > 0")
        r.setflags(write=False)

        centers = 0.5 * (r[:-1] + r[1:])
        if geometry is Geometry.SPHERICAL:
            volumes = (r[1:] ** 3 - r[:-1] ** 3) / 3.0
        else:
            volumes = np.diff(r)
        spacings = np.empty(r.size)
        spacings[1:-1] = np.diff(centers)
        spacings[0] = centers[0] - r[0]
        spacings[-1] = r[-1] - centers[-1]
        for a in (centers, volumes, spacings):
            a.setflags(write=False)

        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "interfaces", r)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "volumes", volumes)
        object.__setattr__(self, "center_spacings", spacings)

    @property
    def n_cells(self) -> int:
        return self.centers.size

    @cached_property
    def widths(self) -> np.ndarray:
        """Cell widths ``r_{j+1} - r_j``."""
        w = np.diff(self.interfaces)
        w.setflags(write=False)
        return w

    @cached_property
    def face_areas(self) -> np.ndarray:
        """Face measure: 1 in planar geometry, ``r^2`` in spherical."""
        if self.geometry is Geometry.SPHERICAL:
            a = self.interfaces**2
        else:
            a = np.ones_like(self.interfaces)
        a.setflags(write=False)
        return a

    def total_volume(self) -> float:
        r0, r1 = self.interfaces[0], self.interfaces[-1]
        if self.geometry is Geometry.SPHERICAL:
            return (r1**3 - r0**3) / 3.0
        return r1 - r0


def build_grid(
    geometry: Geometry | str,
    r_in: float,
    r_out: float,
    n_cells: int,
    stretch: float = 1.0,
) -> Grid:
    """Build a uniform or geometrically stretched grid on ``[r_in, r_out]``.

    With ``stretch > 1`` consecutive cell widths grow by the factor
    ``stretch``, so the finest cell sits at ``r_in``.
    """
    geometry = Geometry(geometry)
    if n_cells < 3:
        raise ValueError(f"n_cells must be >= 3, got {n_cells}")
    if not r_out > r_in:
        raise ValueError("domain length must be positive")
    if geometry is Geometry.SPHERICAL and r_in <= 0.0:
        raise ValueError("spherical grids need r_in > 0")
    if stretch < 1.0:
        raise ValueError(f"stretch must be >= 1, got {stretch}")

    length = r_out - r_in
    if stretch == 1.0:
        r = r_in + length * np.arange(n_cells + 1) / n_cells
    else:
        widths = stretch ** np.arange(n_cells)
        offsets = np.concatenate(([0.0], np.cumsum(widths)))
        r = r_in + length * offsets / offsets[-1]
    r[-1] = r_out
    return Grid(geometry, r)


def cell_metrics(grid: Grid, j: int) -> tuple[float, float, float, float, float]:
    """Return ``(vol_j, dr_left, dr_right, r_j, r_{j+1})`` for cell ``j``.

    ``dr_left`` and ``dr_right`` are the center spacings across the lower
    and upper faces of the cell.
    """
    n = grid.n_cells
    if not 0 <= j < n:
        raise IndexError(f"cell index {j} out of range [0, {n})")
    return (
        float(grid.volumes[j]),
        float(grid.center_spacings[j]),
        float(grid.center_spacings[j + 1]),
        float(grid.interfaces[j]),
        float(grid.interfaces[j + 1]),
    )
