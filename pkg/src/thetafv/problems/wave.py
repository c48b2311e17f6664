from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..mesh import Geometry, Grid
from .base import Jacobian, Problem


class AdvectionScheme(enum.IntEnum):
    """Face reconstruction order for the advective flux."""

    FIRST_ORDER_UPWIND = 1
    THIRD_ORDER_UPWIND_BIASED = 3


# kappa = 1/3 upwind-biased face value from cells (j-1, j, j+1)
KAPPA3_WEIGHTS = (-1.0 / 6.0, 5.0 / 6.0, 1.0 / 3.0)

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(6)


def upwind_face_values(rho: np.ndarray, ghost: float, scheme: AdvectionScheme) -> np.ndarray:
    """Reconstructed values on the interior faces 1..N-1 for a positive velocity.

    ``ghost`` is the cell value upstream of cell 0, needed by the
    third-order stencil at face 1.
    """
    if scheme is AdvectionScheme.FIRST_ORDER_UPWIND:
        return rho[:-1].copy()
    upstream = np.concatenate(([ghost], rho[:-2]))
    w0, w1, w2 = KAPPA3_WEIGHTS
    return w0 * upstream + w1 * rho[:-1] + w2 * rho[1:]


@dataclass
class WaveProblem(Problem):
    """Passive transport ``d(rho)/dt + div(rho U) = 0`` at constant ``U > 0``.

    The inflow face and the upstream ghost cell take the exact translated
    profile; the outflow face is first-order upwind.
    """

    velocity: float = 1.0
    background: float = 1.0
    amplitude: float = 0.5
    pulse_start: float = 100.5
    pulse_width: float = 1.0
    shape: str = "sine"
    scheme: AdvectionScheme = AdvectionScheme.THIRD_ORDER_UPWIND_BIASED

    variable_names = ("rho",)
    time_dependent = True
    linear = True

    def __post_init__(self) -> None:
        if not self.velocity > 0.0:
            raise ValueError("velocity must be positive")
        self.scheme = AdvectionScheme(self.scheme)
        if self.shape not in ("sine", "gaussian"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")

    def profile(self, x: np.ndarray) -> np.ndarray:
        """Initial density as a function of radius."""
        x = np.asarray(x, dtype=float)
        s = (x - self.pulse_start) / self.pulse_width
        if self.shape == "sine":
            bump = np.where((s >= 0.0) & (s <= 1.0), np.sin(2.0 * np.pi * s), 0.0)
        else:
            bump = np.exp(-((s - 0.5) / 0.2) ** 2)
        return self.background + self.amplitude * bump

    def exact(self, r: np.ndarray, t: float, geometry: Geometry) -> np.ndarray:
        """Point values of the exact solution at time ``t``."""
        r = np.asarray(r, dtype=float)
        foot = r - self.velocity * t
        rho = self.profile(foot)
        if geometry is Geometry.SPHERICAL:
            rho = rho * (foot / r) ** 2
        return rho

    def cell_averages(self, grid: Grid, t: float) -> np.ndarray:
        lo, hi = grid.interfaces[:-1], grid.interfaces[1:]
        half = 0.5 * (hi - lo)
        r = 0.5 * (hi + lo)[:, None] + half[:, None] * _GAUSS_X[None, :]
        weight = r**2 if grid.geometry is Geometry.SPHERICAL else np.ones_like(r)
        vals = self.exact(r, t, grid.geometry)
        return (vals * weight * _GAUSS_W).sum(axis=1) / (weight * _GAUSS_W).sum(axis=1)

    def initial_state(self, grid: Grid) -> np.ndarray:
        return self.cell_averages(grid, 0.0)[:, None]

    def analytic_reference(self, grid: Grid, t: float | None = None) -> np.ndarray:
        return self.cell_averages(grid, 0.0 if t is None else t)[:, None]

    def face_fluxes(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        rho = q[:, 0]
        r = grid.interfaces
        ghost_center = r[0] - 0.5 * (r[1] - r[0])
        ghost = float(self.exact(ghost_center, t, grid.geometry))
        face = np.empty(grid.n_cells + 1)
        face[0] = self.exact(r[0], t, grid.geometry)
        face[1:-1] = upwind_face_values(rho, ghost, self.scheme)
        face[-1] = rho[-1]
        return (grid.face_areas * self.velocity * face)[:, None]

    def jacobian_contributions(self, q: np.ndarray, grid: Grid, t: float = 0.0) -> Jacobian:
        # first-order upwind linearization regardless of the residual's order
        a = grid.face_areas * self.velocity
        n = grid.n_cells
        shape = (n, 1, 1)
        diag = (a[1:] / grid.volumes).reshape(shape)
        sub = (-a[:-1] / grid.volumes).reshape(shape)
        return Jacobian(sub, diag, np.zeros(shape))

    def wave_speed(self, q: np.ndarray, grid: Grid) -> np.ndarray:
        return np.full(grid.n_cells, abs(self.velocity))


def pulse_amplitude(rho: np.ndarray) -> float:
    """Half the peak-to-peak excursion of a profile."""
    rho = np.asarray(rho).ravel()
    return 0.5 * float(rho.max() - rho.min())
