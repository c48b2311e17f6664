from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import TriDiagonal, solve_tridiagonal
from ..mesh import Grid
from .base import Jacobian, NoReferenceError, Problem


@dataclass
class DiffusionProblem(Problem):
    """Heat diffusion with a unit source and Dirichlet boundaries.

    ``dT/dt = div(nu grad T) + source`` with ``T = t_boundary`` on both
    boundary faces. The boundary values enter through a ghost center half
    a cell outside the domain.
    """

    nu: float = 1e-2
    source: float = 1.0
    t_boundary: float = 1.0
    amplitude: float = 10.0
    sharpness: float = 10.0

    variable_names = ("T",)
    linear = True

    def __post_init__(self) -> None:
        if not self.nu > 0.0:
            raise ValueError("nu must be positive")

    def initial_state(self, grid: Grid) -> np.ndarray:
        r0 = 0.5 * (grid.interfaces[0] + grid.interfaces[-1])
        t0 = self.amplitude * np.exp(-self.sharpness * (grid.centers - r0) ** 2)
        return t0[:, None]

    def face_fluxes(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        temp = q[:, 0]
        padded = np.concatenate(([self.t_boundary], temp, [self.t_boundary]))
        grad = np.diff(padded) / grid.center_spacings
        return (-self.nu * grid.face_areas * grad)[:, None]

    def sources(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        return np.full_like(q, self.source)

    def couplings(self, grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Scalar ``(S_lower, D, S_upper)`` per cell."""
        g = self.nu * grid.face_areas / grid.center_spacings
        lower = -g[:-1] / grid.volumes
        upper = -g[1:] / grid.volumes
        return lower, -lower - upper, upper

    def jacobian_contributions(self, q: np.ndarray, grid: Grid, t: float = 0.0) -> Jacobian:
        cached = getattr(self, "_jacobian_cache", None)
        if cached is not None and cached[0] is grid:
            return cached[1]
        lower, diag, upper = self.couplings(grid)
        shape = (grid.n_cells, 1, 1)
        jac = Jacobian(lower.reshape(shape), diag.reshape(shape), upper.reshape(shape))
        self._jacobian_cache = (grid, jac)
        return jac

    def diffusivity(self, grid: Grid) -> np.ndarray:
        return np.full(grid.n_cells, self.nu)

    def stationary_solution(self, grid: Grid) -> np.ndarray:
        """Steady state from one direct tridiagonal solve of ``H(T) = 0``."""
        lower, diag, upper = self.couplings(grid)
        rhs = np.full(grid.n_cells, self.source)
        rhs[0] -= lower[0] * self.t_boundary
        rhs[-1] -= upper[-1] * self.t_boundary
        return solve_tridiagonal(TriDiagonal(lower[1:], diag, upper[:-1]), rhs)[:, None]

    def analytic_reference(self, grid: Grid, t: float | None = None) -> np.ndarray:
        """Planar steady parabola through the two boundary values.

        Close to the spherical steady state when the domain sits far from
        the origin.
        """
        if t is not None and np.isfinite(t):
            raise NoReferenceError("only the steady state (t = inf) is known")
        r_in, r_out = grid.interfaces[0], grid.interfaces[-1]
        r = grid.centers
        parabola = -self.source / (2.0 * self.nu) * (r - r_in) * (r - r_out) + self.t_boundary
        return parabola[:, None]
