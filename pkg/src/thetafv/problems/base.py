from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..mesh import Grid


class NoReferenceError(LookupError):
    """The problem has no analytic reference for the requested time."""


@dataclass
class Jacobian:
    """Per-cell couplings of ``A = -dH/dq``, each of shape ``(N, M, M)``.

    ``sub[j]`` couples cell ``j`` to ``j-1`` and ``sup[j]`` to ``j+1``;
    ``sub[0]`` and ``sup[N-1]`` are the couplings to fixed boundary data
    and never enter an assembled matrix.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def cell(self, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.sub[j], self.diag[j], self.sup[j]


class Problem(ABC):
    """A semi-discrete conservation law ``dq/dt = H(q)``.

    ``H`` is written in flux form, ``H_j = -(F_{j+1/2} a_{j+1/2}
    - F_{j-1/2} a_{j-1/2}) / vol_j + S_j``, so interior fluxes telescope.
    """

    variable_names: tuple[str, ...] = ("q",)
    #: True when boundary data depend on time.
    time_dependent: bool = False
    #: True when the Jacobian does not depend on the state.
    linear: bool = False
    #: True when ``analytic_reference`` is a profile the solution should match.
    comparable_reference: bool = True

    @property
    def n_vars(self) -> int:
        return len(self.variable_names)

    @abstractmethod
    def initial_state(self, grid: Grid) -> np.ndarray:
        ...

    @abstractmethod
    def face_fluxes(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        """Fluxes through every face, multiplied by the face area, shape (N+1, M)."""

    def sources(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        return np.zeros_like(q)

    def spatial_operator(self, q: np.ndarray, grid: Grid, t: float = 0.0) -> np.ndarray:
        flux = self.face_fluxes(q, grid, t)
        return -np.diff(flux, axis=0) / grid.volumes[:, None] + self.sources(q, grid, t)

    @abstractmethod
    def jacobian_contributions(self, q: np.ndarray, grid: Grid, t: float = 0.0) -> Jacobian:
        ...

    def wave_speed(self, q: np.ndarray, grid: Grid) -> np.ndarray:
        return np.zeros(grid.n_cells)

    def diffusivity(self, grid: Grid) -> np.ndarray:
        return np.zeros(grid.n_cells)

    def apply_boundary_conditions(self, q: np.ndarray, t: float = 0.0) -> np.ndarray:
        return q

    def admissible(self, q: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(q)))

    def analytic_reference(self, grid: Grid, t: float | None = None) -> np.ndarray:
        raise NoReferenceError(f"{type(self).__name__} has no analytic reference")
