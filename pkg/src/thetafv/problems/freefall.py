from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mesh import Grid
from .base import Jacobian, Problem


@dataclass
class FreeFallProblem(Problem):
    """Adiabatic, spherically symmetric inflow onto a point mass.

    Unknowns per cell are density, radial momentum density and internal
    energy density. Units take ``GM = 1``. The outer ghost state is the
    fixed inflow (uniform density and temperature, free-fall speed); the
    inner ghost copies the first cell, so gas leaves the grid freely.

    ``temperature`` is ``p / rho``. The HLL flux reduces to pure upwinding
    once the flow is supersonic.
    """

    gm: float = 1.0
    gamma: float = 5.0 / 3.0
    rho_out: float = 1.0
    temperature_out: float = 1e-4
    floor_fraction: float = 1e-10
    gravity: bool = True

    variable_names = ("rho", "mom", "e")
    # the reference only carries the power-law shapes
    comparable_reference = False

    @property
    def e_out(self) -> float:
        return self.rho_out * self.temperature_out / (self.gamma - 1.0)

    @property
    def e_floor(self) -> float:
        return self.floor_fraction * self.e_out

    def inflow_state(self, grid: Grid) -> np.ndarray:
        u = -np.sqrt(2.0 * self.gm / grid.interfaces[-1])
        return np.array([self.rho_out, self.rho_out * u, self.e_out])

    def initial_state(self, grid: Grid) -> np.ndarray:
        q = np.zeros((grid.n_cells, 3))
        q[:, 0] = self.rho_out
        q[:, 2] = self.e_out
        return q

    def pressure(self, q: np.ndarray) -> np.ndarray:
        return (self.gamma - 1.0) * q[..., 2]

    def sound_speed(self, q: np.ndarray) -> np.ndarray:
        return np.sqrt(self.gamma * self.pressure(q) / q[..., 0])

    def physical_flux(self, q: np.ndarray) -> np.ndarray:
        rho, mom, e = q[..., 0], q[..., 1], q[..., 2]
        u = mom / rho
        return np.stack([mom, mom * u + self.pressure(q), e * u], axis=-1)

    def flux_jacobian(self, q: np.ndarray) -> np.ndarray:
        rho, mom, e = q[..., 0], q[..., 1], q[..., 2]
        u = mom / rho
        a = np.zeros(q.shape[:-1] + (3, 3))
        a[..., 0, 1] = 1.0
        a[..., 1, 0] = -u * u
        a[..., 1, 1] = 2.0 * u
        a[..., 1, 2] = self.gamma - 1.0
        a[..., 2, 0] = -e * u / rho
        a[..., 2, 1] = e / rho
        a[..., 2, 2] = u
        return a

    def _face_states(self, q: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        padded = np.vstack([q[:1], q, self.inflow_state(grid)[None, :]])
        return padded[:-1], padded[1:]

    def _hll_speeds(self, left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ul, ur = left[:, 1] / left[:, 0], right[:, 1] / right[:, 0]
        cl, cr = self.sound_speed(left), self.sound_speed(right)
        s_left = np.minimum(np.minimum(ul - cl, ur - cr), 0.0)
        s_right = np.maximum(np.maximum(ul + cl, ur + cr), 0.0)
        return s_left, s_right

    def face_fluxes(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        left, right = self._face_states(q, grid)
        sl, sr = self._hll_speeds(left, right)
        fl, fr = self.physical_flux(left), self.physical_flux(right)
        width = (sr - sl)[:, None]
        flux = (sr[:, None] * fl - sl[:, None] * fr + (sl * sr)[:, None] * (right - left)) / width
        return grid.face_areas[:, None] * flux

    def _face_velocity(self, q: np.ndarray, grid: Grid) -> np.ndarray:
        left, right = self._face_states(q, grid)
        return 0.5 * (left[:, 1] / left[:, 0] + right[:, 1] / right[:, 0])

    def sources(self, q: np.ndarray, grid: Grid, t: float) -> np.ndarray:
        area = grid.face_areas
        vol = grid.volumes
        p = self.pressure(q)
        s = np.zeros_like(q)
        # p div(I) in spherical coordinates; cancels the p-flux difference for uniform p
        s[:, 1] = p * np.diff(area) / vol
        if self.gravity:
            s[:, 1] -= q[:, 0] * self.gm / grid.centers**2
        div_u = np.diff(area * self._face_velocity(q, grid)) / vol
        s[:, 2] = -p * div_u
        return s

    def jacobian_contributions(self, q: np.ndarray, grid: Grid, t: float = 0.0) -> Jacobian:
        n = grid.n_cells
        area = grid.face_areas
        vol = grid.volumes
        left, right = self._face_states(q, grid)
        sl, sr = self._hll_speeds(left, right)
        width = sr - sl
        eye = np.eye(3)
        # frozen-speed HLL derivatives w.r.t. the left and right states of each face
        d_left = (sr[:, None, None] * self.flux_jacobian(left) - (sl * sr)[:, None, None] * eye) / width[:, None, None]
        d_right = (-sl[:, None, None] * self.flux_jacobian(right) + (sl * sr)[:, None, None] * eye) / width[:, None, None]
        d_left *= area[:, None, None]
        d_right *= area[:, None, None]

        inv_vol = (1.0 / vol)[:, None, None]
        # A = -dH/dq with H_j = -(F_{j+1} - F_j)/vol_j + S_j
        diag = (d_left[1:] - d_right[:-1]) * inv_vol
        sub = -d_left[:-1] * inv_vol
        sup = d_right[1:] * inv_vol
        # the inner ghost is a copy of cell 0
        diag[0] += sub[0]
        sub[0] = 0.0

        rho, mom, e = q[:, 0], q[:, 1], q[:, 2]
        u = mom / rho
        p = self.pressure(q)
        g1 = self.gamma - 1.0
        darea = np.diff(area) / vol
        div_u = np.diff(area * self._face_velocity(q, grid)) / vol
        own = 0.5 * darea
        ds = np.zeros((n, 3, 3))
        ds[:, 1, 2] = g1 * darea
        if self.gravity:
            ds[:, 1, 0] = -self.gm / grid.centers**2
        ds[:, 2, 2] = -g1 * div_u
        ds[:, 2, 1] = -p * own / rho
        ds[:, 2, 0] = p * own * u / rho
        diag -= ds
        return Jacobian(sub, diag, sup)

    def wave_speed(self, q: np.ndarray, grid: Grid) -> np.ndarray:
        # fastest signal through either face, so the fixed inflow state counts too
        left, right = self._face_states(q, grid)
        sl, sr = self._hll_speeds(left, right)
        face = np.maximum(-sl, sr)
        return np.maximum(face[:-1], face[1:])

    def apply_boundary_conditions(self, q: np.ndarray, t: float = 0.0) -> np.ndarray:
        if np.any(q[:, 2] < self.e_floor):
            q = q.copy()
            q[:, 2] = np.maximum(q[:, 2], self.e_floor)
        return q

    def admissible(self, q: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(q)) and np.all(q[:, 0] > 0.0))

    def analytic_reference(self, grid: Grid, t: float | None = None) -> np.ndarray:
        """Cold free-fall shapes normalized to the inflow state at ``r_out``."""
        r = grid.centers
        r_out = grid.interfaces[-1]
        rho = self.rho_out * (r / r_out) ** -1.5
        u = -np.sqrt(2.0 * self.gm / r)
        e = self.e_out * (rho / self.rho_out) ** self.gamma
        return np.column_stack([rho, rho * u, e])


def power_law_slope(r: np.ndarray, values: np.ndarray, lo: float, hi: float) -> float:
    """Least-squares slope of ``log|values|`` against ``log r`` on ``[lo, hi]``."""
    r = np.asarray(r)
    mask = (r >= lo) & (r <= hi)
    if mask.sum() < 2:
        raise ValueError("fewer than two points in the fitting window")
    slope, _ = np.polyfit(np.log(r[mask]), np.log(np.abs(values[mask])), 1)
    return float(slope)
