"""Theta-scheme defect-correction stepping.

Each time step solves ``(I/dt + theta*A) dq = RHS`` repeatedly, where

    RHS = -(q_iter - q_old)/dt + theta*H(q_iter) + (1 - theta)*H(q_old)

and ``A`` is replaced by a truncation chosen through :class:`MatrixLevel`.
Because consistency is carried by ``RHS``, any truncation that keeps the
linear solve stable converges to the same answer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    BlockTriDiagonal,
    DiagonalApprox,
    MatrixLevel,
    TriDiagonal,
    solve_block_tridiagonal,
    solve_diagonal,
    solve_tridiagonal,
)
from .mesh import Grid
from .problems.base import Jacobian, Problem


class StepError(RuntimeError):
    """A time step could not be completed; the state was not modified."""


class DivergenceError(StepError):
    pass


class AdmissibilityError(StepError):
    """The new iterate violates a physical constraint (e.g. negative density)."""


class AssemblyError(ValueError):
    pass


class ThetaRule(str, enum.Enum):
    FIXED = "fixed"
    DAMPED_CN = "damped_cn"


@dataclass
class SchemeConfig:
    theta: float = 1.0
    matrix_level: MatrixLevel = MatrixLevel.DIAGONAL
    inner_iterations: int = 1
    inner_tolerance: float = 1e-3
    theta_rule: ThetaRule = ThetaRule.FIXED
    alpha: float = 1.0
    frozen_jacobian: bool = False

    def __post_init__(self) -> None:
        self.matrix_level = MatrixLevel(self.matrix_level)
        self.theta_rule = ThetaRule(self.theta_rule)
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")
        if not self.inner_tolerance > 0.0:
            raise ValueError("inner_tolerance must be positive")

    def effective_theta(self, dt):
        """Theta used for a step of size ``dt`` (scalar or per cell)."""
        if self.theta_rule is ThetaRule.DAMPED_CN:
            return np.minimum(1.0, 0.5 * (1.0 + self.alpha * np.asarray(dt, dtype=float)))
        return self.theta


@dataclass
class State:
    q_old: np.ndarray
    q_iter: np.ndarray
    time: float = 0.0
    step_index: int = 0

    @classmethod
    def start(cls, q: np.ndarray, time: float = 0.0) -> "State":
        q = np.array(q, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        return cls(q, q.copy(), time, 0)


@dataclass
class StepResult:
    state: State
    inner_iterations: int
    inner_residual: float
    initial_residual: float
    inner_history: list = field(default_factory=list)


def _per_cell(value, n: int):
    """Scalars pass through; per-cell arrays become a column of shape (N, 1)."""
    if np.ndim(value) == 0:
        return float(value)
    a = np.asarray(value, dtype=float).reshape(-1, 1)
    if a.shape[0] != n:
        raise ValueError(f"expected {n} per-cell values, got {a.shape[0]}")
    return a


def evaluate_rhs(
    problem: Problem,
    state: State,
    grid: Grid,
    dt,
    theta,
    *,
    h_old: np.ndarray | None = None,
    h_iter: np.ndarray | None = None,
) -> np.ndarray:
    """Residual of the theta-discretized equations at ``state.q_iter``.

    ``dt`` and ``theta`` may be scalars or per-cell arrays.
    """
    n = grid.n_cells
    dt_c = _per_cell(dt, n)
    th = _per_cell(theta, n)
    t_new = state.time + float(np.min(dt))
    if h_old is None:
        h_old = problem.spatial_operator(state.q_old, grid, state.time)
    if h_iter is None:
        if state.q_iter is state.q_old and not problem.time_dependent:
            h_iter = h_old
        else:
            h_iter = problem.spatial_operator(state.q_iter, grid, t_new)
    rhs = -(state.q_iter - state.q_old) / dt_c + th * h_iter + (1.0 - th) * h_old
    if not np.all(np.isfinite(rhs)):
        raise DivergenceError("non-finite residual")
    return rhs


def assemble(
    problem: Problem,
    state: State,
    grid: Grid,
    dt,
    theta,
    matrix_level: MatrixLevel | str,
    jacobian: Jacobian | None = None,
):
    """Build the linear system for the chosen truncation of ``I/dt + theta*A``."""
    level = MatrixLevel(matrix_level)
    n = grid.n_cells
    if np.any(np.asarray(dt) <= 0.0):
        raise ValueError("dt must be positive")
    inv_dt = 1.0 / np.broadcast_to(_per_cell(dt, n), (n, 1))[:, 0]
    if level is MatrixLevel.IDENTITY:
        return DiagonalApprox(inv_dt)

    if jacobian is None:
        jacobian = problem.jacobian_contributions(state.q_iter, grid, state.time + float(np.min(dt)))
    m = jacobian.diag.shape[1]
    if m == 1 and np.any(jacobian.diag[:, 0, 0] < 0.0):
        bad = int(np.argmin(jacobian.diag[:, 0, 0]))
        raise AssemblyError(f"negative diagonal contribution at cell {bad}")

    th = np.broadcast_to(_per_cell(theta, n), (n, 1))[:, 0]
    if level is MatrixLevel.DIAGONAL:
        point = np.einsum("nii->ni", jacobian.diag)
        return DiagonalApprox(inv_dt[:, None] + th[:, None] * point)
    if level is MatrixLevel.BLOCK_DIAGONAL:
        blocks = inv_dt[:, None, None] * np.eye(m) + th[:, None, None] * jacobian.diag
        return DiagonalApprox(blocks, block=True)
    if level is MatrixLevel.TRIDIAGONAL:
        point = lambda b: np.einsum("nii->ni", b)  # noqa: E731
        return TriDiagonal(
            th[1:, None] * point(jacobian.sub)[1:],
            inv_dt[:, None] + th[:, None] * point(jacobian.diag),
            th[:-1, None] * point(jacobian.sup)[:-1],
        )
    return BlockTriDiagonal(
        th[1:, None, None] * jacobian.sub[1:],
        inv_dt[:, None, None] * np.eye(m) + th[:, None, None] * jacobian.diag,
        th[:-1, None, None] * jacobian.sup[:-1],
    )


def solve(system, rhs: np.ndarray) -> np.ndarray:
    if isinstance(system, DiagonalApprox):
        return solve_diagonal(system, rhs)
    if isinstance(system, TriDiagonal):
        return solve_tridiagonal(system, rhs)
    return solve_block_tridiagonal(system, rhs)


def step(
    problem: Problem,
    state: State,
    grid: Grid,
    config: SchemeConfig,
    dt,
    *,
    h_old: np.ndarray | None = None,
) -> StepResult:
    """Advance one time step with up to ``config.inner_iterations`` corrections.

    Inner iterations stop early once the max-norm of the residual falls to
    ``inner_tolerance`` times its value at the start of the step. On any
    failure the input ``state`` is left untouched and a :class:`StepError`
    is raised.
    """
    if np.any(np.asarray(dt) <= 0.0):
        raise ValueError("dt must be positive")
    theta = config.effective_theta(dt)
    t_new = state.time + float(np.min(dt))
    q_old = state.q_old
    if h_old is None:
        h_old = problem.spatial_operator(q_old, grid, state.time)
    if not np.all(np.isfinite(h_old)):
        raise DivergenceError("non-finite spatial operator")

    needs_jacobian = config.matrix_level is not MatrixLevel.IDENTITY
    work = State(q_old, q_old, state.time, state.step_index)
    jacobian = None
    system = None
    used = 0
    norms = []
    with np.errstate(all="ignore"):
        while True:
            rhs = evaluate_rhs(problem, work, grid, dt, theta, h_old=h_old)
            norms.append(float(np.max(np.abs(rhs))))
            if used > 0 and norms[-1] <= config.inner_tolerance * norms[0]:
                break
            refresh = not (config.frozen_jacobian or problem.linear)
            if system is None or (needs_jacobian and refresh):
                if needs_jacobian:
                    jacobian = problem.jacobian_contributions(work.q_iter, grid, t_new)
                system = assemble(problem, work, grid, dt, theta, config.matrix_level, jacobian)
            dq = solve(system, rhs)
            q_new = problem.apply_boundary_conditions(work.q_iter + dq, t_new)
            if not np.all(np.isfinite(q_new)):
                raise DivergenceError(f"non-finite iterate in step {state.step_index + 1}")
            work = State(q_old, q_new, state.time, state.step_index)
            used += 1
            if used >= config.inner_iterations:
                break

    q_final = work.q_iter
    if not problem.admissible(q_final):
        raise AdmissibilityError(f"inadmissible state in step {state.step_index + 1}")
    new_state = State(q_final, q_final.copy(), t_new, state.step_index + 1)
    return StepResult(new_state, used, norms[-1], norms[0], norms)
