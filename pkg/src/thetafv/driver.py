"""Pseudo-time (or time-accurate) marching loop with history recording."""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .mesh import Grid
from .problems.base import Problem
from .scheme import AdmissibilityError, DivergenceError, SchemeConfig, State, step
from .stepping import (
    CflController,
    History,
    Outcome,
    Record,
    ResidualConverged,
    Tolerances,
    cfl_numbers,
    monitor,
)

log = logging.getLogger(__name__)


@dataclass
class RunOptions:
    max_iterations: int = 10_000
    tolerances: Tolerances = field(default_factory=Tolerances)
    #: stop at this simulated time instead of at a steady state
    t_end: float | None = None
    max_retries: int = 10

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class RunResult:
    state: State
    history: History
    outcome: Outcome
    wall_time: float
    retries: int = 0

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def final_residual(self) -> float:
        return self.history.latest_residual

    @property
    def q(self) -> np.ndarray:
        return self.state.q_old


def _residual(h: np.ndarray) -> float:
    with np.errstate(invalid="ignore"):
        return float(np.max(np.abs(h)))


def run_solver(
    problem: Problem,
    grid: Grid,
    scheme: SchemeConfig,
    controller: CflController,
    options: RunOptions | None = None,
    q0: np.ndarray | None = None,
) -> RunResult:
    """March from ``q0`` (default: the problem's initial state).

    Steady runs stop on convergence, stagnation, divergence or the
    iteration budget; with ``options.t_end`` the run stops once that time
    is reached and is reported as ``COMPLETED``.
    """
    options = options or RunOptions()
    tol = options.tolerances
    started = _time.perf_counter()
    q_start = problem.initial_state(grid) if q0 is None else np.array(q0, dtype=float)
    state = State.start(problem.apply_boundary_conditions(q_start, 0.0))
    h = problem.spatial_operator(state.q_old, grid, state.time)
    history = History(initial_residual=_residual(h))
    outcome = None
    retries = 0
    t_end = options.t_end

    for it in range(1, options.max_iterations + 1):
        try:
            dt = controller.next_dt(problem, state.q_old, grid, it - 1, history)
        except ResidualConverged:
            outcome = Outcome.CONVERGED
            break
        if t_end is not None:
            dt = min(float(np.min(dt)), t_end - state.time)

        result = None
        for attempt in range(options.max_retries + 1):
            try:
                result = step(problem, state, grid, scheme, dt, h_old=h)
                break
            except AdmissibilityError:
                retries += 1
                dt = 0.5 * np.asarray(dt)
                log.debug("iteration %d: inadmissible state, retrying with smaller step", it)
            except DivergenceError:
                break
        if result is None:
            cfl, cfl_raw = cfl_numbers(problem, state.q_old, grid, dt)
            history.append(Record(it, state.time, float(np.min(dt)), cfl, cfl_raw, float("nan"), 0))
            outcome = Outcome.DIVERGED
            break

        cfl, cfl_raw = cfl_numbers(problem, state.q_old, grid, dt)
        state = result.state
        h = problem.spatial_operator(state.q_old, grid, state.time)
        residual = _residual(h)
        record = Record(it, state.time, float(np.min(dt)), cfl, cfl_raw, residual, result.inner_iterations)

        if t_end is not None:
            history.append(record)
            if not np.isfinite(residual) or residual >= tol.divergence_factor * history.initial_residual:
                outcome = Outcome.DIVERGED
                break
            if state.time >= t_end * (1.0 - 1e-12):
                outcome = Outcome.COMPLETED
                break
            continue

        verdict = monitor(history, residual, tol)
        history.append(record)
        if verdict is not None:
            outcome = verdict
            break

    if outcome is None:
        outcome = Outcome.BUDGET_EXHAUSTED
    history.outcome = outcome
    return RunResult(state, history, outcome, _time.perf_counter() - started, retries)
