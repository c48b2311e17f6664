"""Time-step controllers and convergence monitoring.

Diffusive CFL numbers are reported as ``2*nu*dt/dx^2`` so that the
forward-Euler stability limit sits at 1; the raw ``nu*dt/dx^2`` is kept
alongside as ``cfl_raw``.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mesh import Grid
from .problems.base import Problem

HISTORY_COLUMNS = ("iteration", "time", "dt", "cfl", "cfl_raw", "residual_inf", "inner_iters")

# diffusive bound dt < dx^2 / (factor * nu)
DIFFUSIVE_FACTOR = {"stability": 2.0, "raw": 1.0}


class ControllerError(ValueError):
    pass


class ResidualConverged(Exception):
    """A residual-driven controller has nothing left to drive."""


class Outcome(str, enum.Enum):
    CONVERGED = "converged"
    STAGNATED = "stagnated"
    DIVERGED = "diverged"
    BUDGET_EXHAUSTED = "budget_exhausted"
    # time-accurate run reached its end time
    COMPLETED = "completed"


class ControllerMode(str, enum.Enum):
    FIXED = "fixed"
    RAMP = "ramp"
    RESIDUAL = "residual"


def _stability_times(problem: Problem, q: np.ndarray, grid: Grid, factor: float) -> np.ndarray:
    dx = grid.widths
    speed = problem.wave_speed(q, grid)
    nu = problem.diffusivity(grid)
    # vanishing speeds give an unbounded (inf) advective time
    with np.errstate(divide="ignore", over="ignore"):
        adv = np.where(speed > 0.0, dx / np.where(speed > 0.0, speed, 1.0), np.inf)
        dif = np.where(nu > 0.0, dx**2 / (factor * np.where(nu > 0.0, nu, 1.0)), np.inf)
    return np.minimum(adv, dif)


def residual_smoothing_dts(
    problem: Problem, q: np.ndarray, grid: Grid, target_cfl: float, normalization: str = "stability"
) -> np.ndarray:
    """Cell-local time steps ``target * min(dx/speed, dx^2/(2 nu))``."""
    if not target_cfl > 0.0:
        raise ControllerError("target CFL must be positive")
    local = _stability_times(problem, q, grid, DIFFUSIVE_FACTOR[normalization])
    if not np.all(np.isfinite(local)):
        raise ControllerError("a cell has neither advection nor diffusion to bound its step")
    return target_cfl * local


def advective_cfl_dt(
    problem: Problem, q: np.ndarray, grid: Grid, target_cfl: float, normalization: str = "stability"
) -> float:
    """Global step from the most restrictive cell.

    Cells without advection and diffusion are skipped.
    """
    if not target_cfl > 0.0:
        raise ControllerError("target CFL must be positive")
    local = _stability_times(problem, q, grid, DIFFUSIVE_FACTOR[normalization])
    finite = local[np.isfinite(local)]
    if finite.size == 0:
        raise ControllerError("no cell constrains the time step")
    return float(target_cfl * finite.min())


def cfl_numbers(problem: Problem, q: np.ndarray, grid: Grid, dt) -> tuple[float, float]:
    """``(cfl, cfl_raw)`` at the most restrictive cell for step ``dt``."""
    dx = grid.widths
    adv = problem.wave_speed(q, grid) / dx
    dif = problem.diffusivity(grid) / dx**2
    dt = np.broadcast_to(np.asarray(dt, dtype=float), dx.shape)
    cfl = dt * (adv + 2.0 * dif)
    j = int(np.argmax(cfl))
    return float(cfl[j]), float(dt[j] * (adv[j] + dif[j]))


@dataclass
class Record:
    iteration: int
    time: float
    dt: float
    cfl: float
    cfl_raw: float
    residual_inf: float
    inner_iters: int

    def row(self) -> tuple:
        return (self.iteration, self.time, self.dt, self.cfl, self.cfl_raw, self.residual_inf, self.inner_iters)


@dataclass
class History:
    initial_residual: float = math.nan
    records: list[Record] = field(default_factory=list)
    outcome: Outcome | None = None
    # running minimum of the residual, one entry per record
    best: list[float] = field(default_factory=list, repr=False)

    def append(self, record: Record) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("iterations must be strictly increasing")
        self.records.append(record)
        prev = self.best[-1] if self.best else self.initial_residual
        self.best.append(min(prev, record.residual_inf) if math.isfinite(prev) else record.residual_inf)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_inf for r in self.records])

    @property
    def latest_residual(self) -> float:
        return self.records[-1].residual_inf if self.records else self.initial_residual

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(HISTORY_COLUMNS)
            for rec in self.records:
                writer.writerow([_fmt(v) for v in rec.row()])


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def read_history_csv(path: str | Path) -> History:
    history = History()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            history.append(
                Record(
                    int(row["iteration"]),
                    float(row["time"]),
                    float(row["dt"]),
                    float(row["cfl"]),
                    float(row["cfl_raw"]),
                    float(row["residual_inf"]),
                    int(row["inner_iters"]),
                )
            )
    return history


def residual_driven_dt(history: History, grid: Grid, alpha0: float) -> float:
    """``alpha0 * min(dx) / residual`` from the latest recorded residual."""
    residual = history.latest_residual
    if residual == 0.0:
        raise ResidualConverged("zero residual")
    if not residual > 0.0:
        raise ControllerError(f"cannot drive the step from residual {residual}")
    return float(alpha0 * grid.widths.min() / residual)


@dataclass
class CflController:
    """Chooses the step size (global or per cell) for each iteration.

    ``ramp`` targets ``min(cap, start * factor**k)`` at iteration ``k``
    (counted from 0). With ``local=True`` every cell gets its own step from
    the same target CFL.
    """

    mode: ControllerMode = ControllerMode.FIXED
    cfl: float = 1.0
    start: float = 0.1
    factor: float = 1.1
    cap: float = 1.0
    alpha0: float = 1.0
    local: bool = False
    normalization: str = "stability"

    def __post_init__(self) -> None:
        self.mode = ControllerMode(self.mode)
        if self.normalization not in DIFFUSIVE_FACTOR:
            raise ControllerError(f"unknown CFL normalization {self.normalization!r}")
        if self.mode is ControllerMode.RAMP and not self.factor > 1.0:
            raise ControllerError("ramp factor must exceed 1")
        if self.mode is ControllerMode.RESIDUAL and self.local:
            raise ControllerError("residual-driven steps are global")

    def target(self, k: int) -> float:
        if self.mode is ControllerMode.RAMP:
            if k * math.log(self.factor) >= math.log(self.cap / self.start):
                return self.cap
            return self.start * self.factor**k
        return self.cfl

    def next_dt(self, problem: Problem, q: np.ndarray, grid: Grid, k: int, history: History):
        if self.mode is ControllerMode.RESIDUAL:
            return residual_driven_dt(history, grid, self.alpha0)
        target = self.target(k)
        if self.local:
            return residual_smoothing_dts(problem, q, grid, target, self.normalization)
        return advective_cfl_dt(problem, q, grid, target, self.normalization)


@dataclass
class Tolerances:
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    divergence_factor: float = 1e8
    stagnation_window: int = 2000
    stagnation_improvement: float = 0.01


def monitor(history: History, residual_inf: float, tolerances: Tolerances | None = None) -> Outcome | None:
    """Classify the run after the newest residual; ``None`` means keep going.

    ``history`` holds the records before the newest residual and its
    ``initial_residual`` the residual of the starting state.
    """
    tol = tolerances or Tolerances()
    initial = history.initial_residual
    if not math.isfinite(residual_inf):
        return Outcome.DIVERGED
    if residual_inf <= tol.abs_tol or residual_inf <= tol.rel_tol * initial:
        return Outcome.CONVERGED
    if residual_inf >= tol.divergence_factor * initial:
        return Outcome.DIVERGED
    window = tol.stagnation_window
    n = len(history)
    # the newest residual is iteration n + 1; compare with the best as of iteration n + 1 - window
    if window > 0 and n >= window:
        best_before = history.best[n - window]
        best_now = min(history.best[-1], residual_inf)
        if best_now > (1.0 - tol.stagnation_improvement) * best_before:
            return Outcome.STAGNATED
    return None
