import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thetafv import CflController, History, Outcome, RunOptions, SchemeConfig, Tolerances, build_grid, run_solver
from thetafv.problems import DiffusionProblem, Jacobian, Problem
from thetafv.stepping import (
    HISTORY_COLUMNS,
    ControllerError,
    Record,
    ResidualConverged,
    advective_cfl_dt,
    cfl_numbers,
    monitor,
    read_history_csv,
    residual_driven_dt,
    residual_smoothing_dts,
)


class Transport(Problem):
    """Minimal problem with prescribed speeds and diffusivities."""

    variable_names = ("q",)

    def __init__(self, speed=0.0, nu=0.0):
        self.speed, self.nu = speed, nu

    def initial_state(self, grid):
        return np.zeros((grid.n_cells, 1))

    def face_fluxes(self, q, grid, t):
        return np.zeros((grid.n_cells + 1, 1))

    def jacobian_contributions(self, q, grid, t=0.0):
        z = np.zeros((grid.n_cells, 1, 1))
        return Jacobian(z, z, z)

    def wave_speed(self, q, grid):
        return np.broadcast_to(np.asarray(self.speed, dtype=float), (grid.n_cells,))

    def diffusivity(self, grid):
        return np.broadcast_to(np.asarray(self.nu, dtype=float), (grid.n_cells,))


def _step(problem, grid, target, **kw):
    return advective_cfl_dt(problem, problem.initial_state(grid), grid, target, **kw)


def test_advective_bound():
    g = build_grid("planar", 0.0, 1.0, 50)
    assert _step(Transport(speed=1.0), g, 1.0) == pytest.approx(0.02, rel=1e-12)


def test_diffusive_bound():
    g = build_grid("planar", 0.0, 1.0, 60)
    dx = 1 / 60
    assert _step(Transport(nu=0.01), g, 1.0) == pytest.approx(dx**2 / (2 * 0.01), rel=1e-12)
    assert _step(Transport(nu=0.01), g, 1.0, normalization="raw") == pytest.approx(dx**2 / 0.01, rel=1e-12)


@pytest.mark.parametrize("speed,nu", [(1.0, 0.01), (10.0, 0.01), (1.0, 1.0)])
def test_mixed_bound_is_min(speed, nu):
    g = build_grid("planar", 0.0, 1.0, 60)
    dx = 1 / 60
    expected = 0.7 * min(dx / speed, dx**2 / (2 * nu))
    assert _step(Transport(speed, nu), g, 0.7) == pytest.approx(expected, rel=1e-12)


def test_unconstrained_cells_are_skipped():
    g = build_grid("planar", 0.0, 1.0, 4)
    speed = np.array([0.0, 2.0, 0.0, 0.0])
    assert _step(Transport(speed=speed), g, 1.0) == pytest.approx(0.125)
    with pytest.raises(ControllerError):
        _step(Transport(), g, 1.0)
    with pytest.raises(ControllerError):
        _step(Transport(speed=1.0), g, 0.0)


def test_local_steps_uniform_degenerate_to_global():
    g = build_grid("planar", 0.0, 1.0, 50)
    p = Transport(speed=1.0)
    local = residual_smoothing_dts(p, p.initial_state(g), g, 0.9)
    np.testing.assert_allclose(local, _step(p, g, 0.9), rtol=1e-12)


def test_local_steps_scale_with_width():
    from thetafv.mesh import Grid

    h = 0.01
    g = Grid("planar", np.array([0.0, h, 11 * h, 12 * h]))
    p = Transport(speed=2.0)
    local = residual_smoothing_dts(p, p.initial_state(g), g, 1.0)
    assert local[1] / local[0] == pytest.approx(10.0, rel=1e-12)


@given(st.floats(1.0, 1.1), st.floats(0.01, 1.0), st.floats(0.0, 5.0), st.floats(1e-4, 1.0))
def test_local_steps_respect_cell_bounds(stretch, target, speed, nu):
    g = build_grid("planar", 0.0, 1.0, 40, stretch=stretch)
    p = Transport(speed, nu)
    local = residual_smoothing_dts(p, p.initial_state(g), g, target)
    dx = g.widths
    bound = np.minimum(np.where(speed > 0, dx / max(speed, 1e-300), np.inf), dx**2 / (2 * nu))
    assert np.all(local <= bound * (1 + 1e-12))


def test_residual_driven_formula():
    g = build_grid("planar", 0.0, 1.0, 100)
    h = History(initial_residual=1.0)
    h.append(Record(1, 0.0, 1.0, 1.0, 0.5, 0.1, 1))
    assert residual_driven_dt(h, g, 1.0) == pytest.approx(0.1)
    h.append(Record(2, 0.0, 1.0, 1.0, 0.5, 0.05, 1))
    assert residual_driven_dt(h, g, 1.0) == pytest.approx(0.2)
    h.append(Record(3, 0.0, 1.0, 1.0, 0.5, 0.0, 1))
    with pytest.raises(ResidualConverged):
        residual_driven_dt(h, g, 1.0)


def test_residual_driven_run_oscillates_near_unit_cfl():
    g = build_grid("spherical", 1000.0, 1003.0, 180)
    res = run_solver(
        DiffusionProblem(),
        g,
        SchemeConfig(theta=1.0, matrix_level="identity"),
        CflController("residual", alpha0=1.0),
        RunOptions(max_iterations=3000),
    )
    cfl = np.array([r.cfl for r in res.history.records][200:])
    assert 0.8 < np.median(cfl) < 1.25
    assert cfl.min() < 1.0 < cfl.max()
    assert res.outcome is not Outcome.CONVERGED


def test_ramp_schedule():
    c = CflController("ramp", start=0.5, factor=2.0, cap=3.0)
    assert [c.target(k) for k in range(5)] == [0.5, 1.0, 2.0, 3.0, 3.0]
    assert c.target(10**6) == 3.0


@given(st.floats(1e-3, 10.0), st.floats(1.0001, 3.0), st.floats(1e-3, 1e9))
def test_ramp_monotone_until_cap(start, factor, cap):
    c = CflController("ramp", start=start, factor=factor, cap=cap)
    targets = [c.target(k) for k in range(0, 3000, 7)]
    assert all(b >= a or b == cap for a, b in zip(targets, targets[1:]))
    assert all(t <= max(cap, start) for t in targets)


def test_controller_validation():
    with pytest.raises(ControllerError):
        CflController("ramp", factor=1.0)
    with pytest.raises(ControllerError):
        CflController(normalization="other")
    with pytest.raises(ValueError):
        CflController("bogus")


def _history(residuals, initial=1.0):
    h = History(initial_residual=initial)
    for i, r in enumerate(residuals, 1):
        h.append(Record(i, float(i), 1.0, 1.0, 0.5, r, 1))
    return h


def test_monitor_converged():
    assert monitor(_history([]), 1e-9, Tolerances(rel_tol=1e-8)) is Outcome.CONVERGED
    assert monitor(_history([]), 0.5, Tolerances(rel_tol=0.0, abs_tol=0.5)) is Outcome.CONVERGED


def test_monitor_diverged():
    assert monitor(_history([10.0]), 1e9, Tolerances()) is Outcome.DIVERGED
    assert monitor(_history([10.0]), math.nan, Tolerances()) is Outcome.DIVERGED
    assert monitor(_history([10.0]), math.inf, Tolerances()) is Outcome.DIVERGED


def test_monitor_stagnated():
    tol = Tolerances(stagnation_window=50)
    assert monitor(_history([0.5] * 49), 0.5, tol) is None
    assert monitor(_history([0.5] * 50), 0.5, tol) is Outcome.STAGNATED
    improving = list(0.5 * 0.99 ** np.arange(60))
    assert monitor(_history(improving), improving[-1] * 0.99, tol) is None


def test_history_iterations_strictly_increasing():
    h = _history([1.0, 0.5])
    with pytest.raises(ValueError):
        h.append(Record(2, 0.0, 1.0, 1.0, 0.5, 0.1, 1))


def test_history_csv_round_trip(tmp_path):
    h = _history([0.3, 1 / 3, 1e-300])
    path = tmp_path / "h.csv"
    h.write_csv(path)
    text = path.read_bytes().decode("utf-8")
    assert text.splitlines()[0] == ",".join(HISTORY_COLUMNS)
    assert "\r" not in text
    back = read_history_csv(path)
    assert [r.row() for r in back.records] == [r.row() for r in h.records]


@pytest.mark.parametrize(
    "controller",
    [CflController("fixed", cfl=0.4), CflController("ramp", start=0.1, factor=1.5, cap=50.0)],
)
def test_recorded_cfl_is_reproducible(controller):
    g = build_grid("spherical", 1000.0, 1003.0, 180, stretch=1.01)
    p = DiffusionProblem()
    res = run_solver(p, g, SchemeConfig(theta=1.0, matrix_level="tridiagonal"), controller, RunOptions(max_iterations=40))
    rate_adv = p.wave_speed(None, g) / g.widths
    rate_dif = p.diffusivity(g) / g.widths**2
    for rec in res.history.records:
        assert rec.cfl == pytest.approx(rec.dt * np.max(rate_adv + 2 * rate_dif), rel=1e-12)
        assert rec.cfl_raw == pytest.approx(rec.dt * np.max(rate_adv + rate_dif), rel=1e-12)


def test_cfl_numbers_of_local_steps():
    g = build_grid("planar", 0.0, 1.0, 30, stretch=1.05)
    p = Transport(nu=0.01)
    local = residual_smoothing_dts(p, p.initial_state(g), g, 0.8)
    cfl, cfl_raw = cfl_numbers(p, p.initial_state(g), g, local)
    assert cfl == pytest.approx(0.8, rel=1e-12)
    assert cfl_raw == pytest.approx(0.4, rel=1e-12)
