import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import dense_lu_solve, random_dominant_blocks, random_dominant_tridiagonal

from thetafv import build_grid
from thetafv.linalg import (
    BlockTriDiagonal,
    DiagonalApprox,
    MatrixLevel,
    SingularSystemError,
    TriDiagonal,
    row_sum_criterion,
    solve_block_tridiagonal,
    solve_diagonal,
    solve_tridiagonal,
)
from thetafv.problems import DiffusionProblem, FreeFallProblem


def _rel_err(x, ref):
    return np.max(np.abs(x - ref)) / np.max(np.abs(ref))


def test_oracle_against_numpy():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(30, 30)) + 30 * np.eye(30)
    b = rng.normal(size=30)
    np.testing.assert_allclose(dense_lu_solve(a, b), np.linalg.solve(a, b), rtol=1e-12)


def test_identity_tridiagonal():
    r = np.array([3.0, -1.0, 2.5, 7.0])
    x = solve_tridiagonal(TriDiagonal(np.zeros(3), np.ones(4), np.zeros(3)), r)
    np.testing.assert_array_equal(x, r)


def test_two_by_two_by_hand():
    x = solve_tridiagonal(TriDiagonal([1.0], [2.0, 2.0], [1.0]), np.array([3.0, 3.0]))
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-15)


def test_random_fifty():
    rng = np.random.default_rng(50)
    sub, diag, sup = random_dominant_tridiagonal(rng, 50)
    system = TriDiagonal(sub, diag, sup)
    rhs = rng.normal(size=50)
    ref = dense_lu_solve(system.to_dense(), rhs)
    assert _rel_err(solve_tridiagonal(system, rhs), ref) <= 1e-12


def test_thousand_random_tridiagonal_systems():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 201))
        if n == 1:
            system = TriDiagonal(np.empty(0), rng.uniform(0.5, 2.0, 1), np.empty(0))
        else:
            system = TriDiagonal(*random_dominant_tridiagonal(rng, n))
        rhs = rng.normal(size=n)
        x = solve_tridiagonal(system, rhs)
        worst = max(worst, _rel_err(x, dense_lu_solve(system.to_dense(), rhs)))
        assert np.max(np.abs(system.matvec(x) - rhs)) <= 1e-10 * np.max(np.abs(rhs))
    assert worst <= 1e-10


def test_thousand_random_diagonal_systems():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        n = int(rng.integers(1, 201))
        diag = rng.uniform(1e-3, 1e3, n)
        rhs = rng.normal(size=n)
        x = solve_diagonal(DiagonalApprox(diag), rhs)
        assert _rel_err(x, dense_lu_solve(np.diag(diag), rhs)) <= 1e-10


def test_random_block_tridiagonal_systems():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(3, 41))
        m = int(rng.integers(1, 5))
        system = BlockTriDiagonal(*random_dominant_blocks(rng, n, m))
        rhs = rng.normal(size=(n, m))
        x = solve_block_tridiagonal(system, rhs)
        ref = dense_lu_solve(system.to_dense(), rhs.ravel()).reshape(n, m)
        assert _rel_err(x, ref) <= 1e-10


def test_random_block_diagonal_systems():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(1, 201))
        m = int(rng.integers(1, 9))
        _, blocks, _ = random_dominant_blocks(rng, max(n, 2), m)
        blocks = blocks[:n]
        rhs = rng.normal(size=(n, m))
        x = solve_diagonal(DiagonalApprox(blocks, block=True), rhs)
        for j in range(n):
            assert _rel_err(x[j], dense_lu_solve(blocks[j], rhs[j])) <= 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(2, 200))
def test_tridiagonal_matches_oracle_property(seed, n):
    rng = np.random.default_rng(seed)
    system = TriDiagonal(*random_dominant_tridiagonal(rng, n, margin=rng.uniform(1e-3, 1.0)))
    rhs = rng.normal(size=n)
    assert _rel_err(solve_tridiagonal(system, rhs), dense_lu_solve(system.to_dense(), rhs)) <= 1e-10


def test_columns_are_independent_systems():
    rng = np.random.default_rng(5)
    n, m = 40, 3
    sub = rng.uniform(-1, 1, (n - 1, m))
    sup = rng.uniform(-1, 1, (n - 1, m))
    diag = 3.0 + rng.uniform(0, 1, (n, m))
    rhs = rng.normal(size=(n, m))
    x = solve_tridiagonal(TriDiagonal(sub, diag, sup), rhs)
    for k in range(m):
        col = solve_tridiagonal(TriDiagonal(sub[:, k], diag[:, k], sup[:, k]), rhs[:, k])
        np.testing.assert_allclose(x[:, k], col, rtol=1e-14)


def test_zero_pivot_raises():
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(TriDiagonal([1.0], [1.0, 1.0], [1.0]), np.ones(2))
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(TriDiagonal([0.0], [0.0, 1.0], [0.0]), np.ones(2))


def test_singular_block_raises():
    blocks = np.zeros((3, 2, 2))
    with pytest.raises(SingularSystemError):
        solve_diagonal(DiagonalApprox(blocks, block=True), np.ones((3, 2)))


def test_diagonal_examples():
    x = solve_diagonal(DiagonalApprox(np.array([2.0, 4.0])), np.array([2.0, 4.0]))
    np.testing.assert_array_equal(x, [1.0, 1.0])
    dt = 0.37
    rhs = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(solve_diagonal(DiagonalApprox(np.full(3, 1 / dt)), rhs), dt * rhs, rtol=1e-15)


def test_diagonal_rejects_non_positive():
    with pytest.raises(SingularSystemError):
        solve_diagonal(DiagonalApprox(np.array([1.0, 0.0])), np.ones(2))
    with pytest.raises(SingularSystemError):
        solve_diagonal(DiagonalApprox(np.array([1.0, -2.0])), np.ones(2))


def test_freefall_block_matches_oracle():
    p = FreeFallProblem()
    g = build_grid("spherical", 1.0, 100.0, 50, stretch=1.05)
    r = g.centers
    rho = r**-1.5
    q = np.column_stack([rho, -rho * np.sqrt(2 / r), 1e-3 * rho])
    blocks = np.eye(3) / 0.1 + p.jacobian_contributions(q, g).diag
    rhs = np.random.default_rng(6).normal(size=(g.n_cells, 3))
    x = solve_diagonal(DiagonalApprox(blocks, block=True), rhs)
    for j in range(g.n_cells):
        assert _rel_err(x[j], dense_lu_solve(blocks[j], rhs[j])) <= 1e-12


def test_block_shape_checks():
    with pytest.raises(ValueError):
        BlockTriDiagonal(np.zeros((1, 2, 2)), np.ones((2, 2, 2)), np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        BlockTriDiagonal(np.zeros((2, 9, 9)), np.ones((3, 9, 9)), np.zeros((2, 9, 9)))
    with pytest.raises(ValueError):
        TriDiagonal(np.zeros(3), np.ones(3), np.zeros(2))


def _planar_diffusion_system(dt, theta=1.0, n=60, dx=1 / 60, nu=1e-2):
    g = build_grid("planar", 0.0, n * dx, n)
    lower, d, upper = DiffusionProblem(nu=nu).couplings(g)
    inv_dt = 1.0 / dt
    return TriDiagonal(theta * lower[1:], inv_dt + theta * d, theta * upper[:-1]), inv_dt


def test_row_sum_full_always_satisfied():
    for dt in (1e-6, 1e-2, 1.0, 1e6):
        ok, margin = row_sum_criterion(*_planar_diffusion_system(dt)[:1], "tridiagonal", 1 / dt)
        assert ok and margin > 0


@pytest.mark.parametrize("factor,expected", [(0.49, True), (0.51, False)])
def test_row_sum_identity_boundary(factor, expected):
    dx, nu = 1 / 60, 1e-2
    dt = factor * dx**2 / nu
    system, inv_dt = _planar_diffusion_system(dt, dx=dx, nu=nu)
    ok, _ = row_sum_criterion(system, MatrixLevel.IDENTITY, inv_dt)
    assert ok is expected


def test_block_row_sum_reduces_to_scalar():
    system, inv_dt = _planar_diffusion_system(1e-3)
    blocks = BlockTriDiagonal(system.sub[:, None, None], system.diag[:, None, None], system.sup[:, None, None])
    for level in MatrixLevel:
        assert row_sum_criterion(system, level, inv_dt) == pytest.approx(row_sum_criterion(blocks, level, inv_dt))


@pytest.mark.parametrize("geometry,stretch", [("planar", 1.0), ("spherical", 1.0), ("spherical", 1.05)])
def test_diffusion_rows_sum_to_zero(geometry, stretch):
    g = build_grid(geometry, 1000.0, 1003.0, 180, stretch=stretch)
    lower, d, upper = DiffusionProblem().couplings(g)
    np.testing.assert_allclose(d, -lower - upper, rtol=1e-13, atol=0)


def test_diagonal_truncation_error_shrinks_with_dt():
    rhs = np.random.default_rng(7).normal(size=60)
    errors = []
    for k in range(12):
        dt = 1e-2 * 0.5**k
        full, _ = _planar_diffusion_system(dt)
        x_full = solve_tridiagonal(full, rhs)
        x_diag = solve_diagonal(DiagonalApprox(full.diag), rhs)
        errors.append(np.max(np.abs(x_diag - x_full)))
    assert all(b < a for a, b in zip(errors, errors[1:]))
