"""Solvers for the coefficient-matrix hierarchy.

Systems are stored by bands. Scalar bands may carry trailing dimensions,
in which case every trailing column is an independent system (this is how
``M`` decoupled scalar tridiagonal systems are solved in one call).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MAX_BLOCK_SIZE = 8
PIVOT_RTOL = 1e-14


class SingularSystemError(ArithmeticError):
    """Raised when elimination meets a (numerically) zero pivot."""


class MatrixLevel(str, enum.Enum):
    """How much of the coefficient matrix is retained."""

    IDENTITY = "identity"
    DIAGONAL = "diagonal"
    BLOCK_DIAGONAL = "block_diagonal"
    TRIDIAGONAL = "tridiagonal"
    BLOCK_TRIDIAGONAL = "block_tridiagonal"


@dataclass
class TriDiagonal:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self) -> None:
        self.sub = np.asarray(self.sub, dtype=float)
        self.diag = np.asarray(self.diag, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        n = self.diag.shape[0]
        if self.sub.shape[0] != n - 1 or self.sup.shape[0] != n - 1:
            raise ValueError("off-diagonals must have length N-1")

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def to_dense(self) -> np.ndarray:
        """Dense matrix of a single (1D-banded) system."""
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)


@dataclass
class BlockTriDiagonal:
    sub: np.ndarray  # (N-1, M, M)
    diag: np.ndarray  # (N, M, M)
    sup: np.ndarray  # (N-1, M, M)

    def __post_init__(self) -> None:
        self.sub = np.asarray(self.sub, dtype=float)
        self.diag = np.asarray(self.diag, dtype=float)
        self.sup = np.asarray(self.sup, dtype=float)
        n, m, m2 = self.diag.shape
        if m != m2:
            raise ValueError("blocks must be square")
        if m > MAX_BLOCK_SIZE:
            raise ValueError(f"block size {m} exceeds {MAX_BLOCK_SIZE}")
        if n < 3:
            raise ValueError("block systems need N >= 3")
        if self.sub.shape != (n - 1, m, m) or self.sup.shape != (n - 1, m, m):
            raise ValueError("off-diagonal blocks must have shape (N-1, M, M)")

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def block_size(self) -> int:
        return self.diag.shape[1]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = np.einsum("nij,nj->ni", self.diag, x)
        y[1:] += np.einsum("nij,nj->ni", self.sub, x[:-1])
        y[:-1] += np.einsum("nij,nj->ni", self.sup, x[1:])
        return y

    def to_dense(self) -> np.ndarray:
        n, m = self.n, self.block_size
        a = np.zeros((n * m, n * m))
        for j in range(n):
            a[j * m:(j + 1) * m, j * m:(j + 1) * m] = self.diag[j]
            if j > 0:
                a[j * m:(j + 1) * m, (j - 1) * m:j * m] = self.sub[j - 1]
            if j < n - 1:
                a[j * m:(j + 1) * m, (j + 1) * m:(j + 2) * m] = self.sup[j]
        return a


@dataclass
class DiagonalApprox:
    """Per-cell diagonal ``D_mod``: scalar entries or ``M x M`` blocks."""

    diag: np.ndarray
    block: bool = False

    def __post_init__(self) -> None:
        self.diag = np.asarray(self.diag, dtype=float)
        if self.block:
            if self.diag.ndim != 3 or self.diag.shape[1] != self.diag.shape[2]:
                raise ValueError("block diagonal needs shape (N, M, M)")
            if self.diag.shape[1] > MAX_BLOCK_SIZE:
                raise ValueError(f"block size exceeds {MAX_BLOCK_SIZE}")


def solve_tridiagonal(system: TriDiagonal, rhs: np.ndarray) -> np.ndarray:
    """Thomas elimination without pivoting.

    The pivot is checked at every row against the row scale; a pivot
    below ``1e-14`` of it raises :class:`SingularSystemError`.
    """
    a, b, c = system.sub, system.diag, system.sup
    d = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    if d.shape[0] != n:
        raise ValueError("rhs length does not match the system")
    scale = np.abs(b).copy()
    scale[1:] += np.abs(a)
    scale[:-1] += np.abs(c)

    cp = np.empty_like(c)
    dp = np.empty(np.broadcast_shapes(b.shape, d.shape))
    pivot = b[0]
    _check_pivot(pivot, scale[0], 0)
    if n > 1:
        cp[0] = c[0] / pivot
    dp[0] = d[0] / pivot
    for k in range(1, n):
        pivot = b[k] - a[k - 1] * cp[k - 1]
        _check_pivot(pivot, scale[k], k)
        if k < n - 1:
            cp[k] = c[k] / pivot
        dp[k] = (d[k] - a[k - 1] * dp[k - 1]) / pivot

    x = dp
    for k in range(n - 2, -1, -1):
        x[k] = x[k] - cp[k] * x[k + 1]
    return x


def _check_pivot(pivot, scale, row: int) -> None:
    if np.any(np.abs(pivot) <= PIVOT_RTOL * np.abs(scale)) or not np.all(np.isfinite(pivot)):
        raise SingularSystemError(f"zero pivot at row {row}")


def solve_block_tridiagonal(system: BlockTriDiagonal, rhs: np.ndarray) -> np.ndarray:
    """Block Thomas elimination; each diagonal block is factored by LU."""
    a, b, c = system.sub, system.diag, system.sup
    d = np.asarray(rhs, dtype=float)
    n, m = system.n, system.block_size
    if d.shape != (n, m):
        raise ValueError(f"rhs must have shape ({n}, {m})")

    cp = np.empty_like(c)
    dp = np.empty_like(d)
    pivot = b[0]
    for k in range(n):
        if k > 0:
            pivot = b[k] - a[k - 1] @ cp[k - 1]
            rhs_k = d[k] - a[k - 1] @ dp[k - 1]
        else:
            rhs_k = d[0]
        rhs_cols = np.column_stack([rhs_k, c[k]]) if k < n - 1 else rhs_k[:, None]
        try:
            sol = np.linalg.solve(pivot, rhs_cols)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"singular pivot block at row {k}") from exc
        dp[k] = sol[:, 0]
        if k < n - 1:
            cp[k] = sol[:, 1:]

    x = dp
    for k in range(n - 2, -1, -1):
        x[k] = x[k] - cp[k] @ x[k + 1]
    return x


def solve_diagonal(approx: DiagonalApprox, rhs: np.ndarray) -> np.ndarray:
    """Independent per-cell solve of ``D_mod x = rhs``."""
    rhs = np.asarray(rhs, dtype=float)
    if approx.block:
        blocks = approx.diag
        if rhs.shape != blocks.shape[:2]:
            raise ValueError("rhs must have shape (N, M)")
        try:
            return np.linalg.solve(blocks, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError("singular diagonal block") from exc
    diag = approx.diag
    if np.any(~(diag > 0.0)):
        raise SingularSystemError("diagonal entries must be positive")
    if diag.ndim < rhs.ndim:
        diag = diag.reshape(diag.shape + (1,) * (rhs.ndim - diag.ndim))
    return rhs / diag


def row_sum_criterion(
    full: TriDiagonal | BlockTriDiagonal,
    kept: MatrixLevel | str,
    inv_dt: float | np.ndarray,
) -> tuple[bool, float]:
    """Check whether a truncated matrix stays spectrally equivalent to ``full``.

    ``full`` must carry the assembled ``1/dt + theta*A`` system and
    ``inv_dt`` the ``1/dt`` part of its diagonal. For each row the retained
    diagonal must strictly exceed the modulus row sum of the dropped
    off-diagonal entries. When only the identity is kept, the retained
    diagonal is ``1/dt`` and the dropped entries are the neighbour
    couplings.

    Block systems use the infinity norm of every dropped block, and the
    row dominance of the diagonal block (diagonal entry minus the moduli of
    its own off-diagonal entries) as the retained measure.

    Returns
    -------
    satisfied : bool
    margin : float
        Minimum over rows of (retained diagonal - dropped row sum).
    """
    kept = MatrixLevel(kept)
    n = full.n
    block = isinstance(full, BlockTriDiagonal)

    if block:
        sub_mod = np.abs(full.sub).sum(axis=2).max(axis=1)
        sup_mod = np.abs(full.sup).sum(axis=2).max(axis=1)
        d = full.diag
        diag_entries = np.einsum("nii->ni", d)
        own_off = np.abs(d).sum(axis=2) - np.abs(diag_entries)
        diag_measure = (diag_entries - own_off).min(axis=1)
    else:
        sub_mod = np.abs(full.sub)
        sup_mod = np.abs(full.sup)
        diag_measure = full.diag
        if diag_measure.ndim > 1:
            diag_measure = diag_measure.min(axis=tuple(range(1, diag_measure.ndim)))
            sub_mod = sub_mod.max(axis=tuple(range(1, sub_mod.ndim)))
            sup_mod = sup_mod.max(axis=tuple(range(1, sup_mod.ndim)))

    dropped = np.zeros(n)
    if kept in (MatrixLevel.IDENTITY, MatrixLevel.DIAGONAL, MatrixLevel.BLOCK_DIAGONAL):
        dropped[1:] += sub_mod
        dropped[:-1] += sup_mod

    if kept is MatrixLevel.IDENTITY:
        retained = np.broadcast_to(np.asarray(inv_dt, dtype=float), (n,))
    else:
        retained = diag_measure

    slack = retained - dropped
    margin = float(slack.min())
    return bool(np.all(slack > 0.0)), margin
