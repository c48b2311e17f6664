"""Independent reference implementations used by the tests."""

import numpy as np


def dense_lu_solve(a, b):
    """Gaussian elimination with partial pivoting on a dense copy."""
    a = np.array(a, dtype=float)
    x = np.array(b, dtype=float)
    n = a.shape[0]
    for k in range(n - 1):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        x[k + 1:] -= f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def random_dominant_tridiagonal(rng, n, margin=0.1):
    sub = rng.uniform(-1.0, 1.0, n - 1)
    sup = rng.uniform(-1.0, 1.0, n - 1)
    off = np.zeros(n)
    off[1:] += np.abs(sub)
    off[:-1] += np.abs(sup)
    sign = rng.choice([-1.0, 1.0], n)
    diag = sign * (off + margin + rng.uniform(0.0, 2.0, n))
    return sub, diag, sup


def random_dominant_blocks(rng, n, m, margin=0.1):
    sub = rng.uniform(-1.0, 1.0, (n - 1, m, m))
    sup = rng.uniform(-1.0, 1.0, (n - 1, m, m))
    diag = rng.uniform(-1.0, 1.0, (n, m, m))
    off = np.abs(diag).sum(axis=2) - np.abs(np.einsum("nii->ni", diag))
    off[1:] += np.abs(sub).sum(axis=2)
    off[:-1] += np.abs(sup).sum(axis=2)
    idx = np.arange(m)
    diag[:, idx, idx] = off + margin + rng.uniform(0.0, 2.0, (n, m))
    return sub, diag, sup


def explicit_planar_diffusion_rhs(temp, dx, nu, source, t_b):
    """Textbook second difference with Dirichlet ghosts half a cell out."""
    n = temp.size
    h = np.empty(n)
    for j in range(n):
        left = t_b if j == 0 else temp[j - 1]
        right = t_b if j == n - 1 else temp[j + 1]
        dl = dx / 2 if j == 0 else dx
        dr = dx / 2 if j == n - 1 else dx
        h[j] = nu * ((right - temp[j]) / dr - (temp[j] - left) / dl) / dx + source
    return h
