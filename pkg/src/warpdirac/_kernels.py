"""Compiled kernels for the time-ordered propagator.

The Hamiltonian is H(t) = sum_k f_k(t) M_k with every M_k stored on one shared
CSR pattern (``data`` has one row per term) and f_k(t) = poly_k(t) sin(w_k t + phi_k).
Each step applies exp(-i dt H(t + dt/2)) (or a fourth-order Magnus pair of
exponentials) by a Lanczos projection.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit


def shared_pattern(matrices):
    """Put sparse matrices on one CSR pattern; returns (indptr, indices, data[K, nnz])."""
    mats = [sp.csr_matrix(m) for m in matrices]
    dim = mats[0].shape[0]
    pattern = abs(mats[0])
    for m in mats[1:]:
        pattern = pattern + abs(m)
    pattern = sp.csr_matrix(pattern)
    pattern.sum_duplicates()
    pattern.sort_indices()
    rows = np.repeat(np.arange(dim), np.diff(pattern.indptr))
    keys = rows.astype(np.int64) * dim + pattern.indices
    data = np.zeros((len(mats), keys.size), dtype=np.complex128)
    for k, m in enumerate(mats):
        coo = m.tocoo()
        idx = np.searchsorted(keys, coo.row.astype(np.int64) * dim + coo.col)
        np.add.at(data[k], idx, coo.data)
    return pattern.indptr.astype(np.int64), pattern.indices.astype(np.int64), data


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x, out):
    n = indptr.size - 1
    for i in range(n):
        acc = 0j
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        out[i] = acc


@njit(cache=True)
def _coefficients(polys, omegas, phases, t):
    K = polys.shape[0]
    f = np.empty(K)
    for k in range(K):
        acc = 0.0
        for d in range(polys.shape[1] - 1, -1, -1):
            acc = acc * t + polys[k, d]
        f[k] = acc * np.sin(omegas[k] * t + phases[k])
    return f


@njit(cache=True)
def tridiag_eigh(diag, off):
    """Eigenpairs of a small symmetric tridiagonal matrix (implicit-shift QL).

    ``off[i]`` couples rows i and i + 1.  LAPACK call overhead dominates at the
    Krylov sizes used here, so this replaces ``np.linalg.eigh``.
    """
    n = diag.size
    d = diag.copy()
    e = np.zeros(n)
    e[: n - 1] = off[: n - 1]
    z = np.eye(n)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.220446049250313e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise ArithmeticError("tridiagonal QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(n):
                    f = z[k, i + 1]
                    z[k, i + 1] = s * z[k, i] + c * f
                    z[k, i] = c * z[k, i] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, z


@njit(cache=True)
def lanczos_expm(indptr, indices, data, v, dt, m_max, tol, Q, w, k_hint=3):
    """exp(-i dt H) v for Hermitian CSR H; returns (result, krylov_dim, err_estimate).

    Convergence is first tested at dimension ``k_hint`` (the previous step's).
    """
    n = v.size
    beta0 = np.sqrt(np.sum(np.abs(v) ** 2))
    if beta0 == 0.0:
        return v.copy(), 0, 0.0
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    for i in range(n):
        Q[0, i] = v[i] / beta0
    y = np.zeros(1, dtype=np.complex128)
    k = m_max
    err = np.inf
    for j in range(m_max):
        _csr_matvec(indptr, indices, data, Q[j], w)
        a = 0.0
        for i in range(n):
            a += (np.conj(Q[j, i]) * w[i]).real
        alpha[j] = a
        for i in range(n):
            w[i] -= a * Q[j, i]
        if j > 0:
            for i in range(n):
                w[i] -= beta[j - 1] * Q[j - 1, i]
        b = np.sqrt(np.sum(np.abs(w) ** 2))
        if j + 1 >= k_hint or b < 1e-14 * (abs(a) + 1.0) or j == m_max - 1:
            evals, evecs = tridiag_eigh(alpha[: j + 1], beta[: j + 1])
            y = np.zeros(j + 1, dtype=np.complex128)
            for i in range(j + 1):
                coef = np.exp(-1j * dt * evals[i]) * evecs[0, i]
                for r in range(j + 1):
                    y[r] += evecs[r, i] * coef
            err = dt * b * abs(y[j])
            if err < tol or b < 1e-14 * (abs(a) + 1.0):
                k = j + 1
                break
        if j < m_max - 1:
            beta[j] = b
            for i in range(n):
                Q[j + 1, i] = w[i] / b
    out = np.zeros(n, dtype=np.complex128)
    for r in range(k):
        for i in range(n):
            out[i] += y[r] * Q[r, i]
    return out * beta0, k, err


@njit(cache=True)
def _assemble(polys, omegas, phases, data, t1, w1, t2, w2, H):
    """H = sum_k (w1 f_k(t1) + w2 f_k(t2)) M_k on the shared pattern."""
    f1 = _coefficients(polys, omegas, phases, t1)
    f2 = _coefficients(polys, omegas, phases, t2)
    K = data.shape[0]
    for jj in range(data.shape[1]):
        acc = 0j
        for kk in range(K):
            acc += (w1 * f1[kk] + w2 * f2[kk]) * data[kk, jj]
        H[jj] = acc


SQRT3 = np.sqrt(3.0)
GAUSS_LO = 0.5 - SQRT3 / 6
GAUSS_HI = 0.5 + SQRT3 / 6
CF4_A = (3 - 2 * SQRT3) / 12
CF4_B = (3 + 2 * SQRT3) / 12


@njit(cache=True)
def propagate(indptr, indices, data, polys, omegas, phases, psi0, t0, dt,
              n_samples, steps_per_sample, m_max, tol, scheme=0):
    """Step psi0 and return the states at the n_samples + 1 sample times.

    scheme 0 is the exponential midpoint rule exp(-i dt H(t + dt/2)); scheme 1
    is the fourth-order commutator-free Magnus pair built on the two Gauss
    nodes.  Returns (states, max Krylov dimension, max error estimate).
    """
    n = psi0.size
    states = np.empty((n_samples + 1, n), dtype=np.complex128)
    states[0] = psi0
    psi = psi0.copy()
    Q = np.empty((m_max, n), dtype=np.complex128)
    w = np.empty(n, dtype=np.complex128)
    H = np.empty(data.shape[1], dtype=np.complex128)
    max_k = 0
    max_err = 0.0
    step = 0
    k = 3
    for s in range(n_samples):
        for _ in range(steps_per_sample):
            t = t0 + step * dt
            if scheme == 0:
                _assemble(polys, omegas, phases, data, t + 0.5 * dt, 1.0, t, 0.0, H)
                psi, k, err = lanczos_expm(indptr, indices, H, psi, dt, m_max, tol, Q, w, max(k - 1, 2))
            else:
                t1 = t + GAUSS_LO * dt
                t2 = t + GAUSS_HI * dt
                _assemble(polys, omegas, phases, data, t1, CF4_B, t2, CF4_A, H)
                psi, k, err = lanczos_expm(indptr, indices, H, psi, dt, m_max, tol, Q, w, max(k - 1, 2))
                if k > max_k:
                    max_k = k
                if err > max_err:
                    max_err = err
                _assemble(polys, omegas, phases, data, t1, CF4_A, t2, CF4_B, H)
                psi, k, err = lanczos_expm(indptr, indices, H, psi, dt, m_max, tol, Q, w, max(k - 1, 2))
            if k > max_k:
                max_k = k
            if err > max_err:
                max_err = err
            step += 1
        states[s + 1] = psi
    return states, max_k, max_err
