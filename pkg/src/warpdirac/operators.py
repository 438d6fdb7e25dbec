"""Truncated Fock space, spin operators and the spin (x) boson product basis.

Basis ordering is spin-major: |s> (x) |n> sits at flat index s * n_max + n, with
s = 0 the spin-up (sigma_z = +1) state.  Banded operators are returned as
``scipy.sparse`` CSR matrices, dense ones as ``numpy`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

PI_M14 = np.pi ** -0.25

SIGMA = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
RAISE_SPIN = np.array([[0, 1], [0, 0]], dtype=complex)  # |up><down|


@dataclass(frozen=True)
class FockSpace:
    """Oscillator levels 0 .. n_max - 1 tensored with a spin-1/2."""

    n_max: int = 512

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max}")

    @property
    def dim(self) -> int:
        return 2 * self.n_max


def annihilation(space: FockSpace) -> sp.csr_matrix:
    n = np.arange(1, space.n_max)
    return sp.diags(np.sqrt(n).astype(complex), 1, format="csr")


def creation(space: FockSpace) -> sp.csr_matrix:
    return annihilation(space).T.tocsr()


def number_op(space: FockSpace) -> sp.csr_matrix:
    return sp.diags(np.arange(space.n_max, dtype=complex), 0, format="csr")


def position_op(space: FockSpace) -> sp.csr_matrix:
    """X = (a + a^dag) / sqrt(2) in oscillator lengths."""
    a = annihilation(space)
    return ((a + a.T) / np.sqrt(2.0)).tocsr()


def momentum_op(space: FockSpace) -> sp.csr_matrix:
    """P = -i (a - a^dag) / sqrt(2), conjugate to X with hbar = 1."""
    a = annihilation(space)
    return (-1j * (a - a.T) / np.sqrt(2.0)).tocsr()


def identity(space: FockSpace) -> sp.csr_matrix:
    return sp.identity(space.n_max, dtype=complex, format="csr")


def pauli(axis: str) -> np.ndarray:
    try:
        return SIGMA[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def tensor(spin_part, fock_part) -> sp.csr_matrix:
    """Kronecker product spin (x) fock in the spin-major basis."""
    if np.shape(spin_part) != (2, 2):
        raise ValueError(f"spin operator must be 2x2, got {np.shape(spin_part)}")
    return sp.kron(sp.csr_matrix(spin_part), sp.csr_matrix(fock_part), format="csr")


def is_hermitian(op, rtol: float = 1e-12) -> bool:
    if sp.issparse(op):
        diff = abs(op - op.getH())
        big = abs(op).max() if op.nnz else 0.0
        worst = diff.max() if diff.nnz else 0.0
    else:
        op = np.asarray(op)
        big = np.abs(op).max(initial=0.0)
        worst = np.abs(op - op.conj().T).max(initial=0.0)
    return worst <= rtol * big


def momentum_eigensystem(space: FockSpace) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unitary eigenvectors of the truncated momentum operator.

    X is real symmetric tridiagonal, and P = -G X G^dag with G = diag(i^-n),
    so the eigenvectors of P follow from those of X without a complex solve.
    """
    off = np.sqrt(np.arange(1, space.n_max) / 2.0)
    x, Q = eigh_tridiagonal(np.zeros(space.n_max), off)
    phases = (-1j) ** np.arange(space.n_max)
    return -x, phases[:, None] * Q


def hermite_functions(n_max: int, X) -> np.ndarray:
    """Oscillator eigenfunctions <X|n> for n < n_max, shape (n_max, len(X)).

    Uses the normalised three-term recurrence
    psi_n = sqrt(2/n) X psi_{n-1} - sqrt((n-1)/n) psi_{n-2},
    carrying a running power-of-two scale so that neither the Gaussian factor
    nor the polynomial part under- or overflows for large |X|.
    """
    X = np.atleast_1d(np.asarray(X, dtype=float))
    out = np.empty((n_max, X.size))
    log_scale = -0.5 * X**2  # log of the factor pulled out of prev/cur
    prev = np.zeros_like(X)
    cur = np.full_like(X, PI_M14)

    def emit(n):
        deep = log_scale < -600.0
        if not deep.any():
            out[n] = cur * np.exp(log_scale)
            return
        out[n] = np.where(deep, 0.0, cur * np.exp(np.where(deep, 0.0, log_scale)))
        mag = np.abs(cur[deep])
        with np.errstate(divide="ignore"):
            val = np.exp(np.log(mag) + log_scale[deep])
        out[n, deep] = np.sign(cur[deep]) * val

    emit(0)
    for n in range(1, n_max):
        nxt = np.sqrt(2.0 / n) * X * cur - np.sqrt((n - 1) / n) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if big.any():
            cur[big] *= 1e-150
            prev[big] *= 1e-150
            log_scale[big] += 150 * np.log(10.0)
        emit(n)
    return out


def hermite_overlap(n: int, X):
    """<X|n> = (sqrt2/2)^n (n!)^-1/2 pi^-1/4 exp(-X^2/2) H_n(X)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    res = hermite_functions(n + 1, X)[n]
    return res[0] if np.ndim(X) == 0 else res


@dataclass
class QuantumState:
    """Amplitudes over spin (x) Fock(n_max).

    ``offset`` is an exact translation of the motional state by that many
    oscillator lengths; the stored amplitudes describe the untranslated state.
    The exact propagator keeps the warp displacement here so that it never
    costs Fock-space resolution.
    """

    amplitudes: np.ndarray
    n_max: int
    offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 * self.n_max,):
            raise ValueError(
                f"expected {2 * self.n_max} amplitudes, got {self.amplitudes.shape}"
            )

    @property
    def dim(self) -> int:
        return 2 * self.n_max

    @property
    def space(self) -> FockSpace:
        return FockSpace(self.n_max)

    def spinor_components(self) -> np.ndarray:
        """Amplitudes reshaped to (2, n_max)."""
        return self.amplitudes.reshape(2, self.n_max)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tail_mass(self, levels: int = 8) -> float:
        """Probability in the top ``levels`` Fock levels."""
        return float(np.sum(np.abs(self.spinor_components()[:, -levels:]) ** 2))

    def position_moments(self) -> tuple[float, float]:
        """<X> and <X^2>, including the stored offset."""
        X = position_op(self.space)
        c = self.spinor_components()
        xc = (X @ c.T).T
        m1 = np.vdot(c, xc).real
        m2 = np.vdot(xc, xc).real
        return m1 + self.offset, m2 + 2 * self.offset * m1 + self.offset**2

    def spin_expectations(self) -> np.ndarray:
        c = self.spinor_components()
        rho = c @ c.conj().T
        return np.array([np.trace(rho @ SIGMA[k]).real for k in "xyz"])

    def materialize(self) -> "QuantumState":
        """Apply the stored offset in the truncated Fock space (lossy near n_max)."""
        if self.offset == 0:
            return self
        p, V = momentum_eigensystem(self.space)
        D = (V * np.exp(-1j * self.offset * p)) @ V.conj().T
        amps = (D @ self.spinor_components().T).T.reshape(-1)
        return QuantumState(amps, self.n_max, 0.0, dict(self.meta))


def expectation(state: QuantumState, op, hermitian: bool = True):
    """<psi|op|psi> on the stored amplitudes (offset is not applied).

    For Hermitian ``op`` the real part is returned after checking that the
    imaginary part is negligible.
    """
    psi = state.amplitudes if isinstance(state, QuantumState) else np.asarray(state)
    if op.shape != (psi.size, psi.size):
        raise ValueError(f"operator shape {op.shape} does not match state dim {psi.size}")
    val = np.vdot(psi, op @ psi)
    if hermitian:
        scale = max(1.0, abs(val))
        if abs(val.imag) > 1e-10 * scale:
            raise ValueError(f"expectation has imaginary part {val.imag:.3g}")
        return float(val.real)
    return complex(val)
