"""Hamiltonians of the warp-drive Dirac particle and of its trapped-ion realisation.

Every Hamiltonian is a finite sum of fixed sparse operators weighted by scalar
coefficients of the form ``poly(t) * sin(omega t + phase)``.  The builders
evaluate that sum; the time-ordered propagator consumes the same terms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import polynomial as P

from .operators import (
    HADAMARD,
    RAISE_SPIN,
    SIGMA,
    FockSpace,
    annihilation,
    identity,
    momentum_op,
    number_op,
    tensor,
)
from .spacetime import DiracParams, IonParams


class Frame(str, enum.Enum):
    DIRAC_CHIRAL = "dirac_chiral"
    DIRAC_HADAMARD = "dirac_hadamard"
    ION_LAB = "ion_lab"
    ION_EFFECTIVE = "ion_effective"

    @property
    def is_dirac(self) -> bool:
        return self in (Frame.DIRAC_CHIRAL, Frame.DIRAC_HADAMARD)


class Coefficient(NamedTuple):
    """poly(t) * sin(omega t + phase) with ``poly`` in ascending powers."""

    poly: tuple
    omega: float = 0.0
    phase: float = np.pi / 2

    def __call__(self, t):
        return P.polyval(t, self.poly) * np.sin(self.omega * t + self.phase)

    @classmethod
    def const(cls, value: float = 1.0) -> "Coefficient":
        return cls((float(value),))


class Term(NamedTuple):
    matrix: sp.csr_matrix
    coeff: Coefficient


@dataclass(frozen=True)
class HamiltonianSpec:
    frame: Frame
    space: FockSpace
    dirac: Optional[DiracParams] = None
    ion: Optional[IonParams] = None

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        if self.frame.is_dirac:
            if self.dirac is None or self.ion is not None:
                raise ValueError(f"{self.frame.value} needs exactly the dirac parameter block")
        elif self.ion is None or self.dirac is not None:
            raise ValueError(f"{self.frame.value} needs exactly the ion parameter block")

    def terms(self) -> list[Term]:
        return hamiltonian_terms(self)

    def at(self, t: float) -> sp.csr_matrix:
        return evaluate_terms(self.terms(), t)


def spin_roles(frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    """(kinetic, mass) spin matrices of the flat Dirac Hamiltonian in ``frame``."""
    if frame is Frame.DIRAC_CHIRAL:
        return SIGMA["z"], SIGMA["x"]
    if frame is Frame.DIRAC_HADAMARD:
        return SIGMA["x"], SIGMA["z"]
    raise ValueError(f"{frame} is not a Dirac frame")


def _profile_poly(dirac: DiracParams) -> tuple:
    return tuple(dirac.profile.velocity_coeffs())


def _omega_p_poly(ion: IonParams) -> tuple:
    if ion.profile is None:
        return (float(ion.Omega_p),)
    return tuple(ion.profile.velocity_coeffs() * ion.Omega0 / (4.0 * ion.eta))


def hamiltonian_terms(spec: HamiltonianSpec) -> list[Term]:
    space = spec.space
    I_f = identity(space)
    if spec.frame.is_dirac:
        d = spec.dirac
        kin, mass = spin_roles(spec.frame)
        Pm = momentum_op(space)
        return [
            Term(d.kinetic * tensor(kin, Pm), Coefficient.const()),
            Term(d.kinetic * tensor(SIGMA["i"], Pm), Coefficient(_profile_poly(d))),
            Term(-d.rest_energy * tensor(mass, I_f), Coefficient.const()),
        ]
    ion = spec.ion
    a = annihilation(space)
    ad = a.T.tocsr()
    hb = ion.hbar
    if spec.frame is Frame.ION_LAB:
        static = hb * ion.omega0 / 2 * tensor(SIGMA["z"], I_f) + hb * ion.nu * tensor(
            SIGMA["i"], number_op(space)
        )
        x2 = (a + ad) @ (a + ad)
        blue = tensor(RAISE_SPIN, ad)
        red = tensor(RAISE_SPIN, a)
        return [
            Term(static.tocsr(), Coefficient.const()),
            Term(hb * tensor(SIGMA["i"], x2), Coefficient(_omega_p_poly(ion), ion.nu, 0.0)),
            Term(hb * (blue + blue.getH()).tocsr(), Coefficient((ion.Omega0,), ion.omega_b, 0.0)),
            Term(hb * (red + red.getH()).tocsr(), Coefficient((-ion.Omega0,), ion.omega_r, 0.0)),
        ]
    # effective interaction-picture Hamiltonian
    sq = (a - ad).tocsr()
    return [
        Term(hb * ion.Delta / 2 * tensor(SIGMA["z"], I_f), Coefficient.const()),
        Term(hb * tensor(SIGMA["i"], -2j * ion.eta * sq), Coefficient(_omega_p_poly(ion))),
        Term(hb * tensor(SIGMA["x"], ion.Omega0 / 2j * sq), Coefficient.const()),
    ]


def evaluate_terms(terms: Sequence[Term], t: float) -> sp.csr_matrix:
    H = terms[0].coeff(t) * terms[0].matrix
    for term in terms[1:]:
        H = H + term.coeff(t) * term.matrix
    return H.tocsr()


def dirac_hamiltonian(spec: HamiltonianSpec, t: float) -> sp.csr_matrix:
    """cA(sigma_kin + v_s(t)) P - m c^2 sigma_mass in the chiral or Hadamard frame."""
    if not spec.frame.is_dirac:
        raise ValueError(f"dirac_hamiltonian needs a Dirac frame, got {spec.frame.value}")
    return spec.at(t)


def flat_hamiltonian(
    dirac: DiracParams, space: FockSpace, frame: Frame = Frame.DIRAC_CHIRAL
) -> sp.csr_matrix:
    """A c P sigma_z - m c^2 sigma_x (or its Hadamard image): v_s forced to zero."""
    kin, mass = spin_roles(Frame(frame))
    return (
        dirac.kinetic * tensor(kin, momentum_op(space))
        - dirac.rest_energy * tensor(mass, identity(space))
    ).tocsr()


def ion_lab_hamiltonian(ion: IonParams, space: FockSpace, t: float) -> sp.csr_matrix:
    return HamiltonianSpec(Frame.ION_LAB, space, ion=ion).at(t)


def ion_effective_hamiltonian(ion: IonParams, space: FockSpace, t: float) -> sp.csr_matrix:
    return HamiltonianSpec(Frame.ION_EFFECTIVE, space, ion=ion).at(t)


def hadamard_conjugate(op) -> sp.csr_matrix:
    """(H (x) 1) op (H (x) 1), exchanging sigma_x and sigma_z."""
    n = op.shape[0] // 2
    U = sp.kron(sp.csr_matrix(HADAMARD), sp.identity(n), format="csr")
    return (U @ op @ U).tocsr()


def hadamard_state(amplitudes: np.ndarray) -> np.ndarray:
    c = np.asarray(amplitudes).reshape(2, -1)
    return (HADAMARD @ c).reshape(-1)


def operator_norm_bound(terms: Sequence[Term], t: float) -> float:
    """Upper bound on ||H(t)||_2 from the max-row-sum norm of each term."""
    total = 0.0
    for term in terms:
        rows = np.asarray(abs(term.matrix).sum(axis=1)).ravel()
        total += abs(term.coeff(t)) * (rows.max() if rows.size else 0.0)
    return total

