import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpdirac.hamiltonians import (
    Coefficient,
    Frame,
    HamiltonianSpec,
    dirac_hamiltonian,
    flat_hamiltonian,
    hadamard_conjugate,
    hadamard_state,
    ion_effective_hamiltonian,
    ion_lab_hamiltonian,
    operator_norm_bound,
)
from warpdirac.operators import SIGMA, FockSpace, is_hermitian, momentum_op, tensor
from warpdirac.spacetime import AlcubierreProfile, DiracParams, IonParams, ion_to_dirac

TWO_PI = 2 * math.pi
SPACE = FockSpace(16)


def _ion(**kw):
    base = dict(nu=TWO_PI * 5.9e6, omega0=TWO_PI * 1.789e9, Omega0=TWO_PI * 1.46e3,
                Omega_p=TWO_PI * 50e3, Delta=-TWO_PI * 6.1e3, eta=0.0146)
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return IonParams(**base)


def test_coefficient_evaluation():
    c = Coefficient((1.0, 2.0), 3.0, 0.5)
    assert c(0.7) == pytest.approx((1 + 1.4) * math.sin(2.1 + 0.5))
    assert Coefficient.const(4.0)(123.0) == pytest.approx(4.0)


def test_spec_requires_matching_block():
    d = DiracParams(1.0)
    with pytest.raises(ValueError):
        HamiltonianSpec(Frame.DIRAC_CHIRAL, SPACE)
    with pytest.raises(ValueError):
        HamiltonianSpec(Frame.ION_LAB, SPACE, dirac=d)
    with pytest.raises(ValueError):
        dirac_hamiltonian(HamiltonianSpec(Frame.ION_EFFECTIVE, SPACE, ion=_ion()), 0.0)


def test_chiral_form():
    d = DiracParams(2.0, 0.25, profile=AlcubierreProfile.constant(1.5))
    H = dirac_hamiltonian(HamiltonianSpec(Frame.DIRAC_CHIRAL, SPACE, dirac=d), 0.0).toarray()
    P = momentum_op(SPACE)
    ref = (2.0 * (tensor(SIGMA["z"], P) + 1.5 * tensor(SIGMA["i"], P))
           - 1.0 * tensor(SIGMA["x"], np.eye(16))).toarray()
    np.testing.assert_allclose(H, ref, atol=1e-14)


def test_hadamard_frame_is_conjugate_of_chiral():
    d = DiracParams(2.0, 0.25, profile=AlcubierreProfile.polynomial((0, 0.5, 3.0)))
    for t in (0.0, 0.3):
        Hc = dirac_hamiltonian(HamiltonianSpec(Frame.DIRAC_CHIRAL, SPACE, dirac=d), t)
        Hh = dirac_hamiltonian(HamiltonianSpec(Frame.DIRAC_HADAMARD, SPACE, dirac=d), t)
        np.testing.assert_allclose(hadamard_conjugate(Hc).toarray(), Hh.toarray(), atol=1e-13)


def test_effective_equals_hadamard_dirac():
    ion = _ion()
    d = ion_to_dirac(ion)
    He = ion_effective_hamiltonian(ion, SPACE, 0.0).toarray()
    Hd = dirac_hamiltonian(HamiltonianSpec(Frame.DIRAC_HADAMARD, SPACE, dirac=d), 0.0).toarray()
    np.testing.assert_allclose(He, Hd, atol=1e-9 * np.abs(Hd).max())


def test_flat_hamiltonian_drops_warp():
    d = DiracParams(1.0, 0.3, profile=AlcubierreProfile.constant(2.0))
    F = flat_hamiltonian(d, SPACE).toarray()
    H0 = dirac_hamiltonian(HamiltonianSpec(Frame.DIRAC_CHIRAL, SPACE, dirac=d.with_profile(AlcubierreProfile())), 0)
    np.testing.assert_allclose(F, H0.toarray())


def test_hadamard_state_involution():
    v = np.arange(32) + 1j
    np.testing.assert_allclose(hadamard_state(hadamard_state(v)), v)


@pytest.mark.parametrize("frame", list(Frame))
def test_all_frames_hermitian(frame):
    if frame.is_dirac:
        spec = HamiltonianSpec(frame, SPACE, dirac=DiracParams(3.0, 0.1, profile=AlcubierreProfile.constant(2)))
    else:
        spec = HamiltonianSpec(frame, SPACE, ion=_ion())
    for t in (0.0, 1.3e-7, 2e-4):
        assert is_hermitian(spec.at(t))


def test_lab_static_part():
    ion = _ion(Omega0=0.0, Omega_p=0.0, eta=0.0, Delta=0.0)
    H = ion_lab_hamiltonian(ion, SPACE, 0.0).toarray()
    n = np.arange(16)
    ref = np.concatenate([ion.omega0 / 2 + ion.nu * n, -ion.omega0 / 2 + ion.nu * n])
    np.testing.assert_allclose(np.diag(H).real, ref)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


@settings(deadline=None, max_examples=25)
@given(st.floats(0, 1e-3))
def test_norm_bound_dominates(t):
    spec = HamiltonianSpec(Frame.ION_LAB, FockSpace(8), ion=_ion())
    H = spec.at(t).toarray()
    assert np.linalg.norm(H, 2) <= operator_norm_bound(spec.terms(), t) * (1 + 1e-12)
