import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import expm_multiply

from warpdirac import _kernels
from warpdirac.evolution import (
    ExactPropagator,
    KrylovNotConverged,
    NormDrift,
    PropagatorConfig,
    StepTooLarge,
    TrajectoryRecord,
    acceleration_series,
    evolve_exact,
    evolve_momentum_oracle,
    evolve_timeordered,
)
from warpdirac.hamiltonians import (
    Coefficient,
    Frame,
    HamiltonianSpec,
    Term,
    hamiltonian_terms,
)
from warpdirac.operators import SIGMA, FockSpace, annihilation, tensor
from warpdirac.spacetime import AlcubierreProfile, DiracParams, IonParams, ion_to_dirac
from warpdirac.states import SPIN_PLUS, SPIN_UP, InitialStateSpec, MomentumGrid, build_initial_state

TWO_PI = 2 * math.pi
KAPPA = TWO_PI * 1.46e3 / math.sqrt(2)
MASSIVE = DiracParams(KAPPA, TWO_PI * 3.05e3 / KAPPA**2, profile=AlcubierreProfile.constant(2.0))


def scaled_ion(**kw):
    base = dict(nu=TWO_PI * 100e3, omega0=TWO_PI * 2e6, Omega0=TWO_PI * 1460 / 59,
                Omega_p=TWO_PI * 50e3 / 59, Delta=0.0, eta=0.0146)
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return IonParams(**base)


# ------------------------------------------------------------------ kernels

@settings(deadline=None, max_examples=30)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=12), st.randoms(use_true_random=False))
def test_tridiag_eigh_matches_numpy(diag, rnd):
    d = np.array(diag)
    off = np.array([rnd.uniform(0.01, 3) for _ in range(d.size - 1)])
    w, z = _kernels.tridiag_eigh(d, off)
    T = np.diag(d) + np.diag(off, 1) + np.diag(off, -1)
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(T), atol=1e-10)
    np.testing.assert_allclose(T @ z, z * w, atol=1e-9)


def test_lanczos_matches_scipy():
    rng = np.random.default_rng(3)
    n = 60
    A = sp.random(n, n, density=0.1, random_state=4) + 1j * sp.random(n, n, density=0.1, random_state=5)
    H = ((A + A.getH()) / 2).tocsr()
    H = H / abs(H).sum(axis=1).max()
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    dt = 0.3
    Q = np.zeros((41, n), complex)
    w = np.zeros(n, complex)
    out, k, err = _kernels.lanczos_expm(H.indptr.astype(np.int64), H.indices.astype(np.int64),
                                        H.data.astype(complex), v.astype(complex), dt, 40, 1e-12, Q, w)
    ref = expm_multiply(-1j * dt * H, v)
    assert err <= 1e-12
    np.testing.assert_allclose(out, ref, atol=1e-11 * np.linalg.norm(v))


# ------------------------------------------------------------------ config

def test_config_validation():
    with pytest.raises(ValueError):
        PropagatorConfig(t_max=1.0, sample_interval=2.0)
    with pytest.raises(ValueError):
        PropagatorConfig(t_max=1.0, sample_interval=0.1, dt=0.2)
    with pytest.raises(ValueError):
        PropagatorConfig(t_max=1.0, sample_interval=0.1, scheme="rk4")
    cfg = PropagatorConfig(t_max=1.0, sample_interval=0.25, dt=0.07)
    assert cfg.n_samples == 4
    assert cfg.steps_per_sample() == 4
    assert cfg.effective_dt() == pytest.approx(0.0625)


def test_record_norm_check():
    rec = TrajectoryRecord(np.zeros(2), np.zeros(2), np.zeros(2), np.zeros((2, 3)),
                           np.array([1.0, 1 + 1e-6]), 1.0)
    with pytest.raises(NormDrift):
        rec.check_norm(1e-8)


# ------------------------------------------------------------------ exact backend

def test_exact_needs_dirac_frame():
    with pytest.raises(ValueError):
        ExactPropagator(HamiltonianSpec(Frame.ION_EFFECTIVE, FockSpace(8), ion=scaled_ion()))


@pytest.mark.parametrize("spin", [SPIN_UP, SPIN_PLUS])
def test_exact_matches_oracle(spin):
    prop = PropagatorConfig(t_max=1.5e-3, sample_interval=1e-5)
    spec0 = InitialStateSpec(spin=spin)
    space = FockSpace(256)
    a = evolve_exact(HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=MASSIVE),
                     build_initial_state(spec0, space), prop, snapshot_times=(1e-3,))
    b = evolve_momentum_oracle(MASSIVE, spec0, prop, MomentumGrid(), snapshot_times=(1e-3,))
    np.testing.assert_allclose(a.mean_X, b.mean_X, atol=1e-10 * np.abs(b.mean_X).max())
    np.testing.assert_allclose(a.var_x, b.var_x, atol=1e-9)
    np.testing.assert_allclose(a.spin_exp, b.spin_exp, atol=1e-10)
    np.testing.assert_allclose(a.snapshots[0].density_X, b.snapshots[0].density_X, atol=1e-10)


def test_fock_displacement_agrees_for_small_shift():
    d = MASSIVE.with_profile(AlcubierreProfile.constant(0.5))
    prop = PropagatorConfig(t_max=5e-4, sample_interval=5e-5)
    space = FockSpace(128)
    spec = HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=d)
    st_ = build_initial_state(InitialStateSpec(), space)
    a = evolve_exact(spec, st_, prop)
    b = evolve_exact(spec, st_, prop, displacement="fock")
    np.testing.assert_allclose(a.mean_X, b.mean_X, atol=1e-10)


def test_massless_eigenstate_moves_rigidly():
    d = DiracParams(KAPPA, profile=AlcubierreProfile.constant(2.0))
    prop = PropagatorConfig(t_max=1e-3, sample_interval=1e-4)
    space = FockSpace(64)
    rec = evolve_exact(HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=d),
                       build_initial_state(InitialStateSpec(spin=SPIN_UP), space), prop)
    np.testing.assert_allclose(rec.mean_x_over_c, 3.0 * rec.times, atol=1e-15)
    np.testing.assert_allclose(rec.var_x, 0.5, atol=1e-12)


def test_acceleration_of_quadratic_is_exact():
    t = np.linspace(0, 1, 11)
    rec = TrajectoryRecord(t, 3 * t**2 + t, np.zeros_like(t), np.zeros((11, 3)), np.ones(11), 1.0)
    _, acc = acceleration_series(rec)
    np.testing.assert_allclose(acc, 6.0, atol=1e-9)


# ------------------------------------------------------------------ time-ordered backend

def test_constant_hamiltonian_midpoint_is_exact():
    d = MASSIVE.with_profile(AlcubierreProfile.constant(0.3))
    space = FockSpace(64)
    spec = HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=d)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=2e-4, sample_interval=2e-5, backend="timeordered")
    a = evolve_timeordered(spec, st_, cfg)
    b = evolve_exact(spec, st_, replace(cfg, backend="exact"), displacement="fock")
    np.testing.assert_allclose(a.mean_X, b.mean_X, atol=1e-10)
    np.testing.assert_allclose(a.spin_exp, b.spin_exp, atol=1e-10)


def test_commuting_timedep_dirac_matches_exact():
    d = MASSIVE.with_profile(AlcubierreProfile.polynomial((0.0, 0.56, 1346.0, -642377.0)))
    space = FockSpace(64)
    spec = HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=d)
    st_ = build_initial_state(InitialStateSpec(), space)
    cfg = PropagatorConfig(t_max=2e-4, sample_interval=2e-5, backend="timeordered", scheme="magnus4")
    a = evolve_timeordered(spec, st_, cfg)
    b = evolve_exact(spec, st_, replace(cfg, backend="exact"), displacement="fock")
    np.testing.assert_allclose(a.mean_X, b.mean_X, atol=1e-9)


def test_effective_ion_matches_exact():
    ion = scaled_ion(Delta=-TWO_PI * 6.1e3 / 59, Omega0=TWO_PI * 1460 / 59)
    space = FockSpace(48)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=2e-3, sample_interval=1e-4, backend="timeordered")
    eff = evolve_timeordered(HamiltonianSpec(Frame.ION_EFFECTIVE, space, ion=ion), st_, cfg)
    ref = evolve_exact(HamiltonianSpec(Frame.DIRAC_HADAMARD, space, dirac=ion_to_dirac(ion)), st_,
                       replace(cfg, backend="exact"), displacement="fock")
    assert eff.meta["tail_mass"] < 1e-20
    scale = max(np.abs(ref.mean_X).max(), ion_to_dirac(ion).kinetic * cfg.t_max)
    assert np.max(np.abs(eff.mean_X - ref.mean_X)) / scale < 1e-8


def _lab_final(scheme, dt, t_max=2e-4, n_max=16, **kw):
    ion = scaled_ion()
    space = FockSpace(n_max)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=t_max, sample_interval=t_max, backend="timeordered", dt=dt, scheme=scheme, **kw)
    return evolve_timeordered(HamiltonianSpec(Frame.ION_LAB, space, ion=ion), st_, cfg).mean_X[-1]


@pytest.mark.slow
def test_magnus4_is_fourth_order():
    # the default Krylov tolerance puts an error floor near 4e-7 relative
    dt = 1e-8
    x = [_lab_final("magnus4", dt / 2**k, max_step_phase=0.3, krylov_tol=1e-14) for k in range(3)]
    ratio = (x[0] - x[1]) / (x[1] - x[2])
    assert 10 < ratio < 22


@pytest.mark.slow
def test_midpoint_is_second_order():
    dt = 6e-9
    x = [_lab_final("midpoint", dt / 2**k) for k in range(3)]
    ratio = (x[0] - x[1]) / (x[1] - x[2])
    assert 3 < ratio < 5


@pytest.mark.slow
def test_dt_halving_invariant_magnus4():
    ion = scaled_ion()
    space = FockSpace(24)
    spec = HamiltonianSpec(Frame.ION_LAB, space, ion=ion)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=1e-3, sample_interval=1e-4, backend="timeordered", scheme="magnus4")
    a = evolve_timeordered(spec, st_, cfg)
    b = evolve_timeordered(spec, st_, replace(cfg, dt=a.meta["dt"] / 2))
    assert abs(a.mean_X[-1] - b.mean_X[-1]) / abs(b.mean_X[-1]) < 1e-6


@pytest.mark.slow
def test_lab_frame_sideband_reduction():
    # without modulation the lab sidebands reduce to the Dirac kinetic term
    ion = scaled_ion(Omega_p=0.0, eta=0.0)
    space = FockSpace(24)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=3e-3, sample_interval=1.5e-4, backend="timeordered")
    lab = evolve_timeordered(HamiltonianSpec(Frame.ION_LAB, space, ion=ion), st_, cfg)
    ref = evolve_exact(HamiltonianSpec(Frame.DIRAC_HADAMARD, space, dirac=ion_to_dirac(ion)), st_,
                       replace(cfg, backend="exact"))
    rel = np.abs(lab.mean_X[1:] - ref.mean_X[1:]) / np.abs(ref.mean_X[1:])
    assert rel.max() < 0.05


class LinearDriveSpec(HamiltonianSpec):
    """Lab Hamiltonian with the parametric (a + a^dag)^2 term replaced by a resonant linear drive."""

    def terms(self):
        terms = hamiltonian_terms(self)
        a = annihilation(self.space)
        ion = self.ion
        terms[1] = Term(tensor(SIGMA["i"], (a + a.T).tocsr()),
                        Coefficient((4 * ion.eta * ion.Omega_p,), ion.nu, 0.0))
        return terms


@pytest.mark.slow
def test_linear_drive_variant_reproduces_warp():
    ion = scaled_ion()
    space = FockSpace(24)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=3e-3, sample_interval=1.5e-4, backend="timeordered")
    lab = evolve_timeordered(LinearDriveSpec(Frame.ION_LAB, space, ion=ion), st_, cfg, displacement=0.0)
    ref = evolve_exact(HamiltonianSpec(Frame.DIRAC_HADAMARD, space, dirac=ion_to_dirac(ion)), st_,
                       replace(cfg, backend="exact"))
    assert ref.mean_X[-1] == pytest.approx(3 * ion_to_dirac(ion).kinetic * cfg.t_max, rel=1e-3)
    rel = np.abs(lab.mean_X[1:] - ref.mean_X[1:]) / np.abs(ref.mean_X[1:])
    assert rel.max() < 1e-3


def test_step_too_large():
    space = FockSpace(16)
    spec = HamiltonianSpec(Frame.ION_LAB, space, ion=scaled_ion())
    st_ = build_initial_state(InitialStateSpec(), space)
    cfg = PropagatorConfig(t_max=1e-5, sample_interval=1e-5, backend="timeordered", dt=1e-6)
    with pytest.raises(StepTooLarge):
        evolve_timeordered(spec, st_, cfg)


def test_norm_drift_raised():
    space = FockSpace(16)
    spec = HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=MASSIVE)
    st_ = build_initial_state(InitialStateSpec(), space)
    cfg = PropagatorConfig(t_max=1e-4, sample_interval=1e-5, backend="timeordered", tolerance=1e-18)
    with pytest.raises(NormDrift):
        evolve_timeordered(spec, st_, cfg)


def test_krylov_not_converged():
    space = FockSpace(16)
    spec = HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=MASSIVE)
    st_ = build_initial_state(InitialStateSpec(spin=SPIN_PLUS), space)
    cfg = PropagatorConfig(t_max=1e-4, sample_interval=1e-5, backend="timeordered", krylov_max_dim=2)
    with pytest.raises(KrylovNotConverged):
        evolve_timeordered(spec, st_, cfg)


def test_snapshot_must_be_sample_time():
    space = FockSpace(16)
    spec = HamiltonianSpec(Frame.DIRAC_CHIRAL, space, dirac=MASSIVE)
    st_ = build_initial_state(InitialStateSpec(), space)
    cfg = PropagatorConfig(t_max=1e-4, sample_interval=1e-5, backend="timeordered")
    with pytest.raises(ValueError, match="sample time"):
        evolve_timeordered(spec, st_, cfg, snapshot_times=(1.5e-5,))
