"""Propagation backends and trajectory records.

* ``evolve_exact``: Dirac frames only.  H(t) commutes with itself at all times,
  so U(t) = D(c A s(t)) exp(-i H_flat t) with D a translation; H_flat is
  diagonalised once in the eigenbasis of the truncated momentum operator.
* ``evolve_timeordered``: any frame, exponential midpoint steps with a Lanczos
  exponential action (see ``_kernels``).
* ``evolve_momentum_oracle``: closed-form 2x2 propagation of every momentum mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .analysis import DensitySnapshot, density_from_momentum, wavepacket_density
from .hamiltonians import Frame, HamiltonianSpec, spin_roles
from .operators import SIGMA, QuantumState, momentum_eigensystem
from .spacetime import DiracParams, integrated_shift, ion_to_dirac, velocity_profile
from .states import (
    InitialStateSpec,
    MomentumGrid,
    momentum_amplitude,
    momentum_amplitude_derivative,
)


class NormDrift(ArithmeticError):
    """Propagation failed to conserve the norm within tolerance."""


class KrylovNotConverged(ArithmeticError):
    """The Lanczos exponential did not reach its tolerance within the subspace cap."""


class StepTooLarge(ValueError):
    """The requested time step cannot resolve the Hamiltonian."""


class Backend(str, enum.Enum):
    EXACT = "exact"
    TIME_ORDERED = "timeordered"
    MOMENTUM_ORACLE = "oracle"


SCHEMES = {"midpoint": 0, "magnus4": 1}


@dataclass(frozen=True)
class PropagatorConfig:
    t_max: float
    sample_interval: float
    backend: Backend = Backend.EXACT
    dt: Optional[float] = None
    tolerance: float = 1e-8
    max_step_phase: float = 0.1
    krylov_tol: float = 1e-12
    krylov_max_dim: int = 40
    scheme: str = "midpoint"

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend(self.backend))
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        if not 0 < self.sample_interval <= self.t_max * (1 + 1e-12):
            raise ValueError("need 0 < sample_interval <= t_max")
        if self.dt is not None and not 0 < self.dt <= self.sample_interval * (1 + 1e-12):
            raise ValueError("need 0 < dt <= sample_interval")

    @property
    def n_samples(self) -> int:
        return int(round(self.t_max / self.sample_interval))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples + 1) * self.sample_interval

    def steps_per_sample(self, dt: Optional[float] = None) -> int:
        """Steps per sample interval; the step is rounded down to fit exactly."""
        dt = self.dt if dt is None else dt
        if dt is None:
            raise ValueError("no time step set")
        return int(math.ceil(self.sample_interval / dt * (1 - 1e-12)))

    def effective_dt(self, dt: Optional[float] = None) -> float:
        return self.sample_interval / self.steps_per_sample(dt)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    mean_X: np.ndarray
    var_x: np.ndarray
    spin_exp: np.ndarray
    norm: np.ndarray
    c_sim: float
    snapshots: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def mean_x_over_c(self) -> np.ndarray:
        """<X> / (c A) in seconds."""
        return self.mean_X / self.c_sim

    @property
    def var_x_over_c2(self) -> np.ndarray:
        return self.var_x / self.c_sim**2

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))

    def check_norm(self, tolerance: float) -> None:
        if self.norm_drift >= tolerance:
            raise NormDrift(f"norm drift {self.norm_drift:.3e} exceeds {tolerance:.1e}")


def _fock_observables(psi: np.ndarray, n_max: int):
    """<X>, <X^2>, spin expectations and norm for a batch of states (T, 2 n_max)."""
    c = psi.reshape(psi.shape[0], 2, n_max)
    off = np.sqrt(np.arange(1, n_max) / 2.0)
    xc = np.zeros_like(c)
    xc[..., :-1] += off * c[..., 1:]
    xc[..., 1:] += off * c[..., :-1]
    m1 = np.einsum("tsn,tsn->t", c.conj(), xc).real
    m2 = np.einsum("tsn,tsn->t", xc.conj(), xc).real
    rho = np.einsum("tsn,trn->tsr", c, c.conj())
    spins = np.stack([np.einsum("tsr,rs->t", rho, SIGMA[k]).real for k in "xyz"], axis=1)
    norm = np.sqrt(np.einsum("tsn,tsn->t", c.conj(), c).real)
    tail = np.sum(np.abs(c[..., -8:]) ** 2, axis=(1, 2))
    return m1, m2, spins, norm, tail


def _block_propagators(energy_scale_p, rest, kin, mass, t):
    """exp(-i h t) for h = kp * kin - rest * mass, per mode; shape (n_modes, 2, 2).

    kin and mass anticommute, so h^2 = E^2 with E = sqrt(kp^2 + rest^2).
    """
    kp = energy_scale_p
    E = np.sqrt(kp**2 + rest**2)
    cos = np.cos(E * t)
    sinc = np.where(E > 0, np.sin(E * t) / np.where(E > 0, E, 1.0), t)
    h = kp[:, None, None] * kin - rest * mass
    return cos[:, None, None] * np.eye(2) - 1j * sinc[:, None, None] * h


class ExactPropagator:
    """U(t) = D(cA s(t)) exp(-i H_flat t) on a Fock truncation.

    With ``displacement="analytic"`` the translation is kept exactly in
    ``QuantumState.offset``; ``"fock"`` applies it inside the truncated space.
    """

    def __init__(self, spec: HamiltonianSpec, displacement: str = "analytic"):
        if not spec.frame.is_dirac:
            raise ValueError(
                f"exact propagation needs a Dirac frame; {spec.frame.value} does not commute in time"
            )
        if displacement not in ("analytic", "fock"):
            raise ValueError("displacement must be 'analytic' or 'fock'")
        self.spec = spec
        self.dirac = spec.dirac
        self.n_max = spec.space.n_max
        self.displacement = displacement
        self.kin, self.mass = spin_roles(spec.frame)
        self.p, self.V = momentum_eigensystem(spec.space)

    def _modes(self, state: QuantumState) -> np.ndarray:
        if state.n_max != self.n_max:
            raise ValueError("state and Hamiltonian use different truncations")
        if state.offset != 0:
            raise ValueError("initial state must not carry an offset")
        return self.V.conj().T @ state.spinor_components().T  # (n_modes, 2)

    def _evolve_modes(self, modes: np.ndarray, t: float) -> np.ndarray:
        d = self.dirac
        U = _block_propagators(d.kinetic * self.p, d.rest_energy, self.kin, self.mass, t)
        out = np.einsum("jab,jb->ja", U, modes)
        if self.displacement == "fock":
            shift = d.kinetic * integrated_shift(d.profile, t)
            out = out * np.exp(-1j * shift * self.p)[:, None]
        return out

    def shift_X(self, t):
        return self.dirac.kinetic * integrated_shift(self.dirac.profile, t)

    def state_at(self, state: QuantumState, t: float) -> QuantumState:
        modes = self._evolve_modes(self._modes(state), t)
        amps = (self.V @ modes).T.reshape(-1)
        offset = 0.0 if self.displacement == "fock" else float(self.shift_X(t))
        return QuantumState(amps, self.n_max, offset)

    def states(self, state: QuantumState, times: Sequence[float], chunk: int = 256) -> np.ndarray:
        """Fock amplitudes (T, 2 n_max) at every time; offsets are not included."""
        modes = self._modes(state)
        n = self.n_max
        out = np.empty((len(times), 2 * n), dtype=complex)
        for a in range(0, len(times), chunk):
            ts = times[a : a + chunk]
            evolved = np.stack([self._evolve_modes(modes, t) for t in ts], axis=1)  # (n, Tc, 2)
            fock = (self.V @ evolved.reshape(n, -1)).reshape(n, len(ts), 2)
            out[a : a + len(ts)] = fock.transpose(1, 2, 0).reshape(len(ts), 2 * n)
        return out

    def zitterbewegung_acceleration(self, state: QuantumState, times) -> np.ndarray:
        """-(2 m c^2 / hbar) <psi0| exp(2i H_flat t) sigma_y |psi0>, i.e. d^2(<x>/c)/dt^2.

        Evaluated in the H_flat eigenbasis, independent of any trajectory.
        """
        if self.spec.frame is not Frame.DIRAC_CHIRAL:
            raise ValueError("the acceleration identity is stated in the chiral frame")
        modes = self._modes(state)
        sy_modes = modes @ SIGMA["y"].T
        d = self.dirac
        out = np.empty(len(times))
        for i, t in enumerate(times):
            U = _block_propagators(d.kinetic * self.p, d.rest_energy, self.kin, self.mass, -2.0 * t)
            val = np.einsum("ja,jab,jb->", modes.conj(), U, sy_modes)
            out[i] = val.real
        return -2.0 * d.rest_energy * out


def _snapshot_list(snapshot_times, make_state, x_grid_for, c_sim):
    snaps = []
    for t in snapshot_times:
        st = make_state(t)
        snaps.append(wavepacket_density(st, x_grid_for(t), t=t, c_sim=c_sim))
    return snaps


def default_x_grid(dirac: DiracParams, t: float, n_points: int = 2048, pad: float = 8.0):
    """Position grid (oscillator lengths) covering the lightcone at time t, with margin.

    |dX/dt - cA v_s| <= cA, so Delta X(t) <= 1 + cA t for the default packets;
    the half-width also covers three times that bound (6 standard deviations).
    """
    shift = dirac.kinetic * integrated_shift(dirac.profile, t)
    spread = dirac.kinetic * t
    half = max(spread + pad, 3.0 * (spread + 1.0))
    return np.linspace(shift - half, shift + half, n_points)


def evolve_exact(
    spec: HamiltonianSpec,
    state: QuantumState,
    config: PropagatorConfig,
    snapshot_times: Sequence[float] = (),
    x_grid=None,
    displacement: str = "analytic",
) -> TrajectoryRecord:
    prop = ExactPropagator(spec, displacement=displacement)
    times = config.times
    psi = prop.states(state, times)
    m1, m2, spins, norm, tail = _fock_observables(psi, prop.n_max)
    if displacement == "analytic":
        shift = prop.shift_X(times)
        m2 = m2 + 2 * shift * m1 + shift**2
        m1 = m1 + shift
    rec = TrajectoryRecord(
        times=times, mean_X=m1, var_x=m2 - m1**2, spin_exp=spins, norm=norm,
        c_sim=spec.dirac.kinetic,
        meta={
            "backend": Backend.EXACT.value, "frame": spec.frame.value, "n_max": prop.n_max,
            "tail_mass": float(tail.max()), "displacement": displacement,
            "rest_energy": spec.dirac.rest_energy, "profile": spec.dirac.profile.to_dict(),
        },
    )
    grid_for = (lambda t: x_grid) if x_grid is not None else (lambda t: default_x_grid(spec.dirac, t))
    rec.snapshots = _snapshot_list(
        snapshot_times, lambda t: prop.state_at(state, t), grid_for, spec.dirac.kinetic
    )
    rec.meta["norm_drift"] = rec.norm_drift
    rec.check_norm(config.tolerance)
    return rec


class TimeOrderedPropagator:
    """Exponential stepping of an arbitrary ``HamiltonianSpec``.

    ``midpoint`` (default) is second order; ``magnus4`` spends two exponentials
    per step for fourth order, which matters when H oscillates at rates close
    to 1/dt (the lab frame).
    """

    def __init__(self, spec: HamiltonianSpec, config: PropagatorConfig):
        self.spec = spec
        self.config = config
        terms = spec.terms()
        self.terms = terms
        self.indptr, self.indices, self.data = _kernels.shared_pattern([t.matrix for t in terms])
        deg = max(len(t.coeff.poly) for t in terms)
        self.polys = np.array([list(t.coeff.poly) + [0.0] * (deg - len(t.coeff.poly)) for t in terms])
        self.omegas = np.array([t.coeff.omega for t in terms], dtype=float)
        self.phases = np.array([t.coeff.phase for t in terms], dtype=float)
        self.norm_bound = envelope_norm_bound(terms, config.t_max)
        requested = config.dt if config.dt is not None else self.auto_dt()
        self.steps_per_sample = config.steps_per_sample(requested)
        self.dt = config.effective_dt(requested)
        self.check_step()

    def dt_limit(self) -> float:
        limit = self.config.max_step_phase / self.norm_bound
        if self.spec.frame is Frame.ION_LAB:
            limit = min(limit, 2 * np.pi / (50 * abs(self.spec.ion.omega0)))
        return limit

    def auto_dt(self) -> float:
        return min(self.dt_limit(), self.config.sample_interval)

    def check_step(self):
        dt = self.dt
        if dt * self.norm_bound > self.config.max_step_phase * (1 + 1e-12):
            raise StepTooLarge(
                f"dt*||H|| = {dt * self.norm_bound:.3g} exceeds {self.config.max_step_phase}; "
                f"use dt <= {self.dt_limit():.3g} s"
            )
        if self.spec.frame is Frame.ION_LAB:
            limit = 2 * np.pi / (50 * abs(self.spec.ion.omega0))
            if dt > limit * (1 + 1e-12):
                raise StepTooLarge(f"lab-frame dt={dt:.3g} s must not exceed 2pi/(50 omega0)={limit:.3g} s")

    def run(self, psi0: np.ndarray) -> np.ndarray:
        cfg = self.config
        states, kmax, err = _kernels.propagate(
            self.indptr, self.indices, self.data, self.polys, self.omegas, self.phases,
            np.ascontiguousarray(psi0, dtype=np.complex128), 0.0, self.dt,
            cfg.n_samples, self.steps_per_sample, cfg.krylov_max_dim, cfg.krylov_tol,
            SCHEMES[cfg.scheme],
        )
        self.krylov_dim = int(kmax)
        self.krylov_error = float(err)
        if err > cfg.krylov_tol:
            raise KrylovNotConverged(
                f"Lanczos error {err:.2e} above {cfg.krylov_tol:.1e} at dimension {kmax}; reduce dt"
            )
        return states


def envelope_norm_bound(terms, t_max: float, n_probe: int = 257) -> float:
    """Bound on max_t ||H(t)|| over [0, t_max]: |sin| <= 1 and the largest |poly|."""
    ts = np.linspace(0.0, t_max, n_probe)
    total = 0.0
    for term in terms:
        rows = np.asarray(abs(term.matrix).sum(axis=1)).ravel()
        env = np.max(np.abs(np.polynomial.polynomial.polyval(ts, term.coeff.poly)))
        if term.coeff.omega == 0:
            env *= abs(math.sin(term.coeff.phase))
        total += env * (rows.max() if rows.size else 0.0)
    return total


def lab_frame_maps(ion, space, eta: Optional[float] = None):
    """Displacement D[eta] and the diagonal of H0 = (w0 - Delta)/2 sigma_z + nu a^dag a.

    ``eta`` defaults to ``ion.eta``.
    """
    eta = ion.eta if eta is None else eta
    p, V = momentum_eigensystem(space)
    # D[eta] = exp(eta (a^dag - a)) = exp(-i sqrt2 eta P): a translation by sqrt2 eta
    D = (V * np.exp(-1j * np.sqrt(2.0) * eta * p)) @ V.conj().T
    n = np.arange(space.n_max)
    h0 = np.concatenate([(ion.omega0 - ion.Delta) / 2 + ion.nu * n, -(ion.omega0 - ion.Delta) / 2 + ion.nu * n])
    return D, h0 * ion.hbar


def evolve_timeordered(
    spec: HamiltonianSpec,
    state: QuantumState,
    config: PropagatorConfig,
    snapshot_times: Sequence[float] = (),
    x_grid=None,
    unwind: bool = True,
    displacement: Optional[float] = None,
) -> TrajectoryRecord:
    """Step any frame.  For ``ION_LAB`` with ``unwind`` the input and recorded
    states live in the effective frame: the lab run starts from D[eta] psi0 and
    each sample is mapped back by exp(i H0 t) D[-eta].  ``displacement``
    overrides eta in that map (0 keeps only the rotation).
    """
    if state.offset != 0:
        state = state.materialize()
    prop = TimeOrderedPropagator(spec, config)
    psi0 = state.amplitudes
    lab = spec.frame is Frame.ION_LAB and unwind
    if lab:
        D, h0 = lab_frame_maps(spec.ion, spec.space, displacement)
        c = psi0.reshape(2, -1)
        psi0 = (D @ c.T).T.reshape(-1)
    if snapshot_times:
        sample_t = config.times
        for t in snapshot_times:
            if not np.any(np.isclose(sample_t, t, rtol=0, atol=1e-12 + 1e-9 * config.sample_interval)):
                raise ValueError(f"snapshot time {t} is not a sample time of the time-ordered run")
    psi = prop.run(psi0)
    times = config.times
    if lab:
        Dinv = D.conj().T
        c = psi.reshape(len(times), 2, -1)
        c = np.einsum("mn,tsn->tsm", Dinv, c).reshape(len(times), -1)
        psi = np.exp(1j * np.outer(times, h0)) * c
    n_max = spec.space.n_max
    m1, m2, spins, norm, tail = _fock_observables(psi, n_max)
    if spec.frame.is_dirac:
        c_sim = spec.dirac.kinetic
    else:
        c_sim = ion_to_dirac(spec.ion).kinetic
    rec = TrajectoryRecord(
        times=times, mean_X=m1, var_x=m2 - m1**2, spin_exp=spins, norm=norm, c_sim=c_sim,
        meta={
            "backend": Backend.TIME_ORDERED.value, "frame": spec.frame.value, "n_max": n_max,
            "tail_mass": float(tail.max()), "dt": prop.dt, "krylov_dim": prop.krylov_dim,
            "krylov_error": prop.krylov_error, "unwound": lab, "scheme": config.scheme,
        },
    )
    if spec.frame.is_dirac:
        rec.meta.update(rest_energy=spec.dirac.rest_energy, profile=spec.dirac.profile.to_dict())
    for t in snapshot_times:
        i = int(np.argmin(np.abs(times - t)))
        st = QuantumState(psi[i], n_max)
        grid = x_grid if x_grid is not None else (
            default_x_grid(spec.dirac, t) if spec.frame.is_dirac else np.linspace(-10, 10, 2048)
        )
        rec.snapshots.append(wavepacket_density(st, grid, t=t, c_sim=c_sim))
    rec.meta["norm_drift"] = rec.norm_drift
    rec.check_norm(config.tolerance)
    return rec


class MomentumOracle:
    """Closed-form evolution of every momentum mode in the chiral frame.

    phi(p, t) = exp(-i cA s(t) p) exp(-i h(p) t) phi(p, 0) with
    h(p) = cA p sigma_z - m c^2 sigma_x.  Position moments use the analytic
    p-derivative of phi, so no finite differencing enters.
    """

    def __init__(self, dirac: DiracParams, spec: InitialStateSpec, grid: MomentumGrid = MomentumGrid()):
        from .states import momentum_representation

        self.dirac = dirac
        self.spec = spec
        self.grid = grid
        momentum_representation(spec, grid)  # resolution and Parseval checks
        self.p = grid.p
        self.g = momentum_amplitude(spec, self.p)
        self.dg = momentum_amplitude_derivative(spec, self.p)

    def amplitudes(self, t, with_derivative: bool = False):
        """phi(p, t), shape (2, N) for scalar t or (2, T, N) for a 1-D array of times."""
        d = self.dirac
        k = d.kinetic
        m = d.rest_energy
        p = self.p
        tt = np.asarray(t, dtype=float)[..., None]
        E = np.sqrt((k * p) ** 2 + m**2)
        safe = np.where(E > 0, E, 1.0)
        sin = np.sin(E * tt)
        cos = np.cos(E * tt)
        sinc = np.where(E > 0, sin / safe, tt)
        chi = self.spec.spinor
        # U = cos - i sinc h, h = [[kp, -m], [-m, -kp]]
        u00 = cos - 1j * sinc * k * p
        u11 = cos + 1j * sinc * k * p
        u01 = 1j * sinc * m
        shift = k * np.asarray(integrated_shift(d.profile, tt))
        phase = np.exp(-1j * shift * p)
        spin_part = np.array([u00 * chi[0] + u01 * chi[1], u01 * chi[0] + u11 * chi[1]])
        phi = spin_part * self.g * phase
        if not with_derivative:
            return phi
        dE = np.where(E > 0, k * k * p / safe, 0.0)
        dcos = -sin * tt * dE
        dsinc = np.where(E > 0, (cos * tt - sinc) * dE / safe, 0.0)
        d00 = dcos - 1j * (dsinc * k * p + sinc * k)
        d11 = dcos + 1j * (dsinc * k * p + sinc * k)
        d01 = 1j * dsinc * m
        dspin = np.array([d00 * chi[0] + d01 * chi[1], d01 * chi[0] + d11 * chi[1]])
        dphi = (dspin * self.g + spin_part * self.dg) * phase - 1j * shift * phi
        return phi, dphi

    def observables(self, times, chunk: int = 64):
        """<X>, <X^2>, spin expectations (T, 3) and norms at the given times."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        dp = self.grid.spacing
        m1 = np.empty(times.size)
        m2 = np.empty(times.size)
        spins = np.empty((times.size, 3))
        norm = np.empty(times.size)
        for a in range(0, times.size, chunk):
            sl = slice(a, a + chunk)
            phi, dphi = self.amplitudes(times[sl], with_derivative=True)
            norm[sl] = np.sqrt(np.sum(np.abs(phi) ** 2, axis=(0, 2)) * dp)
            m1[sl] = np.sum(phi.conj() * 1j * dphi, axis=(0, 2)).real * dp
            m2[sl] = np.sum(np.abs(dphi) ** 2, axis=(0, 2)) * dp
            rho = np.einsum("stp,rtp->tsr", phi, phi.conj()) * dp
            for i, ax in enumerate("xyz"):
                spins[sl, i] = np.einsum("tsr,rs->t", rho, SIGMA[ax]).real
        return m1, m2, spins, norm

    def density(self, t: float, X) -> np.ndarray:
        return density_from_momentum(self.amplitudes(t), self.p, self.grid.spacing, X)


def evolve_momentum_oracle(
    dirac: DiracParams,
    spec: InitialStateSpec,
    config: PropagatorConfig,
    grid: MomentumGrid = MomentumGrid(),
    snapshot_times: Sequence[float] = (),
    x_grid=None,
) -> TrajectoryRecord:
    oracle = MomentumOracle(dirac, spec, grid)
    times = config.times
    m1, m2, spins, norm = oracle.observables(times)
    rec = TrajectoryRecord(
        times=times, mean_X=m1, var_x=m2 - m1**2, spin_exp=spins, norm=norm,
        c_sim=dirac.kinetic,
        meta={"backend": Backend.MOMENTUM_ORACLE.value, "frame": Frame.DIRAC_CHIRAL.value,
              "grid_points": grid.n_points, "p_max": grid.p_max,
              "rest_energy": dirac.rest_energy, "profile": dirac.profile.to_dict()},
    )
    for t in snapshot_times:
        X = x_grid if x_grid is not None else default_x_grid(dirac, t)
        rec.snapshots.append(DensitySnapshot.from_X(t, X, oracle.density(t, X), dirac.kinetic))
    rec.meta["norm_drift"] = rec.norm_drift
    rec.check_norm(config.tolerance)
    return rec


def acceleration_series(record: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray]:
    """Second time derivative of <x>/c by uniform central differences.

    The two endpoints use the second-order one-sided stencil (2, -5, 4, -1).
    """
    t = np.asarray(record.times)
    f = np.asarray(record.mean_x_over_c)
    if t.size < 5:
        raise ValueError("need at least 5 samples")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValueError("acceleration_series needs uniform sampling")
    acc = np.empty_like(f)
    acc[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    acc[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    acc[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return t, acc


def velocity_series(record: TrajectoryRecord) -> tuple[np.ndarray, np.ndarray]:
    """d(<x>/c)/dt, second-order accurate."""
    return record.times, np.gradient(record.mean_x_over_c, record.times, edge_order=2)


def heisenberg_velocity(record: TrajectoryRecord, dirac: DiracParams) -> np.ndarray:
    """v_s(t) + <sigma_z>(t), the velocity d(<x>/c)/dt predicted in the chiral frame."""
    return velocity_profile(dirac.profile, record.times) + record.spin_exp[:, 2]
