"""Warp profile, lightcone geometry and the Dirac <-> trapped-ion parameter map.

Simulation units: hbar = m0 = 1 and A = 1 unless stated otherwise.  Positions
of the motional mode are measured in oscillator lengths sqrt(hbar / m0 nu), so
the simulated light speed ``c_sim`` is expressed in oscillator lengths per
second and ``x / c`` is a time in seconds.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P


class ProfileKind(str, enum.Enum):
    CONSTANT = "constant"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class AlcubierreProfile:
    """Warp velocity v_s(t), either constant or the derivative of a trajectory.

    For ``POLYNOMIAL`` profiles ``trajectory_coeffs`` are the coefficients of
    x_s(t) in ascending powers of t (t in seconds, x_s in units of c * s).
    """

    kind: ProfileKind = ProfileKind.CONSTANT
    constant_vs: float = 0.0
    trajectory_coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        object.__setattr__(
            self, "trajectory_coeffs", tuple(float(c) for c in self.trajectory_coeffs)
        )
        if self.kind is ProfileKind.POLYNOMIAL and not self.trajectory_coeffs:
            raise ValueError("polynomial profile needs trajectory coefficients")

    @classmethod
    def constant(cls, vs: float) -> "AlcubierreProfile":
        return cls(ProfileKind.CONSTANT, constant_vs=float(vs))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "AlcubierreProfile":
        return cls(ProfileKind.POLYNOMIAL, trajectory_coeffs=tuple(coeffs))

    @property
    def is_constant(self) -> bool:
        return self.kind is ProfileKind.CONSTANT

    def velocity_coeffs(self) -> np.ndarray:
        """Ascending polynomial coefficients of v_s(t)."""
        if self.is_constant:
            return np.array([self.constant_vs])
        return P.polyder(np.asarray(self.trajectory_coeffs))

    def shift_coeffs(self) -> np.ndarray:
        """Ascending coefficients of s(t) = x_s(t) - x_s(0)."""
        if self.is_constant:
            return np.array([0.0, self.constant_vs])
        c = np.array(self.trajectory_coeffs, dtype=float)
        c[0] = 0.0
        return c

    def to_dict(self) -> dict:
        if self.is_constant:
            return {"kind": "constant", "vs": self.constant_vs}
        return {"kind": "polynomial", "coeffs": list(self.trajectory_coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "AlcubierreProfile":
        kind = ProfileKind(d.get("kind", "constant"))
        if kind is ProfileKind.CONSTANT:
            return cls.constant(float(d.get("vs", 0.0)))
        return cls.polynomial(d["coeffs"])


def velocity_profile(profile: AlcubierreProfile, t):
    """Warp velocity v_s(t) (dimensionless); ``t`` may be an array."""
    if profile.is_constant:
        return np.full_like(np.asarray(t, dtype=float), profile.constant_vs)[()]
    return P.polyval(t, profile.velocity_coeffs())


def integrated_shift(profile: AlcubierreProfile, t):
    """Exact antiderivative s(t) = int_0^t v_s, in units of c * seconds."""
    if profile.is_constant:
        return profile.constant_vs * np.asarray(t, dtype=float)[()]
    return P.polyval(t, profile.shift_coeffs())


def lightcone_slopes(vs: float) -> tuple[float, float]:
    """Edge slopes (v_s - 1, v_s + 1) of (1/c) dx/dt."""
    return (vs - 1.0, vs + 1.0)


def lightcone_angle(vs):
    """Opening angle arctan(v_s + 1) - arctan(v_s - 1) of the tilted cone."""
    return np.arctan(np.asarray(vs) + 1.0) - np.arctan(np.asarray(vs) - 1.0)


@dataclass(frozen=True)
class DiracParams:
    """Parameters of the simulated Dirac particle.

    ``c_sim`` is in oscillator lengths per second; the rest energy is
    ``mass_m * c_sim**2`` (rad/s with hbar = 1).
    """

    c_sim: float
    mass_m: float = 0.0
    A: float = 1.0
    hbar: float = 1.0
    profile: AlcubierreProfile = field(default_factory=AlcubierreProfile)

    def __post_init__(self):
        if not self.c_sim > 0:
            raise ValueError(f"c_sim must be positive, got {self.c_sim}")
        if not self.A > 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.hbar != 1.0:
            raise ValueError("simulation units require hbar = 1")

    @property
    def kinetic(self) -> float:
        """The velocity scale cA in oscillator lengths per second."""
        return self.c_sim * self.A

    @property
    def rest_energy(self) -> float:
        """m c^2 / hbar in rad/s."""
        return self.mass_m * self.c_sim**2 / self.hbar

    @property
    def zitterbewegung_frequency(self) -> float:
        """2|m|c^2/hbar, the zero-momentum Zitterbewegung angular frequency."""
        return 2.0 * abs(self.rest_energy)

    def with_profile(self, profile: AlcubierreProfile) -> "DiracParams":
        return DiracParams(self.c_sim, self.mass_m, self.A, self.hbar, profile)

    def with_mass(self, mass_m: float) -> "DiracParams":
        return DiracParams(self.c_sim, mass_m, self.A, self.hbar, self.profile)


def resonant_sidebands(omega0: float, nu: float, Delta: float) -> tuple[float, float]:
    """Blue and red drive frequencies satisfying w_b - nu = w_r + nu = w0 - Delta."""
    return omega0 - Delta + nu, omega0 - Delta - nu


@dataclass(frozen=True)
class IonParams:
    """Single trapped ion driven by red/blue sidebands and a parametric modulation.

    The sideband frequencies are derived from ``omega0``, ``nu`` and ``Delta``.
    If ``profile`` is set, the modulation amplitude follows
    Omega_p(t) = v_s(t) Omega0 / (4 eta) and ``Omega_p`` is its value at t = 0.
    """

    nu: float
    omega0: float
    Omega0: float
    Omega_p: float = 0.0
    Delta: float = 0.0
    eta: float = 0.0
    m0: float = 1.0
    hbar: float = 1.0
    profile: Optional[AlcubierreProfile] = None
    hierarchy_threshold: float = 0.05
    omega_b: Optional[float] = None
    omega_r: Optional[float] = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("trap frequency nu must be positive")
        wb, wr = resonant_sidebands(self.omega0, self.nu, self.Delta)
        for name, given, want in (("omega_b", self.omega_b, wb), ("omega_r", self.omega_r, wr)):
            if given is not None and not math.isclose(given, want, rel_tol=1e-12, abs_tol=1e-9):
                raise ValueError(
                    f"{name}={given} violates w_b - nu = w_r + nu = w0 - Delta (expected {want})"
                )
        object.__setattr__(self, "omega_b", wb)
        object.__setattr__(self, "omega_r", wr)
        if self.profile is not None:
            if self.eta == 0:
                raise ValueError("a warp profile needs eta != 0")
            object.__setattr__(self, "Omega_p", float(self.omega_p_at(0.0)))
        slow = max(abs(self.Delta), abs(self.Omega_p), abs(self.Omega0))
        object.__setattr__(self, "_ratios", (slow / self.nu, self.nu / abs(self.omega0)))
        eps = 1e-9
        if self.slow_ratio > self.hierarchy_threshold * (1 + eps):
            warnings.warn(
                f"max(|Delta|,|Omega_p|,|Omega0|)/nu = {self.slow_ratio:.3g} exceeds "
                f"{self.hierarchy_threshold}; the effective Hamiltonian may be inaccurate",
                stacklevel=2,
            )
        if self.fast_ratio > self.hierarchy_threshold * (1 + eps):
            warnings.warn(
                f"nu/omega0 = {self.fast_ratio:.3g} exceeds {self.hierarchy_threshold}",
                stacklevel=2,
            )
        if abs(self.eta) > 0.1:
            warnings.warn(f"displacement eta = {self.eta} is not small", stacklevel=2)

    @property
    def slow_ratio(self) -> float:
        return self._ratios[0]

    @property
    def fast_ratio(self) -> float:
        return self._ratios[1]

    def omega_p_at(self, t):
        if self.profile is None:
            return self.Omega_p + 0.0 * np.asarray(t, dtype=float)[()]
        return velocity_profile(self.profile, t) * self.Omega0 / (4.0 * self.eta)

    def warp_velocity(self, t=0.0):
        return 4.0 * self.eta * self.omega_p_at(t) / self.Omega0


def physical_light_speed(dirac: DiracParams, nu: float, m0: float = 1.0) -> float:
    """Light speed in trap length units: c_sim * sqrt(hbar / m0 nu).

    Equals sqrt(hbar / 2 m0 nu) * Omega0 / A for parameters built by ``ion_to_dirac``.
    """
    return dirac.c_sim * math.sqrt(dirac.hbar / (m0 * nu))


def ion_to_dirac(ion: IonParams, A: float = 1.0) -> DiracParams:
    """Map trapped-ion controls onto the simulated Dirac particle."""
    if ion.Omega0 == 0:
        raise ValueError("Omega0 = 0 leaves the correspondence undefined")
    c_sim = ion.Omega0 / (math.sqrt(2.0) * A)
    mass_m = -ion.hbar * ion.Delta / (2.0 * c_sim**2)
    if ion.profile is not None:
        profile = ion.profile
    else:
        profile = AlcubierreProfile.constant(4.0 * ion.eta * ion.Omega_p / ion.Omega0)
    return DiracParams(c_sim=c_sim, mass_m=mass_m, A=A, hbar=ion.hbar, profile=profile)


def dirac_to_ion(
    dirac: DiracParams,
    nu: float,
    Omega0: Optional[float] = None,
    Omega_p: Optional[float] = None,
    *,
    eta: Optional[float] = None,
    omega0: Optional[float] = None,
    **kwargs,
) -> IonParams:
    """Inverse of :func:`ion_to_dirac`.

    For a constant profile the displacement is eta = v_s Omega0 / (4 Omega_p).
    Time-dependent profiles (and v_s = 0 with no drive) take ``eta`` directly.
    ``omega0`` defaults to 20 nu.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    implied = math.sqrt(2.0) * dirac.c_sim * dirac.A
    if Omega0 is None:
        Omega0 = implied
    elif not math.isclose(Omega0, implied, rel_tol=1e-12):
        raise ValueError(f"Omega0={Omega0} inconsistent with c_sim*A (needs {implied})")
    if Omega0 <= 0:
        raise ValueError("Omega0 must be positive")
    Delta = -2.0 * dirac.mass_m * dirac.c_sim**2 / dirac.hbar
    if omega0 is None:
        omega0 = 20.0 * nu
    profile = None
    if dirac.profile.is_constant:
        vs = dirac.profile.constant_vs
        if Omega_p is None:
            Omega_p = 0.0
        if vs != 0 and Omega_p == 0:
            raise ValueError("nonzero v_s cannot be realised with Omega_p = 0")
        if vs != 0:
            eta = vs * Omega0 / (4.0 * Omega_p)
        elif eta is None:
            eta = 0.0
            Omega_p = 0.0
        elif Omega_p != 0:
            raise ValueError("v_s = 0 requires Omega_p = 0 when eta is given")
    else:
        if eta is None:
            raise ValueError("time-dependent profiles need an explicit eta")
        profile = dirac.profile
        Omega_p = 0.0
    if abs(eta) > 0.1:
        warnings.warn(f"eta = {eta:.3g} is not small", stacklevel=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ion = IonParams(
            nu=nu, omega0=omega0, Omega0=Omega0, Omega_p=Omega_p, Delta=Delta,
            eta=eta, hbar=dirac.hbar, profile=profile, **kwargs,
        )
    return ion
