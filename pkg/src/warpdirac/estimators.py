"""scikit-learn style wrappers.

``DiracTrajectorySimulator`` maps initial spinors (n_samples, 2) to sampled
<x>/c trajectories (n_samples, n_times); ``TrajectoryFeatures`` maps
trajectories to (drift slope, Zitterbewegung frequency, amplitude).  Both
chain in a ``Pipeline``.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import NoPeak, zitterbewegung_spectrum
from .evolution import ExactPropagator, PropagatorConfig, evolve_exact, evolve_momentum_oracle
from .hamiltonians import Frame, HamiltonianSpec
from .operators import FockSpace
from .spacetime import AlcubierreProfile, DiracParams
from .states import InitialStateSpec, MomentumGrid, build_initial_state


def check_spinors(X, normalize: bool = False, atol: float = 1e-12) -> np.ndarray:
    """Validate a batch of 2-component spinors; returns a complex (n, 2) array.

    ``sklearn.utils.check_array`` rejects complex input, hence this helper.
    """
    arr = np.asarray(X)
    if arr.dtype == object:
        raise TypeError("spinors must be numeric")
    arr = arr.astype(complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected shape (n_samples, 2), got {np.shape(X)}")
    if arr.shape[0] == 0:
        raise ValueError("need at least one spinor")
    if not np.all(np.isfinite(arr)):
        raise ValueError("spinors contain NaN or inf")
    norms = np.linalg.norm(arr, axis=1)
    if normalize:
        if np.any(norms == 0):
            raise ValueError("zero spinor cannot be normalised")
        return arr / norms[:, None]
    bad = np.abs(norms**2 - 1) > atol
    if np.any(bad):
        raise ValueError(f"spinors {np.nonzero(bad)[0].tolist()} are not normalised")
    return arr


def check_trajectories(X, n_times=None) -> np.ndarray:
    arr = check_array(X, dtype=np.float64, ensure_min_features=16)
    if n_times is not None and arr.shape[1] != n_times:
        raise ValueError(f"expected {n_times} samples per trajectory, got {arr.shape[1]}")
    return arr


def _as_profile(profile) -> AlcubierreProfile:
    if profile is None:
        return AlcubierreProfile()
    if isinstance(profile, AlcubierreProfile):
        return profile
    if isinstance(profile, numbers.Real):
        return AlcubierreProfile.constant(float(profile))
    return AlcubierreProfile.polynomial(profile)


class DiracTrajectorySimulator(TransformerMixin, BaseEstimator):
    """Evolve Gaussian packets with the given spinors and return <x>/c samples.

    Parameters
    ----------
    c_sim : float
        Velocity scale c A in oscillator lengths per second.
    mass_m : float
        Mass in simulation units (rest energy mass_m * c_sim**2).
    profile : float, sequence or AlcubierreProfile
        Constant warp velocity, trajectory polynomial coefficients, or a profile.
    t_max, sample_interval : float
        Run length and sampling step in seconds.
    n_max : int
        Fock truncation (exact backend).
    backend : {"exact", "oracle"}
    frame : {"dirac_chiral", "dirac_hadamard"}
    """

    def __init__(
        self,
        c_sim=1.0,
        mass_m=0.0,
        profile=0.0,
        t_max=1.0,
        sample_interval=0.01,
        n_max=128,
        backend="exact",
        frame="dirac_chiral",
        center_X=0.0,
        width=1.0,
    ):
        self.c_sim = c_sim
        self.mass_m = mass_m
        self.profile = profile
        self.t_max = t_max
        self.sample_interval = sample_interval
        self.n_max = n_max
        self.backend = backend
        self.frame = frame
        self.center_X = center_X
        self.width = width

    def fit(self, X=None, y=None):
        if self.backend not in ("exact", "oracle"):
            raise ValueError(f"backend must be 'exact' or 'oracle', got {self.backend!r}")
        frame = Frame(self.frame)
        if not frame.is_dirac:
            raise ValueError("the simulator handles Dirac frames only")
        if self.backend == "oracle" and frame is not Frame.DIRAC_CHIRAL:
            raise ValueError("the momentum oracle works in the chiral frame")
        if X is not None:
            check_spinors(X)
        self.dirac_ = DiracParams(self.c_sim, self.mass_m, profile=_as_profile(self.profile))
        self.config_ = PropagatorConfig(t_max=self.t_max, sample_interval=self.sample_interval)
        self.times_ = self.config_.times
        self.space_ = FockSpace(int(self.n_max))
        self.spec_ = HamiltonianSpec(frame, self.space_, dirac=self.dirac_)
        if self.backend == "exact":
            self.propagator_ = ExactPropagator(self.spec_)
        self.n_features_in_ = 2
        return self

    def simulate(self, X):
        """Full ``TrajectoryRecord`` for every spinor in X."""
        check_is_fitted(self, "dirac_")
        spinors = check_spinors(X)
        out = []
        for s in spinors:
            init = InitialStateSpec(self.center_X, self.width, tuple(s))
            if self.backend == "oracle":
                out.append(evolve_momentum_oracle(self.dirac_, init, self.config_, MomentumGrid()))
            else:
                out.append(evolve_exact(self.spec_, build_initial_state(init, self.space_), self.config_))
        return out

    def transform(self, X):
        return np.vstack([r.mean_x_over_c for r in self.simulate(X)])


class TrajectoryFeatures(TransformerMixin, BaseEstimator):
    """Per-trajectory [drift slope, ZB angular frequency, ZB amplitude].

    Frequency and amplitude are NaN when no spectral line is found.
    """

    def __init__(self, sample_interval=0.01, detrend_degree=1, min_bin=2, peak_ratio=3.0, abs_floor=1e-9):
        self.sample_interval = sample_interval
        self.detrend_degree = detrend_degree
        self.min_bin = min_bin
        self.peak_ratio = peak_ratio
        self.abs_floor = abs_floor

    def fit(self, X, y=None):
        X = check_trajectories(X)
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_trajectories(X, self.n_features_in_)
        t = np.arange(X.shape[1]) * self.sample_interval
        rows = []
        for y in X:
            slope = np.polyfit(t, y, 1)[0]
            try:
                sp = zitterbewegung_spectrum(
                    times=t, series=y, detrend_degree=self.detrend_degree, min_bin=self.min_bin,
                    peak_ratio=self.peak_ratio, abs_floor=self.abs_floor,
                )
                rows.append((slope, sp.frequency, sp.amplitude))
            except NoPeak:
                rows.append((slope, np.nan, np.nan))
        return np.array(rows)
