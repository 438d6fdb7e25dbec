"""Densities, lightcone fits, variances and Zitterbewegung spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import QuantumState, hermite_functions


class GridCoverageError(ValueError):
    """The position grid cuts off a non-negligible part of the packet."""


class NoPeak(ValueError):
    """No spectral line stands out of the floor."""


BOUNDARY_DENSITY_MAX = 1e-6


@dataclass
class DensitySnapshot:
    """Spin-traced position density at time ``t``.

    ``X``/``density_X`` use oscillator lengths; ``x_grid``/``density`` use the
    x/c axis (seconds), related by X = c_sim * x/c.
    """

    t: float
    X: np.ndarray
    density_X: np.ndarray
    c_sim: float = 1.0

    @classmethod
    def from_X(cls, t, X, density_X, c_sim=1.0, check=True) -> "DensitySnapshot":
        X = np.asarray(X, dtype=float)
        density_X = np.asarray(density_X, dtype=float)
        if check:
            edge = max(density_X[0], density_X[-1])
            if edge > BOUNDARY_DENSITY_MAX:
                raise GridCoverageError(
                    f"density {edge:.2e} at the grid boundary [{X[0]:.3g}, {X[-1]:.3g}] exceeds {BOUNDARY_DENSITY_MAX:g}"
                )
        return cls(float(t), X, density_X, float(c_sim))

    @property
    def x_grid(self) -> np.ndarray:
        return self.X / self.c_sim

    @property
    def density(self) -> np.ndarray:
        return self.density_X * self.c_sim

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.x_grid))

    def peaks(self, rel_height: float = 0.05) -> np.ndarray:
        """Local maxima above ``rel_height`` of the global maximum, in X units.

        Each is refined by a parabola through the log density of three points.
        """
        d = self.density_X
        top = d.max()
        inner = (d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:]) & (d[1:-1] > rel_height * top)
        idx = np.nonzero(inner)[0] + 1
        h = self.X[1] - self.X[0]
        out = []
        for i in idx:
            l0, l1, l2 = np.log(np.maximum(d[i - 1 : i + 2], 1e-300))
            den = l0 - 2 * l1 + l2
            shift = 0.5 * (l0 - l2) / den if den < 0 else 0.0
            out.append(self.X[i] + shift * h)
        return np.array(out)


def wavepacket_density(state: QuantumState, X, t: float = 0.0, c_sim: float = 1.0) -> DensitySnapshot:
    """sum_s |sum_n c_{s n} <X - offset | n>|^2 on the grid ``X`` (oscillator lengths)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 1 or X.size < 3 or np.any(np.diff(X) <= 0):
        raise ValueError("X grid must be strictly increasing with at least 3 points")
    m1, m2 = state.position_moments()
    sd = np.sqrt(max(m2 - m1 * m1, 0.0))
    if X[-1] - X[0] < 6 * sd:
        raise GridCoverageError(f"grid width {X[-1] - X[0]:.3g} is below 6 standard deviations ({6 * sd:.3g})")
    basis = hermite_functions(state.n_max, X - state.offset)
    amp = state.spinor_components() @ basis
    return DensitySnapshot.from_X(t, X, np.sum(np.abs(amp) ** 2, axis=0), c_sim)


def density_from_momentum(phi: np.ndarray, p: np.ndarray, dp: float, X, chunk: int = 256) -> np.ndarray:
    """Position density of the spinor amplitudes phi (2, N) by a direct Fourier sum.

    psi_s(X) = (2 pi)^-1/2 sum_p phi_s(p) e^{i p X} dp.
    """
    X = np.asarray(X, dtype=float)
    out = np.empty(X.size)
    scale = dp / np.sqrt(2 * np.pi)
    for start in range(0, X.size, chunk):
        xs = X[start : start + chunk]
        kernel = np.exp(1j * np.outer(p, xs))
        amp = (phi @ kernel) * scale
        out[start : start + chunk] = np.sum(np.abs(amp) ** 2, axis=0)
    return out


@dataclass(frozen=True)
class LightconeFit:
    slope_up: float
    slope_down: float
    residual_rms: float
    intercept_up: float = 0.0
    intercept_down: float = 0.0

    @property
    def width(self) -> float:
        return self.slope_up - self.slope_down


def _linear_fit(t, y):
    A = np.vstack([t, np.ones_like(t)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    return slope, icpt, y - (slope * t + icpt)


def fit_lightcone(record_up, record_down) -> LightconeFit:
    """Least-squares slopes of <x>/c against t for the two spin branches.

    ``residual_rms`` is the pooled RMS residual divided by the run duration,
    i.e. measured in units of c * t_max.
    """
    for rec in (record_up, record_down):
        rest = rec.meta.get("rest_energy", 0.0)
        if rest != 0.0:
            raise ValueError("lightcone fits need massless runs")
    if record_up.meta.get("profile") != record_down.meta.get("profile"):
        raise ValueError("lightcone branches use different warp profiles")
    su, iu, ru = _linear_fit(np.asarray(record_up.times), np.asarray(record_up.mean_x_over_c))
    sd, idn, rd = _linear_fit(np.asarray(record_down.times), np.asarray(record_down.mean_x_over_c))
    duration = max(record_up.times[-1] - record_up.times[0], record_down.times[-1] - record_down.times[0])
    rms = np.sqrt(np.mean(np.concatenate([ru, rd]) ** 2)) / duration
    return LightconeFit(float(su), float(sd), float(rms), float(iu), float(idn))


@dataclass(frozen=True)
class Spectrum:
    frequency: float  # rad/s
    amplitude: float  # same unit as the analysed series
    omega: np.ndarray
    magnitude: np.ndarray
    peak_to_median: float


def zitterbewegung_spectrum(
    record=None,
    *,
    times=None,
    series=None,
    detrend_degree: int = 1,
    min_bin: int = 2,
    peak_ratio: float = 3.0,
    abs_floor: float = 1e-9,
) -> Spectrum:
    """Dominant oscillation of <x>/c after polynomial detrending.

    A Hann-windowed real FFT is searched from bin ``min_bin`` upward, and the
    strongest bin is refined with a parabola through the log magnitudes.
    ``NoPeak`` is raised when that bin is below ``peak_ratio`` times the median
    magnitude, or when the recovered amplitude is below ``abs_floor`` times the
    run duration (a detrended linear drift leaves only rounding noise, whose
    peak-to-median ratio alone is not a reliable test).
    """
    if record is not None:
        times = record.times
        series = record.mean_x_over_c
    t = np.asarray(times, dtype=float)
    y = np.asarray(series, dtype=float)
    if t.size < 16:
        raise ValueError("need at least 16 samples")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValueError("spectrum needs uniform sampling")
    tn = (t - t[0]) / (t[-1] - t[0])
    coeffs = np.polynomial.polynomial.polyfit(tn, y, detrend_degree)
    resid = y - np.polynomial.polynomial.polyval(tn, coeffs)
    win = np.hanning(t.size)
    F = np.fft.rfft(resid * win)
    mag = np.abs(F)
    omega = 2 * np.pi * np.fft.rfftfreq(t.size, h)
    search = mag[min_bin:]
    if search.size < 3:
        raise ValueError("record too short for the requested search band")
    k = int(np.argmax(search[:-1])) + min_bin
    median = float(np.median(search))
    ratio = mag[k] / median if median > 0 else np.inf
    if k > min_bin:
        l0, l1, l2 = np.log(np.maximum(mag[k - 1 : k + 2], 1e-300))
        den = l0 - 2 * l1 + l2
        delta = 0.5 * (l0 - l2) / den if den < 0 else 0.0
    else:
        delta = 0.0
    freq = (k + delta) * (omega[1] - omega[0])
    amplitude = 2 * mag[k] / win.sum()
    duration = t[-1] - t[0]
    if ratio < peak_ratio or amplitude < abs_floor * duration:
        raise NoPeak(f"no spectral line: peak/median={ratio:.2f}, amplitude={amplitude:.3e}")
    return Spectrum(float(freq), float(amplitude), omega, mag, float(ratio))


def dispersion_zb_frequency(dirac, spec, grid=None) -> float:
    """Line centre 2 E(p) / hbar averaged over the packet's momentum density.

    E(p) = sqrt((cA p)^2 + (m c^2)^2); the warp term shifts both branches equally
    and drops out of the interference frequency.
    """
    from .states import MomentumGrid, momentum_amplitude

    grid = grid or MomentumGrid()
    p = grid.p
    w = np.abs(momentum_amplitude(spec, p)) ** 2 * grid.spacing
    E = np.sqrt((dirac.kinetic * p) ** 2 + dirac.rest_energy**2)
    return float(np.sum(w * 2 * E) / np.sum(w) / dirac.hbar)


def variance_series(record):
    """(t, Delta X, Delta x / c) per sample."""
    var = np.asarray(record.var_x, dtype=float)
    if np.any(var < -1e-12):
        raise ValueError("negative variance in record")
    dX = np.sqrt(np.maximum(var, 0.0))
    return np.asarray(record.times), dX, dX / record.c_sim


def is_nondecreasing(y, atol: float = 1e-12) -> bool:
    return bool(np.all(np.diff(np.asarray(y)) >= -atol))
