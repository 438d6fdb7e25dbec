import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpdirac.spacetime import (
    AlcubierreProfile,
    DiracParams,
    IonParams,
    dirac_to_ion,
    integrated_shift,
    ion_to_dirac,
    lightcone_angle,
    lightcone_slopes,
    physical_light_speed,
    resonant_sidebands,
    velocity_profile,
)

TWO_PI = 2 * math.pi
TRAJ = (0.0, 0.56, 1346.0, -642377.0)


def test_timedep_velocity_endpoints():
    # v_s = 0.56 + 2*1346 t - 3*642377 t^2, evaluated by hand at 0 and 1.5 ms
    prof = AlcubierreProfile.polynomial(TRAJ)
    assert velocity_profile(prof, 0.0) == pytest.approx(0.56, abs=1e-12)
    assert velocity_profile(prof, 1.5e-3) == pytest.approx(0.26195525, abs=1e-12)


def test_constant_profile_shift():
    prof = AlcubierreProfile.constant(2.0)
    t = np.linspace(0, 1e-3, 7)
    np.testing.assert_allclose(integrated_shift(prof, t), 2.0 * t)
    np.testing.assert_allclose(velocity_profile(prof, t), 2.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=5), st.floats(0.0, 2e-3))
def test_shift_is_antiderivative(coeffs, t):
    prof = AlcubierreProfile.polynomial(coeffs)
    assert integrated_shift(prof, 0.0) == 0.0
    h = 1e-7
    fd = (integrated_shift(prof, t + h) - integrated_shift(prof, t - h)) / (2 * h)
    assert fd == pytest.approx(velocity_profile(prof, t), rel=1e-5, abs=1e-6)


@given(st.floats(-5, 5))
def test_lightcone_width_is_two(vs):
    lo, hi = lightcone_slopes(vs)
    assert hi - lo == pytest.approx(2.0)
    assert 0 < lightcone_angle(vs) <= math.pi / 2 + 1e-12


def test_lightcone_flat_is_right_angle():
    assert lightcone_angle(0.0) == pytest.approx(math.pi / 2)
    assert lightcone_slopes(2.0) == (1.0, 3.0)


def test_profile_roundtrip():
    for prof in (AlcubierreProfile.constant(1.5), AlcubierreProfile.polynomial(TRAJ)):
        assert AlcubierreProfile.from_dict(prof.to_dict()) == prof


def test_polynomial_needs_coefficients():
    with pytest.raises(ValueError):
        AlcubierreProfile.polynomial(())


def test_dirac_params_validation():
    with pytest.raises(ValueError):
        DiracParams(c_sim=0.0)
    with pytest.raises(ValueError):
        DiracParams(c_sim=1.0, A=-1)
    d = DiracParams(c_sim=3.0, mass_m=0.5)
    assert d.rest_energy == pytest.approx(4.5)
    assert d.zitterbewegung_frequency == pytest.approx(9.0)


def test_sidebands():
    wb, wr = resonant_sidebands(10.0, 1.0, 0.5)
    assert wb - 1.0 == pytest.approx(9.5)
    assert wr + 1.0 == pytest.approx(9.5)
    with pytest.raises(ValueError):
        IonParams(nu=1.0, omega0=100.0, Omega0=0.01, omega_b=50.0)


def _figure_ion(**kw):
    base = dict(nu=TWO_PI * 5.9e6, omega0=TWO_PI * 1.789e9, Omega0=TWO_PI * 1.46e3,
                Omega_p=TWO_PI * 50e3, eta=0.0146)
    base.update(kw)
    return IonParams(**base)


def test_figure_point_gives_vs_two():
    ion = _figure_ion()
    assert ion.warp_velocity() == pytest.approx(2.0)
    d = ion_to_dirac(ion)
    assert d.kinetic == pytest.approx(TWO_PI * 1.46e3 / math.sqrt(2))
    assert d.profile.constant_vs == pytest.approx(2.0)


def test_mass_from_detuning():
    d = ion_to_dirac(_figure_ion(Delta=-TWO_PI * 6.1e3))
    # m c^2 = -hbar Delta / 2, so 2 m c^2 = 2 pi * 6.1 kHz
    assert d.zitterbewegung_frequency == pytest.approx(TWO_PI * 6.1e3)


def test_physical_light_speed_formula():
    ion = _figure_ion()
    d = ion_to_dirac(ion)
    want = math.sqrt(1 / (2 * ion.nu)) * ion.Omega0
    assert physical_light_speed(d, ion.nu) == pytest.approx(want)


def test_hierarchy_warning():
    with pytest.warns(UserWarning, match="exceeds"):
        IonParams(nu=1.0, omega0=100.0, Omega0=0.5)


def test_no_warning_inside_hierarchy():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _figure_ion()


def test_timedep_ion_drive():
    prof = AlcubierreProfile.polynomial(TRAJ)
    ion = _figure_ion(Omega_p=0.0, profile=prof)
    assert ion.warp_velocity(0.0) == pytest.approx(0.56)
    assert ion.Omega_p == pytest.approx(0.56 * ion.Omega0 / (4 * 0.0146))
    with pytest.raises(ValueError):
        _figure_ion(eta=0.0, profile=prof)


@settings(deadline=None)
@given(st.floats(100.0, 1e5), st.floats(-3, 3), st.floats(-1e-3, 1e-3), st.floats(1e3, 1e6))
def test_ion_dirac_roundtrip(c_sim, vs, mass_m, Omega_p):
    d = DiracParams(c_sim, mass_m, profile=AlcubierreProfile.constant(vs))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ion = dirac_to_ion(d, nu=TWO_PI * 5.9e6, Omega_p=Omega_p)
        back = ion_to_dirac(ion)
    assert back.c_sim == pytest.approx(c_sim, rel=1e-12)
    assert back.mass_m == pytest.approx(mass_m, rel=1e-9, abs=1e-15)
    assert back.profile.constant_vs == pytest.approx(vs, rel=1e-12, abs=1e-12)
