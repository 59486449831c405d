import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from raman_echo.core import (
    AdiabaticityError,
    AdiabaticityWarning,
    CavityGeometry,
    ParameterError,
    SystemParams,
    derive_gamma_r,
    derived_rates,
    matching_rabi_ratio,
    optical_absorption_prefactor,
    raman_absorption_coefficient,
    transmission_coefficient,
    with_matched_rabi,
)

positive = st.floats(1e-3, 1e3)


def test_gamma_r_formula():
    p = SystemParams(delta_in=0.5, big_delta0=100.0, omega1=10.0, n_atoms=1e6, g_bar=0.005)
    assert derive_gamma_r(p) == pytest.approx(2 * 1e6 * (10 * 0.005 / 100) ** 2 / 0.5, rel=1e-14)
    assert p.gamma_r == derive_gamma_r(p)


@given(gamma_r=positive, delta_in=positive, ratio=st.floats(1e-3, 0.1))
def test_from_gamma_r_round_trip(gamma_r, delta_in, ratio):
    p = SystemParams.from_gamma_r(gamma_r, delta_in, rabi_ratio=ratio)
    assert p.gamma_r == pytest.approx(gamma_r, rel=1e-12)
    assert p.rabi_ratio == pytest.approx(ratio, rel=1e-12)


def test_matched_point():
    p = SystemParams.matched()
    assert p.gamma_r == pytest.approx(1.0, rel=1e-14)
    assert p.delta_in == 0.5


@pytest.mark.parametrize(
    "kw",
    [
        {"delta_in": 0.0},
        {"delta_in": -1.0},
        {"delta_in": 0.5, "t2_inv": -0.1},
        {"delta_in": 0.5, "gamma1": 0.0},
        {"delta_in": 0.5, "big_delta0": 0.0},
        {"delta_in": 0.5, "n_atoms": 0.5},
        {"delta_in": 0.5, "g_bar": -1.0},
    ],
)
def test_invalid_parameters_rejected(kw):
    with pytest.raises(ParameterError):
        SystemParams(**kw)


def test_adiabaticity_cap_and_warning():
    with pytest.raises(AdiabaticityError):
        SystemParams(delta_in=0.5, omega1=30.0, big_delta0=100.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", AdiabaticityWarning)
        with pytest.raises(AdiabaticityWarning):
            SystemParams(delta_in=0.5, omega1=15.0, big_delta0=100.0)
        SystemParams(delta_in=0.5, omega1=10.0, big_delta0=100.0)
    p = SystemParams(delta_in=0.5, omega1=30.0, big_delta0=100.0, allow_nonadiabatic=True)
    assert p.rabi_ratio == pytest.approx(0.3)


@given(factor=st.floats(0.01, 100.0))
def test_rescaling_keeps_dimensionless_rates(factor):
    p = SystemParams.matched()
    q = p.scaled(factor)
    assert q.gamma_r / q.gamma1 == pytest.approx(p.gamma_r / p.gamma1, rel=1e-12)
    assert q.in_units_of_gamma1().gamma_r == pytest.approx(p.gamma_r, rel=1e-12)


def test_matching_rabi_ratio():
    p = SystemParams(delta_in=0.5, big_delta0=100.0, omega1=3.0, n_atoms=1e6, g_bar=0.005)
    r = matching_rabi_ratio(p)
    assert r == pytest.approx(math.sqrt(0.5 / (2 * 1e6 * 0.005**2)), rel=1e-14)
    q = with_matched_rabi(p)
    assert q.gamma_r == pytest.approx(q.gamma1, rel=1e-12)


def test_matching_rabi_ratio_errors():
    with pytest.raises(ParameterError):
        matching_rabi_ratio(SystemParams(delta_in=0.5, g_bar=0.0))
    weak = SystemParams(delta_in=0.5, n_atoms=10.0, g_bar=0.01)
    with pytest.raises(AdiabaticityError):
        matching_rabi_ratio(weak)


def test_matching_keeps_control_phase():
    p = SystemParams(delta_in=0.5, omega1=3.0j, n_atoms=1e6, g_bar=0.005)
    q = with_matched_rabi(p)
    assert q.omega1.real == pytest.approx(0.0, abs=1e-15)
    assert q.omega1.imag > 0


def test_derived_rates_per_atom():
    p = SystemParams.matched()
    out = derived_rates(p, couplings=[1.0, 2.0])
    assert out.gamma_r == pytest.approx(1.0)
    assert out.omega_eff_j[1] == pytest.approx(2j * p.omega1 / p.big_delta0)


def test_transmission_worked_example():
    # published anchors: T ~ 0.7e-3 for L = 0.1 cm and ~0.7e-2 for L = 1 cm at gamma1 = 1e8 s^-1
    t1 = transmission_coefficient(CavityGeometry(0.1), 1e8)
    t2 = transmission_coefficient(CavityGeometry(1.0), 1e8)
    assert t1 == pytest.approx(6.67128190396e-4, rel=1e-10)
    assert abs(t1 - 0.7e-3) / 0.7e-3 < 0.1
    assert abs(t2 - 0.7e-2) / 0.7e-2 < 0.1


def test_absorption_coefficients():
    geom = CavityGeometry(0.1, fill_chi=0.5)
    t = transmission_coefficient(geom, 1e8)
    assert 2 * geom.fill_chi * raman_absorption_coefficient(t, geom) * geom.length_L == pytest.approx(t)
    # length-independent optical prefactor, ~0.7 for chi = 0.5, |omega1/big_delta0|^2 = 0.01
    assert optical_absorption_prefactor(1e8, 0.5, 0.01) == pytest.approx(0.667128190396, rel=1e-10)


def test_geometry_validation():
    with pytest.raises(ParameterError):
        CavityGeometry(0.0)
    with pytest.raises(ParameterError):
        CavityGeometry(1.0, fill_chi=1.5)
    with pytest.raises(ParameterError):
        transmission_coefficient(CavityGeometry(1.0), -1.0)
