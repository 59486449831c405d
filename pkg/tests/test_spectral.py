import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from raman_echo.core import SystemParams
from raman_echo.pulses import FrequencyGrid, ModeSpectrum, PulseTrain, gaussian_mode, uniform_time_grid
from raman_echo.spectral import (
    FidelityUndefinedError,
    aggregate_efficiency,
    cavity_response,
    decay_factor,
    echo_efficiency,
    echo_spectrum,
    echo_waveform,
    efficiency_report,
    fidelity,
    lorentzian_pole_integral,
    matching_check,
    reflection_coefficient,
    s_function,
    s_function_value,
    ss_function,
    storage_efficiency,
)

from conftest import params

# Frozen with an independent 30-digit evaluation (own S formula, adaptive quadrature over nu).
ORACLE = {
    0.05: (0.999925065463364, 0.999850196229234, 0.999985946444539),
    0.1: (0.998816180940918, 0.997647965148095, 0.999257344502694),
    0.2: (0.983698424313026, 0.969488285612123, 0.977148145065149),
    0.3: (0.941150584260801, 0.899921658773576, 0.902509818072764),
}

delta_in_st = st.floats(0.05, 10.0)
gamma_r_st = st.floats(0.01, 10.0)
t2_st = st.floats(0.0, 1.0)
nu_st = st.floats(-5.0, 5.0)


def numeric_pole_integral(nu, delta_in, t2_inv):
    """Direct quadrature of the Lorentzian pole integral, independent of the contour result."""

    def lorentz(d):
        return delta_in / np.pi / (d**2 + delta_in**2)

    def re(d):
        return (lorentz(d) / (d - nu - 1j * t2_inv)).real

    def im(d):
        return (lorentz(d) / (d - nu - 1j * t2_inv)).imag

    if t2_inv > 0:
        r = integrate.quad(re, -np.inf, np.inf, limit=400)[0]
        i = integrate.quad(im, -np.inf, np.inf, limit=400)[0]
        return r + 1j * i
    # principal value plus the pi i residue at the real pole
    w = 20.0
    pv = integrate.quad(lorentz, nu - w, nu + w, weight="cauchy", wvar=nu, limit=400)[0]
    tails = integrate.quad(lambda d: lorentz(d) / (d - nu), nu + w, np.inf)[0]
    tails += integrate.quad(lambda d: lorentz(d) / (d - nu), -np.inf, nu - w)[0]
    return pv + tails + 1j * np.pi * lorentz(nu)


@pytest.mark.parametrize("nu,t2_inv", [(0.3, 0.05), (0.0, 0.2), (-1.2, 0.0), (0.3, 0.0)])
def test_pole_integral_against_quadrature(nu, t2_inv):
    closed = lorentzian_pole_integral(nu, 0.5, t2_inv)
    assert closed == pytest.approx(numeric_pole_integral(nu, 0.5, t2_inv), rel=1e-7)


def test_s_function_reference_values(matched):
    assert complex(s_function(0.25, matched)) == pytest.approx(0.990750119261445 + 0.0550416732923025j, rel=1e-12)
    assert float(ss_function(0.25, matched)) == pytest.approx(64 / 65, rel=1e-12)
    p = params(0.5, t2_inv=0.05)
    assert complex(s_function(0.3, p)) == pytest.approx(0.99215900140947 + 0.127085535012j, rel=1e-11)
    v = s_function_value(0.0, matched)
    assert v.s == pytest.approx(1.0, abs=1e-12) and v.z == pytest.approx(1.0, abs=1e-12)


@given(nu=nu_st)
def test_matched_ss_function_closed_form(nu):
    # at both matching conditions Z_r = 1 / (1 + 4 (nu / gamma1)^4)
    z = float(ss_function(nu, SystemParams.matched()))
    assert z == pytest.approx(1.0 / (1.0 + 4.0 * nu**4), rel=1e-12)


@given(delta_in=delta_in_st, gamma_r=gamma_r_st, nu=nu_st)
def test_lossless_ss_function_equals_absorbed_fraction(delta_in, gamma_r, nu):
    # with T2 = infinity Z_r is the fraction of each spectral component not reflected
    p = params(delta_in, gamma_r=gamma_r)
    r = complex(reflection_coefficient(nu, p))
    assert float(ss_function(nu, p)) == pytest.approx(1.0 - abs(r) ** 2, abs=1e-12)


@given(delta_in=delta_in_st, gamma_r=gamma_r_st, t2=t2_st, nu=nu_st)
def test_ss_function_even_in_nu(delta_in, gamma_r, t2, nu):
    p = params(delta_in, gamma_r=gamma_r, t2_inv=t2)
    assert float(ss_function(nu, p)) == pytest.approx(float(ss_function(-nu, p)), rel=1e-12, abs=1e-15)
    assert complex(s_function(-nu, p)) == pytest.approx(np.conj(complex(s_function(nu, p))), rel=1e-12)


@given(delta_in=delta_in_st, gamma_r=gamma_r_st, t2=t2_st, nu=st.floats(-3, 3))
def test_cavity_response_against_quadrature(delta_in, gamma_r, t2, nu):
    p = params(delta_in, gamma_r=gamma_r, t2_inv=max(t2, 1e-3))
    pole = numeric_pole_integral(nu, delta_in, p.t2_inv)
    expect = 1.0 / (0.5 - 1j * nu - 0.5j * gamma_r * delta_in * pole)
    assert complex(cavity_response(nu, p)) == pytest.approx(expect, rel=1e-6)


def test_uncoupled_cavity_reflects_everything():
    p = SystemParams(delta_in=0.5, g_bar=0.0)
    nu = np.linspace(-2, 2, 11)
    assert np.allclose(np.abs(reflection_coefficient(nu, p)), 1.0)
    assert np.allclose(s_function(nu, p), 0.0)


def test_lineshape_not_supported(matched):
    with pytest.raises(NotImplementedError):
        s_function(0.0, matched, lineshape="gaussian")


@pytest.mark.parametrize("dw", sorted(ORACLE))
def test_efficiencies_against_oracle(dw, matched):
    grid = FrequencyGrid.symmetric(max(3.0, 10 * dw), 4001)
    mode = gaussian_mode(grid, dw)
    q_st, q_e, f = ORACLE[dw]
    assert storage_efficiency(mode, matched) == pytest.approx(q_st, abs=1e-10)
    assert echo_efficiency(mode, matched) == pytest.approx(q_e, abs=1e-10)
    assert fidelity(mode, matched) == pytest.approx(f, abs=1e-10)


def test_report_and_decay(matched):
    grid = FrequencyGrid.symmetric(3.0, 2401)
    rep = efficiency_report(gaussian_mode(grid, 0.1), params(0.5, t2_inv=0.001), t0_storage=100.0)
    assert rep.decay_factor == pytest.approx(np.exp(-0.4))
    assert rep.photon_fraction == pytest.approx(rep.decay_factor * rep.q_e)
    assert decay_factor(matched, 1e6) == 1.0


def test_fidelity_undefined_without_coupling():
    grid = FrequencyGrid.symmetric(3.0, 2401)
    p = SystemParams(delta_in=0.5, g_bar=0.0)
    with pytest.raises(FidelityUndefinedError):
        fidelity(gaussian_mode(grid, 0.1), p)


def test_truncated_mode_warns(matched):
    grid = FrequencyGrid.symmetric(1.0, 201)
    mode = ModeSpectrum.normalized(grid, np.ones(201))
    with pytest.warns(RuntimeWarning):
        storage_efficiency(mode, matched)


def test_aggregate_efficiency_weights_by_photons():
    assert aggregate_efficiency([1.0, 0.5], [1.0, 3.0]) == pytest.approx(0.625)


def test_matching_check():
    assert matching_check(SystemParams.matched()).impedance_ok
    rep = matching_check(params(0.6, gamma_r=0.9))
    assert not rep.impedance_ok and not rep.spectral_ok
    assert rep.residuals == pytest.approx((0.1, 0.1))


def test_echo_lands_at_twice_storage_time(matched, narrow_grid):
    a = gaussian_mode(narrow_grid, 0.05, 0.0)
    train = PulseTrain([a, a.delayed(150.0)])
    t = uniform_time_grid(150.0, 550.0, 0.05)
    wave = echo_waveform(train, matched, 100.0, t)
    first = t < 275.0
    assert t[first][np.argmax(np.abs(wave[first]))] == pytest.approx(200.0, abs=0.2)
    assert t[~first][np.argmax(np.abs(wave[~first]))] == pytest.approx(350.0, abs=0.2)
    # energy of the echo equals the sum of per-mode echo efficiencies
    assert np.trapezoid(np.abs(wave) ** 2, t) == pytest.approx(2 * echo_efficiency(a, matched), rel=1e-6)
    assert np.allclose(echo_spectrum(train, matched, 0.0), s_function(narrow_grid.nodes, matched) ** 2 * (a.amp * (1 + np.exp(150j * narrow_grid.nodes))))
