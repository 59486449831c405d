"""Closed-form frequency-domain analysis of storage and echo retrieval.

Everything here is analytic for a Lorentzian inhomogeneous line; the
time-domain integrator in :mod:`raman_echo.dynamics` is checked against it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import SystemParams, derive_gamma_r
from .pulses import ModeSpectrum, PulseTrain, inverse_transform, train_spectrum

MATCH_TOL = 1e-9
TRUNCATION_WARN = 1e-4


class FidelityUndefinedError(ZeroDivisionError):
    """Echo efficiency vanishes, so the normalised output state does not exist."""


@dataclass(frozen=True)
class SFunctionValue:
    s: complex
    z: float


@dataclass(frozen=True)
class EfficiencyReport:
    q_st: float
    q_e: float
    fidelity: float
    decay_factor: float = 1.0

    @property
    def photon_fraction(self) -> float:
        """Mean echo photon number per input photon, decoherence included."""
        return self.decay_factor * self.q_e


@dataclass(frozen=True)
class MatchingReport:
    impedance_ok: bool
    spectral_ok: bool
    impedance_residual: float
    spectral_residual: float

    @property
    def residuals(self) -> tuple:
        return (self.impedance_residual, self.spectral_residual)


def _check_lineshape(lineshape: str):
    if lineshape != "lorentzian":
        # numeric principal-value integration for arbitrary G is not provided
        raise NotImplementedError(f"only the Lorentzian line shape is supported, not {lineshape!r}")


def lorentzian_pole_integral(nu, delta_in: float, t2_inv: float = 0.0):
    """\\int d delta G(delta/delta_in) / (delta - nu - i/T2) for a unit-mass Lorentzian.

    The pole sits in the upper half plane, so closing the contour below picks
    up the Lorentzian pole at -i delta_in.
    """
    nu = np.asarray(nu, dtype=float)
    return -1.0 / (nu + 1j * (delta_in + t2_inv))


def _bracket(nu, p: SystemParams, gamma_r: float):
    return p.gamma1 + gamma_r * p.delta_in / (p.delta_in + p.t2_inv - 1j * nu) - 2j * nu


def s_function(nu, p: SystemParams, lineshape: str = "lorentzian"):
    """Complex storage amplitude S_r(nu).

    ``sqrt(d^2/(d^2+nu^2)) * 2 sqrt(gamma1 Gamma_r) / [gamma1 + Gamma_r d/(d + 1/T2 - i nu) - 2 i nu]``
    with ``d = delta_in``.
    """
    _check_lineshape(lineshape)
    nu = np.asarray(nu, dtype=float)
    gamma_r = derive_gamma_r(p)
    din = p.delta_in
    envelope = np.sqrt(din**2 / (din**2 + nu**2))
    return envelope * 2.0 * np.sqrt(p.gamma1 * gamma_r) / _bracket(nu, p, gamma_r)


def s_function_value(nu: float, p: SystemParams) -> SFunctionValue:
    s = complex(s_function(nu, p))
    return SFunctionValue(s=s, z=abs(s) ** 2)


def ss_function(nu, p: SystemParams):
    """Spectral storage function Z_r(nu) = |S_r(nu)|^2."""
    return np.abs(s_function(nu, p)) ** 2


def cavity_response(nu, p: SystemParams, lineshape: str = "lorentzian"):
    """Ratio sqrt(gamma1) a_o(nu) / b_in(nu) during storage."""
    _check_lineshape(lineshape)
    nu = np.asarray(nu, dtype=float)
    gamma_r = derive_gamma_r(p)
    pole = lorentzian_pole_integral(nu, p.delta_in, p.t2_inv)
    return p.gamma1 / (0.5 * p.gamma1 - 1j * nu - 0.5j * gamma_r * p.delta_in * pole)


def reflection_coefficient(nu, p: SystemParams):
    """b_out(nu)/b_in(nu) with b_out = sqrt(gamma1) a_o - b_in."""
    return cavity_response(nu, p) - 1.0


def _mode_density(mode: ModeSpectrum) -> np.ndarray:
    rho = mode.density
    grid = mode.grid
    edge = max(rho[0], rho[-1]) * (grid.nu_max - grid.nu_min)
    if edge > TRUNCATION_WARN:
        warnings.warn(
            f"mode density at the grid edge suggests > {TRUNCATION_WARN:g} of the norm is truncated",
            RuntimeWarning,
            stacklevel=3,
        )
    return rho


def storage_efficiency(mode: ModeSpectrum, p: SystemParams) -> float:
    """Q_ST,k = \\int Z_r(nu) |f_k(nu)|^2 dnu."""
    rho = _mode_density(mode)
    z = ss_function(mode.grid.nodes, p)
    return float(mode.grid.integrate(z * rho).real)


def echo_efficiency(mode: ModeSpectrum, p: SystemParams) -> float:
    """Q_e,k = \\int Z_r(nu)^2 |f_k(nu)|^2 dnu (decoherence factor excluded)."""
    rho = _mode_density(mode)
    z = ss_function(mode.grid.nodes, p)
    return float(mode.grid.integrate(z**2 * rho).real)


def fidelity(mode: ModeSpectrum, p: SystemParams) -> float:
    """F_k = |\\int S_r^2 |f_k|^2 dnu|^2 / Q_e,k."""
    q_e = echo_efficiency(mode, p)
    if q_e <= 0.0:
        raise FidelityUndefinedError("echo efficiency is zero; fidelity undefined")
    s2 = s_function(mode.grid.nodes, p) ** 2
    overlap = mode.grid.integrate(s2 * mode.density)
    return float(abs(overlap) ** 2 / q_e)


def decay_factor(p: SystemParams, t0_storage: float) -> float:
    """Photon-number loss exp(-4 T0 / T2) accumulated between the pi-pairs."""
    return float(np.exp(-4.0 * t0_storage * p.t2_inv))


def efficiency_report(mode: ModeSpectrum, p: SystemParams, t0_storage: float = 0.0) -> EfficiencyReport:
    q_st = storage_efficiency(mode, p)
    q_e = echo_efficiency(mode, p)
    try:
        fid = fidelity(mode, p)
    except FidelityUndefinedError:
        fid = float("nan")
    return EfficiencyReport(q_st=q_st, q_e=q_e, fidelity=fid, decay_factor=decay_factor(p, t0_storage))


def aggregate_efficiency(values, photon_numbers) -> float:
    """Photon-number-weighted mean of per-mode efficiencies."""
    values = np.asarray(values, dtype=float)
    n = np.asarray(photon_numbers, dtype=float)
    return float(np.sum(values * n) / np.sum(n))


def echo_spectrum(train: PulseTrain, p: SystemParams, t0_storage: float) -> np.ndarray:
    """Output spectrum S_r^2(nu) exp(2 i nu T0) b_in(nu) exp(-2 T0 / T2).

    Its inverse transform places mode k at t = 2 T0 + tau_k.
    """
    grid = train.grid
    nu = grid.nodes
    s2 = s_function(nu, p) ** 2
    b_in = train_spectrum(train)
    amp_decay = np.exp(-2.0 * t0_storage * p.t2_inv)
    return amp_decay * s2 * np.exp(2j * nu * t0_storage) * b_in


def echo_waveform(train: PulseTrain, p: SystemParams, t0_storage: float, t_grid) -> np.ndarray:
    return inverse_transform(echo_spectrum(train, p, t0_storage), train.grid, t_grid)


def matching_check(p: SystemParams, tol: float = MATCH_TOL) -> MatchingReport:
    """Residuals of the impedance (Gamma_r = gamma1) and spectral (delta_in = gamma1/2) conditions."""
    gamma_r = derive_gamma_r(p)
    imp = abs(gamma_r - p.gamma1) / p.gamma1
    spec = abs(p.delta_in - 0.5 * p.gamma1) / p.gamma1
    return MatchingReport(
        impedance_ok=imp <= tol,
        spectral_ok=spec <= tol,
        impedance_residual=imp,
        spectral_residual=spec,
    )
