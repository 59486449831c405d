"""Parameter model, unit conventions and derived rates.

All rates are expressed in units of the cavity decay rate ``gamma1``; the
default ``gamma1 = 1`` makes every number dimensionless. SI values only
appear at the edges (``gamma1_si`` for reporting, :func:`transmission_coefficient`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

SPEED_OF_LIGHT_CM = 2.99792458e10  # cm/s

ADIABATIC_WARN = 0.1
ADIABATIC_MAX = 0.2


class ParameterError(ValueError):
    """Raised when a parameter set violates its invariants."""


class AdiabaticityError(ParameterError):
    """|omega1 / big_delta0| exceeds the hard adiabatic cap."""


class AdiabaticityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Protocol rates and couplings, all in units of ``gamma1``.

    Parameters
    ----------
    delta_in : float
        Inhomogeneous linewidth of the spin (|1>-|2>) transition.
    t2_inv : float
        Homogeneous coherence decay rate 1/T2 (0 means T2 = infinity).
    big_delta0 : float
        One-photon detuning of the Raman transition from the optical line.
    omega1 : complex
        Writing (and reading) control Rabi frequency.
    n_atoms : float
        Effective atom number N.
    g_bar : float
        r.m.s. single-atom coupling to the cavity mode.
    gamma1 : float
        Cavity field decay rate, the unit of everything else.
    gamma1_si : float, optional
        Value of ``gamma1`` in s^-1, used only when reporting SI numbers.
    allow_nonadiabatic : bool
        Skip the hard cap on |omega1 / big_delta0| (research override).
    """

    delta_in: float
    t2_inv: float = 0.0
    big_delta0: float = 100.0
    omega1: complex = 10.0
    n_atoms: float = 1.0e6
    g_bar: float = 0.0
    gamma1: float = 1.0
    gamma1_si: Optional[float] = None
    allow_nonadiabatic: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.gamma1 > 0:
            raise ParameterError(f"gamma1 must be positive, got {self.gamma1}")
        if not self.delta_in > 0:
            raise ParameterError(f"delta_in must be positive, got {self.delta_in}")
        if not self.t2_inv >= 0:
            raise ParameterError(f"t2_inv must be non-negative, got {self.t2_inv}")
        if not self.n_atoms >= 1:
            raise ParameterError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if not self.g_bar >= 0:
            raise ParameterError(f"g_bar must be non-negative, got {self.g_bar}")
        if self.big_delta0 == 0:
            raise ParameterError("big_delta0 must be non-zero")
        ratio = self.rabi_ratio
        if ratio > ADIABATIC_MAX and not self.allow_nonadiabatic:
            raise AdiabaticityError(
                f"|omega1/big_delta0| = {ratio:.3g} exceeds {ADIABATIC_MAX}; "
                "raise big_delta0 or pass allow_nonadiabatic=True"
            )
        if ratio > ADIABATIC_WARN:
            warnings.warn(
                f"|omega1/big_delta0| = {ratio:.3g} > {ADIABATIC_WARN}: "
                "adiabatic elimination error grows as the square of this ratio",
                AdiabaticityWarning,
                stacklevel=3,
            )

    @property
    def rabi_ratio(self) -> float:
        return abs(self.omega1 / self.big_delta0)

    @property
    def gamma_r(self) -> float:
        return derive_gamma_r(self)

    @property
    def coupling_strength(self) -> float:
        """N * g_bar**2, the collective cavity coupling squared."""
        return self.n_atoms * self.g_bar**2

    @classmethod
    def from_gamma_r(
        cls,
        gamma_r: float,
        delta_in: float,
        t2_inv: float = 0.0,
        big_delta0: float = 100.0,
        rabi_ratio: float = 0.1,
        n_atoms: float = 1.0e6,
        gamma1: float = 1.0,
        **kwargs,
    ) -> "SystemParams":
        """Build a parameter set that realises a target Raman absorption rate.

        ``omega1 = rabi_ratio * big_delta0`` and ``g_bar`` is solved from
        ``gamma_r = 2 N |omega1 g_bar / big_delta0|**2 / delta_in``.
        """
        if gamma_r < 0:
            raise ParameterError("gamma_r must be non-negative")
        if rabi_ratio <= 0:
            raise ParameterError("rabi_ratio must be positive")
        g_bar = math.sqrt(gamma_r * delta_in / (2.0 * n_atoms * rabi_ratio**2))
        return cls(
            delta_in=delta_in,
            t2_inv=t2_inv,
            big_delta0=big_delta0,
            omega1=rabi_ratio * big_delta0,
            n_atoms=n_atoms,
            g_bar=g_bar,
            gamma1=gamma1,
            **kwargs,
        )

    @classmethod
    def matched(cls, t2_inv: float = 0.0, gamma1: float = 1.0, **kwargs) -> "SystemParams":
        """Both matching conditions: gamma_r = gamma1 and delta_in = gamma1/2."""
        return cls.from_gamma_r(gamma1, 0.5 * gamma1, t2_inv=t2_inv, gamma1=gamma1, **kwargs)

    def with_gamma_r(self, gamma_r: float) -> "SystemParams":
        """Same parameters with g_bar rescaled to give ``gamma_r``."""
        ratio2 = self.rabi_ratio**2
        g_bar = math.sqrt(gamma_r * self.delta_in / (2.0 * self.n_atoms * ratio2))
        return replace(self, g_bar=g_bar)

    def scaled(self, factor: float) -> "SystemParams":
        """Multiply every rate by ``factor`` (a change of frequency unit)."""
        return replace(
            self,
            gamma1=self.gamma1 * factor,
            delta_in=self.delta_in * factor,
            t2_inv=self.t2_inv * factor,
            big_delta0=self.big_delta0 * factor,
            omega1=self.omega1 * factor,
            g_bar=self.g_bar * factor,
        )

    def in_units_of_gamma1(self) -> "SystemParams":
        return self.scaled(1.0 / self.gamma1)


@dataclass(frozen=True)
class DerivedRates:
    gamma_r: float
    omega_eff_j: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CavityGeometry:
    """Cavity length (cm) and atomic filling factor."""

    length_L: float
    fill_chi: float = 1.0
    speed_c: float = SPEED_OF_LIGHT_CM

    def __post_init__(self):
        if not self.length_L > 0:
            raise ParameterError("length_L must be positive")
        if not 0 < self.fill_chi <= 1:
            raise ParameterError("fill_chi must lie in (0, 1]")


def derive_gamma_r(p: SystemParams) -> float:
    """Raman absorption rate ``2 N |omega1 g_bar / big_delta0|**2 / delta_in``."""
    return 2.0 * p.n_atoms * abs(p.omega1 * p.g_bar / p.big_delta0) ** 2 / p.delta_in


def derived_rates(p: SystemParams, couplings=None) -> DerivedRates:
    """Gamma_r plus, if per-atom couplings are given, i (omega1*/big_delta0) g_j."""
    omega_eff = None
    if couplings is not None:
        omega_eff = 1j * np.conj(p.omega1) / p.big_delta0 * np.asarray(couplings, dtype=complex)
    return DerivedRates(gamma_r=derive_gamma_r(p), omega_eff_j=omega_eff)


def transmission_coefficient(geom: CavityGeometry, gamma1_si: float) -> float:
    """Mirror transmission T from gamma1 ~ T c / (2 L)."""
    if not gamma1_si > 0:
        raise ParameterError("gamma1_si must be positive")
    return 2.0 * geom.length_L * gamma1_si / geom.speed_c


def raman_absorption_coefficient(transmission: float, geom: CavityGeometry) -> float:
    """Raman absorption coefficient (cm^-1) that impedance-matches the cavity."""
    return transmission / (2.0 * geom.fill_chi * geom.length_L)


def optical_absorption_prefactor(
    gamma1_si: float, fill_chi: float, rabi_ratio_sq: float, speed_c: float = SPEED_OF_LIGHT_CM
) -> float:
    """Prefactor A (cm^-1) in the matched optical absorption alpha_13 = A * delta_in / Delta_in^(13).

    The cavity length cancels: alpha_r = T / (2 chi L) with T = 2 L gamma1 / c
    and alpha_r = |omega1/big_delta0|**2 (Delta_in^(13) / delta_in) alpha_13.
    """
    return gamma1_si / (speed_c * fill_chi * rabi_ratio_sq)


def matching_rabi_ratio(p: SystemParams) -> float:
    """|omega1 / big_delta0| that gives gamma_r = gamma1 for the atoms in ``p``."""
    coupling = p.coupling_strength
    if not coupling > 0:
        raise ParameterError("N * g_bar**2 must be positive to impedance-match")
    ratio = math.sqrt(p.delta_in * p.gamma1 / (2.0 * coupling))
    if ratio > ADIABATIC_MAX:
        raise AdiabaticityError(
            f"impedance matching needs |omega1/big_delta0| = {ratio:.3g} > {ADIABATIC_MAX}; "
            "increase N or g_bar"
        )
    return ratio


def with_matched_rabi(p: SystemParams) -> SystemParams:
    """Copy of ``p`` with omega1 retuned (phase kept) so that gamma_r = gamma1."""
    ratio = matching_rabi_ratio(p)
    omega1 = ratio * abs(p.big_delta0)
    if isinstance(p.omega1, complex) and p.omega1 != 0:
        omega1 = omega1 * p.omega1 / abs(p.omega1)
    return replace(p, omega1=omega1)
