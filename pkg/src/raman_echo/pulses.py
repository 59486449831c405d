"""Signal-field representation: spectral grids, single-photon modes and trains.

Fourier convention (unitary)::

    b(t)  = (2 pi)^-1/2 \\int dnu b(nu) exp(-i nu t)
    b(nu) = (2 pi)^-1/2 \\int dt  b(t)  exp(+i nu t)

A mode arriving at ``tau_k`` contributes ``exp(i nu tau_k) f_k(nu)`` to the
input spectrum, i.e. ``b_k(t - tau_k)`` in time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-6
SEPARATION_FACTOR = 5.0
_CHUNK = 512
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class GridError(ValueError):
    pass


class AliasingError(GridError):
    pass


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform, odd-sized frequency grid containing nu = 0 as a node."""

    nu_min: float = -10.0
    nu_max: float = 10.0
    n_points: int = 4001

    def __post_init__(self):
        if not self.nu_min < 0 < self.nu_max:
            raise GridError("grid must satisfy nu_min < 0 < nu_max")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise GridError("n_points must be odd and >= 3")
        # nu = 0 must sit on a node
        k = -self.nu_min / self.spacing
        if abs(k - round(k)) > 1e-9:
            raise GridError("nu = 0 is not a grid node; use a symmetric grid")

    @classmethod
    def symmetric(cls, nu_max: float, n_points: int) -> "FrequencyGrid":
        return cls(-nu_max, nu_max, n_points)

    @property
    def spacing(self) -> float:
        return (self.nu_max - self.nu_min) / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.nu_min, self.nu_max, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.n_points, self.spacing)

    def integrate(self, values) -> complex:
        return np.dot(self.weights, values)


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Spectral amplitude f_k(nu) of one temporal mode, unit L2 norm."""

    grid: FrequencyGrid
    amp: np.ndarray
    tau_k: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise GridError("amplitude does not match grid size")
        object.__setattr__(self, "amp", amp)
        norm = self.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"mode is not normalised: integral |f|^2 = {norm:.9g}")

    @classmethod
    def normalized(cls, grid: FrequencyGrid, amp, tau_k: float = 0.0) -> "ModeSpectrum":
        amp = np.asarray(amp, dtype=complex)
        norm = grid.integrate(np.abs(amp) ** 2).real
        if norm <= 0:
            raise ValueError("zero spectrum cannot be normalised")
        return cls(grid, amp / np.sqrt(norm), tau_k)

    @property
    def density(self) -> np.ndarray:
        """|f_k(nu)|^2, the spectral photon-number density."""
        return np.abs(self.amp) ** 2

    def norm(self) -> float:
        return float(self.grid.integrate(np.abs(self.amp) ** 2).real)

    def width(self) -> float:
        """r.m.s. spectral width of |f_k|^2."""
        nu = self.grid.nodes
        rho = self.density
        m1 = self.grid.integrate(nu * rho).real
        m2 = self.grid.integrate(nu**2 * rho).real
        return float(np.sqrt(max(m2 - m1**2, 0.0)))

    def delayed(self, tau_k: float) -> "ModeSpectrum":
        return ModeSpectrum(self.grid, self.amp, tau_k)


@dataclass(frozen=True, eq=False)
class PulseTrain:
    modes: tuple

    def __init__(self, modes: Sequence[ModeSpectrum]):
        modes = tuple(modes)
        if not modes:
            raise ValueError("a pulse train needs at least one mode")
        grid = modes[0].grid
        for m in modes[1:]:
            if m.grid != grid:
                raise GridError("all modes in a train must share one frequency grid")
        for prev, cur in zip(modes, modes[1:]):
            gap = cur.tau_k - prev.tau_k
            if gap <= 0:
                raise ValueError("arrival times must be strictly increasing")
            need = SEPARATION_FACTOR / cur.width()
            if gap < need:
                raise ValueError(
                    f"modes at {prev.tau_k} and {cur.tau_k} overlap: separation "
                    f"{gap:.3g} < {SEPARATION_FACTOR:g}/dw = {need:.3g}"
                )
        object.__setattr__(self, "modes", modes)

    @property
    def grid(self) -> FrequencyGrid:
        return self.modes[0].grid

    @property
    def arrival_times(self) -> np.ndarray:
        return np.array([m.tau_k for m in self.modes])

    def __len__(self):
        return len(self.modes)


def gaussian_mode(grid: FrequencyGrid, dw_f: float, tau_k: float = 0.0) -> ModeSpectrum:
    """Flat-phase mode with |f(nu)|^2 proportional to exp(-nu^2 / (2 dw_f^2))."""
    if not dw_f > 0:
        raise ValueError("dw_f must be positive")
    span = min(-grid.nu_min, grid.nu_max)
    if span < 6.0 * dw_f:
        raise GridError(
            f"grid half-width {span:g} cannot hold a Gaussian of width {dw_f:g} "
            "to 1e-6 of its norm (needs >= 6 dw_f)"
        )
    if grid.spacing > dw_f:
        raise GridError(f"grid spacing {grid.spacing:g} does not resolve width {dw_f:g}")
    nu = grid.nodes
    amp = np.exp(-(nu**2) / (4.0 * dw_f**2))
    return ModeSpectrum.normalized(grid, amp, tau_k)


def train_spectrum(train: PulseTrain | Sequence[ModeSpectrum]) -> np.ndarray:
    """b_in(nu) = sum_k exp(i nu tau_k) f_k(nu)."""
    modes = train.modes if isinstance(train, PulseTrain) else tuple(train)
    grid = modes[0].grid
    nu = grid.nodes
    out = np.zeros(grid.n_points, dtype=complex)
    for m in modes:
        if m.grid != grid:
            raise GridError("modes live on different grids")
        out += np.exp(1j * nu * m.tau_k) * m.amp
    return out


def _check_nyquist(t_grid: np.ndarray, grid: FrequencyGrid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 2:
        return
    dt = np.max(np.diff(t_grid))
    nu_top = max(-grid.nu_min, grid.nu_max)
    if dt >= np.pi / nu_top:
        raise AliasingError(f"time step {dt:g} violates Nyquist limit pi/{nu_top:g} = {np.pi / nu_top:g}")


def inverse_transform(values, grid: FrequencyGrid, t_grid) -> np.ndarray:
    """Spectrum on ``grid`` -> time series on ``t_grid`` (trapezoid quadrature)."""
    t_grid = np.asarray(t_grid, dtype=float)
    _check_nyquist(t_grid, grid)
    weighted = grid.weights * np.asarray(values, dtype=complex) * _INV_SQRT_2PI
    nu = grid.nodes
    out = np.empty(t_grid.size, dtype=complex)
    for start in range(0, t_grid.size, _CHUNK):
        t = t_grid[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.exp(-1j * np.outer(t, nu)) @ weighted
    return out


def forward_transform(series, t_grid, grid: FrequencyGrid) -> np.ndarray:
    """Time series on a uniform ``t_grid`` -> spectrum on ``grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    _check_nyquist(t_grid, grid)
    dt = np.diff(t_grid)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise GridError("forward transform needs a uniform time grid")
    weighted = trapezoid_weights(t_grid.size, dt[0]) * np.asarray(series, dtype=complex) * _INV_SQRT_2PI
    nu = grid.nodes
    out = np.empty(grid.n_points, dtype=complex)
    for start in range(0, nu.size, _CHUNK):
        v = nu[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.exp(1j * np.outer(v, t_grid)) @ weighted
    return out


def spectrum_to_time(ms: ModeSpectrum, t_grid) -> np.ndarray:
    """Temporal envelope b_k(t - tau_k) of a mode."""
    nu = ms.grid.nodes
    return inverse_transform(ms.amp * np.exp(1j * nu * ms.tau_k), ms.grid, t_grid)


def time_to_spectrum(series, t_grid, grid: FrequencyGrid, tau_k: float = 0.0) -> np.ndarray:
    """Inverse of :func:`spectrum_to_time`: recover f_k(nu) given its arrival time."""
    raw = forward_transform(series, t_grid, grid)
    return raw * np.exp(-1j * grid.nodes * tau_k)


def time_norm(series, t_grid) -> float:
    t_grid = np.asarray(t_grid, dtype=float)
    return float(np.trapezoid(np.abs(series) ** 2, t_grid))


def uniform_time_grid(t_start: float, t_stop: float, dt: float) -> np.ndarray:
    n = int(round((t_stop - t_start) / dt)) + 1
    return t_start + dt * np.arange(n)
