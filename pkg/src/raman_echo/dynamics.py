"""Time-domain integration of the linearised cavity + ensemble equations.

The operator equations are linear, so they are integrated as complex
c-number amplitude equations over a discretised inhomogeneous ensemble.
Each isochromat ``j`` is stored as a collective amplitude
``x_j = sqrt(N_eff w_j) P_j`` so that ``sum_j |x_j|^2`` is the number of
excitations it carries.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .core import SystemParams
from .pulses import PulseTrain, inverse_transform, time_norm, train_spectrum, uniform_time_grid
from .rephasing import sequence_map
from .spectral import EfficiencyReport, decay_factor, echo_waveform

DEFAULT_K_ATOMS = 2001
DEFAULT_TRUNCATION = 50.0
DEFAULT_RTOL = 1e-9
DEFAULT_DT = 0.05
SETTLE_MARGIN = 5.0
PULSE_SPAN = 6.0


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class EnsembleSample:
    """Discretised inhomogeneous line.

    ``weights`` sum to one over the sampled window; ``mass`` is the fraction
    of the full Lorentzian the window holds. Couplings are relative to
    ``g_bar`` with ``sum w |c|^2 = 1``.
    """

    detunings: np.ndarray
    weights: np.ndarray
    couplings: np.ndarray
    delta_in: float
    mass: float = 1.0
    scheme: str = "stratified"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def size(self) -> int:
        return int(np.asarray(self.detunings).size)

    def pole_sum(self, nu, t2_inv: float = 0.0):
        """Discrete counterpart of the Lorentzian pole integral, mass-weighted."""
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        z = nu[:, None] + 1j * t2_inv
        out = self.mass * np.sum(self.weights / (self.detunings[None, :] - z), axis=1)
        return out if out.size > 1 else out[0]

    def cdf(self, x):
        """Weighted empirical CDF of the detunings."""
        x = np.asarray(x, dtype=float)
        order = np.argsort(self.detunings)
        cum = np.cumsum(self.weights[order])
        idx = np.searchsorted(self.detunings[order], x, side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)


def lorentzian_cdf(x, delta_in: float):
    return 0.5 + np.arctan(np.asarray(x) / delta_in) / np.pi


def sample_ensemble(
    k_atoms: int,
    delta_in: float,
    scheme: str = "stratified",
    truncation: float = DEFAULT_TRUNCATION,
    standing_wave: bool = False,
    seed: int = 0,
) -> EnsembleSample:
    """Inverse-CDF stratified sample of a Lorentzian line truncated at +-truncation*delta_in.

    Strata have equal probability mass; each is represented by the detuning
    at its mass midpoint. ``standing_wave`` draws cos(k r_j) factors for the
    couplings (renormalised so the r.m.s. coupling is unchanged).
    """
    if k_atoms < 3 or k_atoms % 2 == 0:
        raise ValueError("k_atoms must be odd and >= 3 so that delta = 0 is sampled")
    if scheme != "stratified":
        raise ValueError(f"unknown sampling scheme {scheme!r}")
    lo = lorentzian_cdf(-truncation * delta_in, delta_in)
    hi = lorentzian_cdf(truncation * delta_in, delta_in)
    mass = float(hi - lo)
    du = mass / k_atoms
    u = lo + du * (np.arange(k_atoms) + 0.5)
    det = delta_in * np.tan(np.pi * (u - 0.5))
    det = 0.5 * (det - det[::-1])  # exact antisymmetry
    weights = np.full(k_atoms, 1.0 / k_atoms)
    if standing_wave:
        rng = np.random.default_rng(seed)
        c = np.cos(2.0 * np.pi * rng.random(k_atoms))
        c = c / np.sqrt(np.sum(weights * c**2))
    else:
        c = np.ones(k_atoms)
    return EnsembleSample(det, weights, c.astype(complex), delta_in, mass, scheme)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Uniformly sampled complex signal, zero outside its support."""

    t0: float
    dt: float
    values: np.ndarray

    @classmethod
    def zeros(cls):
        return cls(0.0, 1.0, np.zeros(0, dtype=complex))

    @classmethod
    def from_train(cls, train: PulseTrain, t_start: float, t_stop: float, dt: float):
        t = uniform_time_grid(t_start, t_stop, dt)
        return cls(float(t[0]), dt, inverse_transform(train_spectrum(train), train.grid, t))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        from ._kernels_py import source_value

        return np.array([source_value(self.values, self.t0, self.dt, x) for x in t])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of one integration window.

    ``p12``/``p13`` are collective isochromat amplitudes sqrt(N_eff w_j) P_j
    at the snapshot times ``t_grid[snap_index]``.
    """

    t_grid: np.ndarray
    a_o: np.ndarray
    b_in: np.ndarray
    b_out: np.ndarray
    p12: np.ndarray
    snap_index: np.ndarray
    p13: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)

    @property
    def snap_times(self) -> np.ndarray:
        return self.t_grid[self.snap_index]

    @property
    def final_p12(self) -> np.ndarray:
        return self.p12[-1]

    @property
    def residual_cavity_fraction(self) -> float:
        """|a_o(T_end)|^2 / max |a_o|^2; a large value flags incomplete absorption."""
        peak = float(np.max(np.abs(self.a_o) ** 2))
        return float(abs(self.a_o[-1]) ** 2 / peak) if peak > 0 else 0.0

    def stored_excitation(self, index: int = -1) -> float:
        return float(np.sum(np.abs(self.p12[index]) ** 2))

    def output_energy(self) -> float:
        return time_norm(self.b_out, self.t_grid)

    def input_energy(self) -> float:
        return time_norm(self.b_in, self.t_grid)

    def to_csv(self, path, digits: int = 12) -> None:
        fmt = f"{{:.{digits}g}}"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re_a_o", "im_a_o", "abs_b_out_sq"])
            for t, a, b in zip(self.t_grid, self.a_o, self.b_out):
                w.writerow([fmt.format(t), fmt.format(a.real), fmt.format(a.imag), fmt.format(abs(b) ** 2)])


def _collective_couplings(p: SystemParams, ens: EnsembleSample) -> np.ndarray:
    """sqrt(N_eff w_j) g_j with N_eff = N * mass (continuum density near resonance)."""
    n_eff = p.n_atoms * ens.mass
    return np.sqrt(n_eff * ens.weights) * p.g_bar * ens.couplings


def _integrate(y0, full, d, c, e, D, f, h, kappa_a, p, src, t_grid, method, rtol, atol, substeps, store_every):
    adaptive = method == "adaptive"
    if method not in ("adaptive", "rk4"):
        raise ValueError("method must be 'adaptive' or 'rk4'")
    try:
        return kernels.integrate_arrow(
            y0,
            full,
            d,
            c,
            e,
            D,
            f,
            h,
            kappa_a,
            math.sqrt(p.gamma1),
            src.values,
            src.t0,
            src.dt,
            t_grid,
            adaptive,
            substeps,
            rtol,
            atol,
            0.0,
            store_every,
        )
    except FloatingPointError as exc:
        raise IntegrationError(str(exc)) from exc


def _atol(rtol, src: SampledSignal, initial=None):
    scale = 0.0
    if src.values.size:
        scale = float(np.max(np.abs(src.values)))
    if initial is not None and np.size(initial):
        scale = max(scale, float(np.max(np.abs(initial))))
    return rtol * 1e-3 * (scale if scale > 0 else 1.0)


def simulate_storage_effective(
    p: SystemParams,
    ens: EnsembleSample,
    b_in: SampledSignal,
    t_grid,
    method: str = "adaptive",
    rtol: float = DEFAULT_RTOL,
    atol: Optional[float] = None,
    substeps: int = 4,
    store_every: int = 0,
    initial_p12=None,
    initial_a: complex = 0.0,
) -> Trajectory:
    """Two-equation (adiabatically eliminated) model driven by ``b_in``."""
    t_grid = np.asarray(t_grid, dtype=float)
    kappa = p.omega1 / p.big_delta0
    hcol = _collective_couplings(p, ens)
    c = 1j * kappa * hcol
    e = 1j * np.conj(kappa) * np.conj(hcol)
    d = ens.detunings - 1j * p.t2_inv
    y0 = np.zeros(ens.size + 1, dtype=complex)
    y0[0] = initial_a
    if initial_p12 is not None:
        y0[1:] = initial_p12
    if atol is None:
        atol = _atol(rtol, b_in, initial_p12)
    a, snaps, idx, stats = _integrate(
        y0, False, d, c, e, None, 0j, 0j, 0.5 * p.gamma1, p, b_in, t_grid, method, rtol, atol, substeps, store_every
    )
    src = b_in(t_grid) if b_in.values.size else np.zeros_like(a)
    b_out = math.sqrt(p.gamma1) * a - src
    return Trajectory(t_grid, a, src, b_out, snaps, idx, None, stats)


def simulate_storage_full(
    p: SystemParams,
    ens: EnsembleSample,
    b_in: SampledSignal,
    t_grid,
    method: str = "adaptive",
    rtol: float = DEFAULT_RTOL,
    atol: Optional[float] = None,
    substeps: int = 4,
    store_every: int = 0,
    optical_detunings=None,
) -> Trajectory:
    """Three-equation model with the optical coherence P13 kept explicitly.

    Frame conventions match the effective model: the signal carrier sits on
    the dispersively shifted cavity and the spin detunings carry the
    +|omega1|^2/big_delta0 light shift, so eliminating P13 recovers the
    effective equations exactly.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    hcol = _collective_couplings(p, ens)
    omega = complex(p.omega1)
    shift = float(np.sum(np.abs(hcol) ** 2)) / p.big_delta0
    d13 = np.full(ens.size, p.big_delta0, dtype=complex)
    if optical_detunings is not None:
        d13 = d13 + np.asarray(optical_detunings)
    d12 = ens.detunings + abs(omega) ** 2 / p.big_delta0 - 1j * p.t2_inv
    c = 1j * hcol
    e = 1j * np.conj(hcol)
    y0 = np.zeros(2 * ens.size + 1, dtype=complex)
    if atol is None:
        atol = _atol(rtol, b_in)
    if method == "adaptive" and abs(p.big_delta0) * (t_grid[-1] - t_grid[0]) > 1e7:
        raise IntegrationError("big_delta0 too large for step control; integrate in a frame rotating at big_delta0")
    a, snaps, idx, stats = _integrate(
        y0,
        True,
        d12,
        c,
        e,
        d13,
        1j * omega,
        1j * np.conj(omega),
        0.5 * p.gamma1 + 1j * shift,
        p,
        b_in,
        t_grid,
        method,
        rtol,
        atol,
        substeps,
        store_every,
    )
    k = ens.size
    src = b_in(t_grid) if b_in.values.size else np.zeros_like(a)
    b_out = math.sqrt(p.gamma1) * a - src
    return Trajectory(t_grid, a, src, b_out, snaps[:, k:], idx, snaps[:, :k], stats)


def adiabatic_p13(a_o, p12_j, p: SystemParams, g_j):
    """Optical coherence slaved to the cavity field and spin coherence."""
    if p.big_delta0 == 0:
        raise ZeroDivisionError("big_delta0 must be non-zero")
    return (np.conj(g_j) * a_o + p.omega1 * p12_j) / p.big_delta0


def simulate_retrieval(
    p: SystemParams,
    ens: EnsembleSample,
    initial_p12,
    t_grid,
    method: str = "adaptive",
    rtol: float = DEFAULT_RTOL,
    atol: Optional[float] = None,
    substeps: int = 4,
    store_every: int = 0,
) -> Trajectory:
    """Source-free emission with the reading field equal to the writing field."""
    initial_p12 = np.asarray(initial_p12, dtype=complex)
    traj = simulate_storage_effective(
        p,
        ens,
        SampledSignal.zeros(),
        t_grid,
        method=method,
        rtol=rtol,
        atol=atol if atol is not None else _atol(rtol, SampledSignal.zeros(), initial_p12),
        substeps=substeps,
        store_every=store_every,
        initial_p12=initial_p12,
    )
    return traj


def apply_rephasing(p: SystemParams, ens: EnsembleSample, p12, t0_storage: float) -> np.ndarray:
    """Instantaneous pi-pair sequence: P12 -> -exp(i delta T0) P12, with T2 decay over T0."""
    return sequence_map(ens.detunings, t0_storage) * np.exp(-p.t2_inv * t0_storage) * np.asarray(p12)


@dataclass(frozen=True)
class PipelineOptions:
    dt: float = DEFAULT_DT
    source_dt: Optional[float] = None
    method: str = "adaptive"
    rtol: float = DEFAULT_RTOL
    substeps: int = 4
    settle: float = SETTLE_MARGIN
    pulse_span: float = PULSE_SPAN
    t0_storage: Optional[float] = None


@dataclass(frozen=True, eq=False)
class PipelineResult:
    storage: Trajectory
    retrieval: Trajectory
    echo_t: np.ndarray
    echo_waveform: np.ndarray
    t_switch: float
    t0_storage: float
    reports: list
    energy_ratios: np.ndarray
    input_energies: np.ndarray
    echo_windows: list

    @property
    def report(self) -> EfficiencyReport:
        return self.reports[0]

    def echo_peak_times(self) -> np.ndarray:
        out = []
        for lo, hi in self.echo_windows:
            m = (self.echo_t >= lo) & (self.echo_t < hi)
            k = int(np.argmax(np.abs(self.echo_waveform[m])))
            out.append(float(self.echo_t[m][k]))
        return np.array(out)


def default_storage_time(train: PulseTrain, t_switch: float, opts: PipelineOptions) -> float:
    first = train.modes[0]
    lead = opts.pulse_span / first.width()
    return float(np.ceil((t_switch - first.tau_k + lead + 4.0 * opts.settle) / opts.dt) * opts.dt)


def run_pipeline(
    p: SystemParams,
    ens: EnsembleSample,
    train: PulseTrain,
    t0_storage: Optional[float] = None,
    options: Optional[PipelineOptions] = None,
) -> PipelineResult:
    """Store the train, apply the rephasing sequence, then retrieve the echo.

    Storage runs from the leading edge of the first mode until ``settle``
    after the last mode has entered; the sequence map then acts over
    ``t0_storage`` and retrieval runs until the last echo has left.
    """
    opts = options or PipelineOptions()
    if t0_storage is None:
        t0_storage = opts.t0_storage
    dt = opts.dt
    src_dt = opts.source_dt or 0.5 * dt
    modes = train.modes
    t_start = modes[0].tau_k - opts.pulse_span / modes[0].width()
    t_start = np.floor(t_start / dt) * dt
    t_switch = modes[-1].tau_k + opts.pulse_span / modes[-1].width() + opts.settle
    t_switch = t_start + np.ceil((t_switch - t_start) / dt) * dt
    if t0_storage is None:
        t0_storage = default_storage_time(train, t_switch, opts)
    if t0_storage <= t_switch - modes[0].tau_k:
        raise ValueError("t0_storage must exceed the dephasing time t_switch - tau_1")

    source = SampledSignal.from_train(train, t_start, t_switch, src_dt)
    t_store = uniform_time_grid(t_start, t_switch, dt)
    storage = simulate_storage_effective(
        p, ens, source, t_store, method=opts.method, rtol=opts.rtol, substeps=opts.substeps
    )
    p12 = apply_rephasing(p, ens, storage.final_p12, t0_storage)
    t_read = t_switch + t0_storage
    t_end = 2.0 * t0_storage + modes[-1].tau_k + opts.pulse_span / modes[-1].width() + opts.settle
    n = int(np.ceil((t_end - t_read) / dt)) + 1
    t_ret = t_read + dt * np.arange(n)
    retrieval = simulate_retrieval(p, ens, p12, t_ret, method=opts.method, rtol=opts.rtol, substeps=opts.substeps)
    echo = retrieval.b_out

    taus = train.arrival_times
    centers = 2.0 * t0_storage + taus
    edges = [t_read] + list(0.5 * (centers[1:] + centers[:-1])) + [t_ret[-1] + dt]
    windows = list(zip(edges[:-1], edges[1:]))
    in_edges = [t_start] + list(0.5 * (taus[1:] + taus[:-1])) + [t_switch + dt]
    t_src = source.times
    fac = decay_factor(p, t0_storage)
    reports, ratios, e_ins = [], [], []
    for k, ((lo, hi), (ilo, ihi)) in enumerate(zip(windows, zip(in_edges[:-1], in_edges[1:]))):
        m_out = (t_ret >= lo) & (t_ret < hi)
        m_in = (t_src >= ilo) & (t_src < ihi)
        e_out = time_norm(echo[m_out], t_ret[m_out])
        e_in = time_norm(source.values[m_in], t_src[m_in])
        ratio = e_out / e_in
        # overlap with the input mode delayed by 2 T0
        ref = source(t_ret[m_out] - 2.0 * t0_storage)
        overlap = np.trapezoid(echo[m_out] * np.conj(ref), t_ret[m_out])
        fid = abs(overlap) ** 2 / (e_out * e_in) if e_out > 0 else float("nan")
        if len(modes) == 1:
            q_st = storage.stored_excitation() / e_in
        else:
            q_st = float("nan")
        reports.append(EfficiencyReport(q_st=q_st, q_e=ratio / fac, fidelity=float(fid), decay_factor=fac))
        ratios.append(ratio)
        e_ins.append(e_in)
    return PipelineResult(
        storage=storage,
        retrieval=retrieval,
        echo_t=t_ret,
        echo_waveform=echo,
        t_switch=float(t_switch),
        t0_storage=float(t0_storage),
        reports=reports,
        energy_ratios=np.array(ratios),
        input_energies=np.array(e_ins),
        echo_windows=windows,
    )


def analytic_echo(train: PulseTrain, p: SystemParams, t0_storage: float, t_grid) -> np.ndarray:
    """Frequency-domain echo prediction on the pipeline's time axis."""
    return echo_waveform(train, p, t0_storage, t_grid)


def gamma_r_check(p: SystemParams, ens: EnsembleSample) -> float:
    """Gamma_r realised by the discretised couplings (equals derive_gamma_r by construction)."""
    hcol = _collective_couplings(p, ens)
    return float(2.0 * abs(p.omega1 / p.big_delta0) ** 2 * np.sum(np.abs(hcol) ** 2) / (p.delta_in * ens.mass))


__all__ = [
    "EnsembleSample",
    "SampledSignal",
    "Trajectory",
    "PipelineOptions",
    "PipelineResult",
    "sample_ensemble",
    "simulate_storage_effective",
    "simulate_storage_full",
    "simulate_retrieval",
    "adiabatic_p13",
    "apply_rephasing",
    "run_pipeline",
    "analytic_echo",
    "gamma_r_check",
]
