"""Two-level algebra of the Raman pi-pair rephasing sequence and control-pulse propagation.

Operators act on span{|1>, |2>} with |1> first. Heisenberg-picture evolution
by a propagator ``U`` maps ``O -> U^dagger O U``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * np.pi


@dataclass(frozen=True, eq=False)
class TwoLevelOp:
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("TwoLevelOp needs a 2x2 matrix")
        object.__setattr__(self, "m", m)

    def __matmul__(self, other: "TwoLevelOp") -> "TwoLevelOp":
        return TwoLevelOp(self.m @ other.m)

    def __add__(self, other: "TwoLevelOp") -> "TwoLevelOp":
        return TwoLevelOp(self.m + other.m)

    def __mul__(self, scalar) -> "TwoLevelOp":
        return TwoLevelOp(self.m * scalar)

    __rmul__ = __mul__

    @property
    def dag(self) -> "TwoLevelOp":
        return TwoLevelOp(self.m.conj().T)

    def heisenberg(self, u: "TwoLevelOp") -> "TwoLevelOp":
        """U^dagger O U."""
        return TwoLevelOp(u.m.conj().T @ self.m @ u.m)

    def expect(self, rho) -> complex:
        return complex(np.trace(np.asarray(rho) @ self.m))

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.m.conj().T @ self.m - np.eye(2))) <= tol)

    def is_projector(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.m @ self.m - self.m)) <= tol)


P11 = TwoLevelOp([[1, 0], [0, 0]])
P22 = TwoLevelOp([[0, 0], [0, 1]])
P12 = TwoLevelOp([[0, 1], [0, 0]])
P21 = TwoLevelOp([[0, 0], [1, 0]])
W = TwoLevelOp([[1, 0], [0, -1]])
IDENTITY = TwoLevelOp(np.eye(2))


@dataclass(frozen=True)
class ControlPair:
    theta: float = np.pi
    phase_phi: float = 0.0
    delta02: float = 200.0

    def decouples_from_cavity(self, big_delta0: float) -> bool:
        return abs(self.delta02) > abs(big_delta0)


def raman_unitary(theta: float, phase_phi: float = 0.0) -> TwoLevelOp:
    """exp{-i theta/2 [P12 e^{-i phi} + h.c.]} in closed form."""
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    return TwoLevelOp(
        [
            [c, -1j * s * np.exp(-1j * phase_phi)],
            [-1j * s * np.exp(1j * phase_phi), c],
        ]
    )


def free_evolution(delta: float, duration: float) -> TwoLevelOp:
    """Propagator exp(-i delta duration P22) of an isochromat at detuning delta."""
    return TwoLevelOp(np.diag([1.0, np.exp(-1j * delta * duration)]))


def rotate_coherence(theta, phase_phi, p12_in, p21_in, w_in):
    """Expectation values of (P12, W) after a pulse pair of area ``theta``.

    Closed form of U^dagger P12 U and U^dagger W U for ``raman_unitary``::

        P12 -> cos^2(theta/2) P12 + sin^2(theta/2) e^{2i phi} P21 - (i/2) e^{i phi} sin(theta) W
        W   -> cos(theta) W + i sin(theta) (e^{i phi} P21 - e^{-i phi} P12)
    """
    c2 = np.cos(0.5 * theta) ** 2
    s2 = np.sin(0.5 * theta) ** 2
    sn = np.sin(theta)
    e = np.exp(1j * phase_phi)
    p12 = c2 * p12_in + s2 * e**2 * p21_in - 0.5j * e * sn * w_in
    w = np.cos(theta) * w_in + 1j * sn * (e * p21_in - np.conj(e) * p12_in)
    return p12, w


def sequence_propagator(
    delta: float,
    t0: float,
    theta: float = np.pi,
    phase_phi: float = 0.0,
    pair_phase_offset: float = HALF_PI,
) -> TwoLevelOp:
    """Schroedinger propagator of pulse pair, free evolution T0, second pulse pair."""
    first = raman_unitary(theta, phase_phi)
    second = raman_unitary(theta, phase_phi + pair_phase_offset)
    return second @ free_evolution(delta, t0) @ first


def sequence_map_composed(delta, t0, theta=np.pi, phase_phi=0.0, pair_phase_offset=HALF_PI) -> complex:
    """P12 multiplier obtained by explicit 2x2 conjugation."""
    u = sequence_propagator(delta, t0, theta, phase_phi, pair_phase_offset)
    out = P12.heisenberg(u).m
    if abs(out[1, 0]) > 1e-12 or abs(out[0, 0]) > 1e-12 or abs(out[1, 1]) > 1e-12:
        raise ValueError("sequence does not map P12 onto itself; use rotate_coherence for general areas")
    return complex(out[0, 1])


def sequence_map(delta, t0, phase_phi: float = 0.0):
    """Coherence multiplier -exp(i delta T0) of the two-pi-pair sequence.

    The second pair is shifted by pi/2 in phase relative to the first; the
    result is independent of ``phase_phi``. Vectorised over ``delta``.
    """
    return -np.exp(1j * np.asarray(delta) * t0)


def stark_detuning(delta_j, omega2, omega3, delta02):
    """Instantaneous detuning delta_j - (|omega2|^2 - |omega3|^2) / delta02."""
    return delta_j - (np.abs(omega2) ** 2 - np.abs(omega3) ** 2) / delta02


def adiabatic_optical_coherences(omega2, omega3, phase2, phase3, p11, p33, p22, p12, p21, delta02):
    """Optical coherences (P13, P23) slaved to the two rephasing control fields."""
    if delta02 == 0:
        raise ZeroDivisionError("delta02 must be non-zero")
    e2 = omega2 * np.exp(1j * phase2)
    e3 = omega3 * np.exp(1j * phase3)
    p13 = (e2 * (p11 - p33) + e3 * p12) / delta02
    p23 = (e3 * (p22 - p33) + e2 * p21) / delta02
    return p13, p23


@dataclass(frozen=True, eq=False)
class PulseAreaProfile:
    z: np.ndarray
    theta: np.ndarray
    closed_form: np.ndarray

    @property
    def amplitude_deviation(self) -> float:
        """max_Z | |theta(Z)| - |theta(0)| | / |theta(0)|."""
        return float(np.max(np.abs(np.abs(self.theta) - abs(self.theta[0]))) / abs(self.theta[0]))

    @property
    def closed_form_error(self) -> float:
        return float(np.max(np.abs(self.theta - self.closed_form)) / abs(self.theta[0]))

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.theta / self.theta[0])


def pulse_area_closed_form(theta_in, alpha_r13, z):
    """Balanced-field solution theta(Z) = theta(0) exp(i alpha_r13 Z / 2)."""
    return theta_in * np.exp(0.5j * alpha_r13 * np.asarray(z, dtype=float))


def _rk4_march(deriv, state, dz, n_steps, record):
    out = [record(state)]
    for _ in range(n_steps):
        k1 = deriv(state)
        k2 = deriv(state + 0.5 * dz * k1)
        k3 = deriv(state + 0.5 * dz * k2)
        k4 = deriv(state + dz * k3)
        state = state + (dz / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise FloatingPointError("pulse-area propagation diverged; reduce the step")
        out.append(record(state))
    return np.array(out)


def _cumulative_area(rate, dtau):
    area = np.empty_like(rate)
    area[0] = 0.0
    area[1:] = np.cumsum(0.5 * dtau * (rate[1:] + rate[:-1]))
    return area


def pulse_area_propagate(
    theta_in: float,
    alpha_r13: float,
    L_z: float,
    n_steps: int = 200,
    method: str = "area",
    alpha_r23: float | None = None,
    delta02: float = 200.0,
    n_tau: int = 801,
) -> PulseAreaProfile:
    """Propagate the rephasing pulse area through the medium along Z.

    ``method="area"`` integrates the pulse-area equation with balanced
    fields (omega2^2 = omega3^2), whose exact solution is the closed form.
    ``method="rabi"`` integrates the two coupled Rabi-frequency equations
    for a Gaussian pair of equal input amplitude and total area ``theta_in``;
    there the fields drift out of balance at second order in alpha_r13 Z.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    z = np.linspace(0.0, L_z, n_steps + 1)
    dz = L_z / n_steps
    closed = pulse_area_closed_form(theta_in, alpha_r13, z)
    if method == "area":
        # d/dZ dtheta/dtau = (alpha/2) i dtheta/dtau at balance; the total area obeys the same law
        def deriv(th):
            return 0.5j * alpha_r13 * th

        theta = _rk4_march(deriv, np.complex128(theta_in), dz, n_steps, lambda s: s)
    elif method == "rabi":
        a13 = alpha_r13
        a23 = alpha_r13 if alpha_r23 is None else alpha_r23
        tau = np.linspace(-5.0, 5.0, n_tau)
        dtau = tau[1] - tau[0]
        shape = np.exp(-0.5 * tau**2)
        # 2 * amp^2 * sqrt(pi) / delta02 = theta_in
        amp = np.sqrt(theta_in * delta02 / (2.0 * np.sqrt(np.pi)))
        state = np.concatenate([amp * shape, amp * shape]).astype(complex)
        n = n_tau

        def area(st):
            return _cumulative_area(2.0 * st[:n] * st[n:] / delta02, dtau)

        def deriv(st):
            o2, o3 = st[:n], st[n:]
            th = area(st)
            d2 = -0.5 * a13 * (0.5 * o3 * np.sin(th) - 1j * o2 * np.cos(0.5 * th) ** 2)
            d3 = 0.5 * a23 * (0.5 * o2 * np.sin(th) + 1j * o3 * np.sin(0.5 * th) ** 2)
            return np.concatenate([d2, d3])

        theta = _rk4_march(deriv, state, dz, n_steps, lambda st: area(st)[-1])
        theta = theta * (theta_in / theta[0])
    else:
        raise ValueError(f"unknown method {method!r}")
    return PulseAreaProfile(z=z, theta=np.asarray(theta, dtype=complex), closed_form=closed)
