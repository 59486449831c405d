"""Pure-numpy integration kernels (fallback for the compiled ``_kernels``).

Both implementations integrate the same "arrow" linear system::

    a' = -kappa_a a + sum_j c_j P_j + sqrt_gamma b(t)
    effective:  X_j' = -i d_j X_j + e_j a                  (P = X)
    full:       Y_j' = -i D_j Y_j + e_j a + f X_j          (P = Y)
                X_j' = -i d_j X_j + h Y_j

with the state packed as ``[a, Y..., X...]`` (``Y`` absent for the
effective model). ``b(t)`` is cubic-Lagrange interpolated from uniform
samples and is zero outside them.
"""

import math

import numpy as np

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

BACKEND = "python"


def source_value(src, src_t0, src_dt, t):
    n = src.shape[0]
    if n == 0:
        return 0.0j
    x = (t - src_t0) / src_dt
    if x < 0.0 or x > n - 1:
        return 0.0j
    if n < 4:
        i = min(int(x), n - 2) if n > 1 else 0
        if n == 1:
            return complex(src[0])
        frac = x - i
        return complex(src[i] * (1.0 - frac) + src[i + 1] * frac)
    i = int(math.floor(x))
    j0 = min(max(i - 1, 0), n - 4)
    u = x - j0
    w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w1 = u * (u - 2.0) * (u - 3.0) / 2.0
    w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
    w3 = u * (u - 1.0) * (u - 2.0) / 6.0
    return complex(w0 * src[j0] + w1 * src[j0 + 1] + w2 * src[j0 + 2] + w3 * src[j0 + 3])


class _System:
    def __init__(self, full, d, c, e, D, f, h, kappa_a, sqrt_gamma, src, src_t0, src_dt):
        self.full = full
        self.k = d.shape[0]
        self.mid = -1j * np.asarray(d)
        self.c = np.asarray(c)
        self.e = np.asarray(e)
        self.mD = -1j * np.asarray(D) if full else None
        self.f = f
        self.h = h
        self.kappa_a = kappa_a
        self.sqrt_gamma = sqrt_gamma
        self.src = np.asarray(src, dtype=complex)
        self.src_t0 = src_t0
        self.src_dt = src_dt

    def rhs(self, t, y):
        k = self.k
        a = y[0]
        out = np.empty_like(y)
        drive = self.sqrt_gamma * source_value(self.src, self.src_t0, self.src_dt, t)
        if self.full:
            Y = y[1 : k + 1]
            X = y[k + 1 :]
            out[0] = -self.kappa_a * a + np.dot(self.c, Y) + drive
            out[1 : k + 1] = self.mD * Y + self.e * a + self.f * X
            out[k + 1 :] = self.mid * X + self.h * Y
        else:
            X = y[1:]
            out[0] = -self.kappa_a * a + np.dot(self.c, X) + drive
            out[1:] = self.mid * X + self.e * a
        return out


def _rk4_step(sys, t, y, h):
    k1 = sys.rhs(t, y)
    k2 = sys.rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = sys.rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = sys.rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_arrow(
    y0,
    full,
    d,
    c,
    e,
    D,
    f,
    h,
    kappa_a,
    sqrt_gamma,
    src,
    src_t0,
    src_dt,
    t_out,
    adaptive=True,
    substeps=1,
    rtol=1e-9,
    atol=1e-12,
    h_init=0.0,
    store_every=0,
):
    """Integrate the arrow system and sample it at ``t_out``.

    Returns ``(a_series, snapshots, snap_index, stats)``; ``snapshots`` holds
    the atomic part of the state at every ``store_every``-th output node
    (only the last node when ``store_every`` is 0).
    """
    t_out = np.ascontiguousarray(t_out, dtype=float)
    y = np.array(y0, dtype=complex)
    k = np.shape(d)[0]
    if D is None:
        D = np.zeros(k, dtype=complex)
    sys = _System(bool(full), d, c, e, D, f, h, kappa_a, sqrt_gamma, src, src_t0, src_dt)
    n_out = t_out.shape[0]
    snap_idx = _snapshot_indices(n_out, store_every)
    snaps = np.empty((snap_idx.shape[0], y.shape[0] - 1), dtype=complex)
    a_series = np.empty(n_out, dtype=complex)
    a_series[0] = y[0]
    s = 0
    if snap_idx[0] == 0:
        snaps[0] = y[1:]
        s = 1
    n_steps = 0
    n_rejected = 0
    step = h_init if h_init > 0 else (min(0.01, t_out[1] - t_out[0]) if n_out > 1 else 0.01)
    for i in range(n_out - 1):
        t = t_out[i]
        t_end = t_out[i + 1]
        if adaptive:
            y, step, ns, nr = _dp45_interval(sys, t, t_end, y, step, rtol, atol)
            n_steps += ns
            n_rejected += nr
        else:
            hh = (t_end - t) / substeps
            for m in range(substeps):
                y = _rk4_step(sys, t + m * hh, y, hh)
            n_steps += substeps
        a_series[i + 1] = y[0]
        if s < snap_idx.shape[0] and snap_idx[s] == i + 1:
            snaps[s] = y[1:]
            s += 1
    stats = {"n_steps": n_steps, "n_rejected": n_rejected, "backend": BACKEND}
    return a_series, snaps, snap_idx, stats


def _snapshot_indices(n_out, store_every):
    if store_every and store_every > 0:
        idx = list(range(0, n_out, store_every))
        if idx[-1] != n_out - 1:
            idx.append(n_out - 1)
        return np.array(idx, dtype=np.int64)
    return np.array([n_out - 1], dtype=np.int64)


def _dp45_interval(sys, t, t_end, y, step, rtol, atol):
    n_steps = 0
    n_rej = 0
    span = t_end - t
    while t_end - t > 1e-14 * max(1.0, abs(t_end)):
        last = step >= t_end - t
        h = t_end - t if last else step
        ks = [sys.rhs(t, y)]
        for s in range(1, 7):
            acc = y.copy()
            for j, a_sj in enumerate(_A[s]):
                if a_sj != 0.0:
                    acc += (h * a_sj) * ks[j]
            ks.append(sys.rhs(t + _C[s] * h, acc))
        y_new = y.copy()
        err = np.zeros_like(y)
        for j in range(7):
            if _B[j] != 0.0:
                y_new += (h * _B[j]) * ks[j]
            if _E[j] != 0.0:
                err += (h * _E[j]) * ks[j]
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = math.sqrt(float(np.mean((np.abs(err) / scale) ** 2)))
        if en <= 1.0:
            t = t_end if last else t + h
            y = y_new
            n_steps += 1
            factor = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            if not last or factor < 1.0:
                step = h * factor
        else:
            n_rej += 1
            step = h * max(0.2, 0.9 * en ** -0.2)
            if step < 1e-12 * max(1.0, span):
                raise FloatingPointError("step size underflow in adaptive integrator")
    return y, step, n_steps, n_rej
