# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels; same algorithm and API as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt, fabs

cnp.import_array()

BACKEND = "cython"

cdef double[7] C_ = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
cdef double[7][6] A_
cdef double[7] B_ = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0]
cdef double[7] E_ = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40]


cdef void _init_tableau():
    cdef int i, j
    for i in range(7):
        for j in range(6):
            A_[i][j] = 0.0
    A_[1][0] = 1.0 / 5
    A_[2][0] = 3.0 / 40
    A_[2][1] = 9.0 / 40
    A_[3][0] = 44.0 / 45
    A_[3][1] = -56.0 / 15
    A_[3][2] = 32.0 / 9
    A_[4][0] = 19372.0 / 6561
    A_[4][1] = -25360.0 / 2187
    A_[4][2] = 64448.0 / 6561
    A_[4][3] = -212.0 / 729
    A_[5][0] = 9017.0 / 3168
    A_[5][1] = -355.0 / 33
    A_[5][2] = 46732.0 / 5247
    A_[5][3] = 49.0 / 176
    A_[5][4] = -5103.0 / 18656
    A_[6][0] = 35.0 / 384
    A_[6][1] = 0.0
    A_[6][2] = 500.0 / 1113
    A_[6][3] = 125.0 / 192
    A_[6][4] = -2187.0 / 6784
    A_[6][5] = 11.0 / 84


_init_tableau()


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef class _Arrow:
    cdef bint full
    cdef Py_ssize_t k, n
    cdef double complex[::1] mid, c, e, mD, src
    cdef double complex f, h, kappa_a
    cdef double sqrt_gamma, src_t0, src_dt

    def __init__(self, bint full, d, c, e, D, f, h, kappa_a, double sqrt_gamma, src,
                 double src_t0, double src_dt):
        self.full = full
        self.k = len(d)
        self.n = 1 + (2 * self.k if full else self.k)
        self.mid = np.ascontiguousarray(-1j * np.asarray(d, dtype=complex))
        self.c = np.ascontiguousarray(c, dtype=complex)
        self.e = np.ascontiguousarray(e, dtype=complex)
        self.mD = np.ascontiguousarray(-1j * np.asarray(D, dtype=complex))
        self.f = f
        self.h = h
        self.kappa_a = kappa_a
        self.sqrt_gamma = sqrt_gamma
        self.src = np.ascontiguousarray(src, dtype=complex)
        self.src_t0 = src_t0
        self.src_dt = src_dt

    cdef double complex source(self, double t) nogil:
        cdef Py_ssize_t n = self.src.shape[0]
        cdef double x, u, frac
        cdef Py_ssize_t i, j0
        if n == 0:
            return 0.0
        x = (t - self.src_t0) / self.src_dt
        if x < 0.0 or x > n - 1:
            return 0.0
        if n == 1:
            return self.src[0]
        if n < 4:
            i = <Py_ssize_t> x
            if i > n - 2:
                i = n - 2
            frac = x - i
            return self.src[i] * (1.0 - frac) + self.src[i + 1] * frac
        i = <Py_ssize_t> floor(x)
        j0 = i - 1
        if j0 < 0:
            j0 = 0
        if j0 > n - 4:
            j0 = n - 4
        u = x - j0
        return (-(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0 * self.src[j0]
                + u * (u - 2.0) * (u - 3.0) / 2.0 * self.src[j0 + 1]
                - u * (u - 1.0) * (u - 3.0) / 2.0 * self.src[j0 + 2]
                + u * (u - 1.0) * (u - 2.0) / 6.0 * self.src[j0 + 3])

    cdef void rhs(self, double t, double complex[::1] y, double complex[::1] out) nogil:
        cdef Py_ssize_t j, k = self.k
        cdef double complex a = y[0]
        cdef double complex acc = 0.0
        cdef double complex drive = self.sqrt_gamma * self.source(t)
        if self.full:
            for j in range(k):
                acc = acc + self.c[j] * y[1 + j]
                out[1 + j] = self.mD[j] * y[1 + j] + self.e[j] * a + self.f * y[1 + k + j]
                out[1 + k + j] = self.mid[j] * y[1 + k + j] + self.h * y[1 + j]
        else:
            for j in range(k):
                acc = acc + self.c[j] * y[1 + j]
                out[1 + j] = self.mid[j] * y[1 + j] + self.e[j] * a
        out[0] = -self.kappa_a * a + acc + drive


cdef void _rk4_step(_Arrow s, double t, double complex[::1] y, double hh,
                    double complex[:, ::1] ks, double complex[::1] tmp) nogil:
    cdef Py_ssize_t i, n = y.shape[0]
    s.rhs(t, y, ks[0])
    for i in range(n):
        tmp[i] = y[i] + 0.5 * hh * ks[0, i]
    s.rhs(t + 0.5 * hh, tmp, ks[1])
    for i in range(n):
        tmp[i] = y[i] + 0.5 * hh * ks[1, i]
    s.rhs(t + 0.5 * hh, tmp, ks[2])
    for i in range(n):
        tmp[i] = y[i] + hh * ks[2, i]
    s.rhs(t + hh, tmp, ks[3])
    for i in range(n):
        y[i] = y[i] + (hh / 6.0) * (ks[0, i] + 2.0 * ks[1, i] + 2.0 * ks[2, i] + ks[3, i])


def _snapshot_indices(Py_ssize_t n_out, store_every):
    if store_every and store_every > 0:
        idx = list(range(0, n_out, store_every))
        if idx[len(idx) - 1] != n_out - 1:
            idx.append(n_out - 1)
        return np.array(idx, dtype=np.int64)
    return np.array([n_out - 1], dtype=np.int64)


def integrate_arrow(y0, full, d, c, e, D, f, h, kappa_a, double sqrt_gamma, src,
                    double src_t0, double src_dt, t_out, adaptive=True, int substeps=1,
                    double rtol=1e-9, double atol=1e-12, double h_init=0.0, store_every=0):
    """See ``_kernels_py.integrate_arrow``."""
    cdef double[::1] tt = np.ascontiguousarray(t_out, dtype=float)
    cdef Py_ssize_t k = len(d)
    if D is None:
        D = np.zeros(k, dtype=complex)
    cdef _Arrow s = _Arrow(bool(full), d, c, e, D, complex(f), complex(h), complex(kappa_a),
                           sqrt_gamma, src, src_t0, src_dt)
    cdef Py_ssize_t n = s.n, n_out = tt.shape[0]
    cdef double complex[::1] y = np.array(y0, dtype=complex)
    if y.shape[0] != n:
        raise ValueError("state size does not match the model")
    snap_idx_arr = _snapshot_indices(n_out, store_every)
    cdef long long[::1] snap_idx = snap_idx_arr
    snaps_arr = np.empty((snap_idx.shape[0], n - 1), dtype=complex)
    cdef double complex[:, ::1] snaps = snaps_arr
    a_arr = np.empty(n_out, dtype=complex)
    cdef double complex[::1] a_series = a_arr
    cdef double complex[:, ::1] ks = np.empty((7, n), dtype=complex)
    cdef double complex[::1] tmp = np.empty(n, dtype=complex)
    cdef double complex[::1] y_new = np.empty(n, dtype=complex)
    cdef Py_ssize_t i, j, m, st, q, sidx = 0
    cdef long n_steps = 0, n_rej = 0
    cdef double t, t_end, hh, step, span, en, factor, sc, ay, an
    cdef double complex errc
    cdef bint last, do_adapt = bool(adaptive)

    a_series[0] = y[0]
    if snap_idx[0] == 0:
        for j in range(n - 1):
            snaps[0, j] = y[1 + j]
        sidx = 1
    if h_init > 0:
        step = h_init
    elif n_out > 1:
        step = min(0.01, tt[1] - tt[0])
    else:
        step = 0.01

    with nogil:
        for i in range(n_out - 1):
            t = tt[i]
            t_end = tt[i + 1]
            span = t_end - t
            if not do_adapt:
                hh = span / substeps
                for m in range(substeps):
                    _rk4_step(s, t + m * hh, y, hh, ks, tmp)
                n_steps += substeps
            else:
                while t_end - t > 1e-14 * (fabs(t_end) if fabs(t_end) > 1.0 else 1.0):
                    last = step >= t_end - t
                    hh = t_end - t if last else step
                    s.rhs(t, y, ks[0])
                    for st in range(1, 7):
                        for j in range(n):
                            tmp[j] = y[j]
                            for q in range(st):
                                if A_[st][q] != 0.0:
                                    tmp[j] = tmp[j] + (hh * A_[st][q]) * ks[q, j]
                        s.rhs(t + C_[st] * hh, tmp, ks[st])
                    en = 0.0
                    for j in range(n):
                        y_new[j] = y[j]
                        errc = 0.0
                        for q in range(7):
                            if B_[q] != 0.0:
                                y_new[j] = y_new[j] + (hh * B_[q]) * ks[q, j]
                            if E_[q] != 0.0:
                                errc = errc + (hh * E_[q]) * ks[q, j]
                        ay = sqrt(cabs2(y[j]))
                        an = sqrt(cabs2(y_new[j]))
                        sc = atol + rtol * (ay if ay > an else an)
                        en += cabs2(errc) / (sc * sc)
                    en = sqrt(en / n)
                    if en <= 1.0:
                        t = t_end if last else t + hh
                        for j in range(n):
                            y[j] = y_new[j]
                        n_steps += 1
                        if en == 0.0:
                            factor = 5.0
                        else:
                            factor = 0.9 * en ** -0.2
                            if factor > 5.0:
                                factor = 5.0
                            if factor < 0.2:
                                factor = 0.2
                        if (not last) or factor < 1.0:
                            step = hh * factor
                    else:
                        n_rej += 1
                        factor = 0.9 * en ** -0.2
                        if factor < 0.2:
                            factor = 0.2
                        step = hh * factor
                        if step < 1e-12 * (span if span > 1.0 else 1.0):
                            with gil:
                                raise FloatingPointError("step size underflow in adaptive integrator")
            a_series[i + 1] = y[0]
            if sidx < snap_idx.shape[0] and snap_idx[sidx] == i + 1:
                for j in range(n - 1):
                    snaps[sidx, j] = y[1 + j]
                sidx += 1

    stats = {"n_steps": int(n_steps), "n_rejected": int(n_rej), "backend": BACKEND}
    return a_arr, snaps_arr, snap_idx_arr, stats
