"""Time the compiled and numpy integration kernels on the storage problem.

Usage::

    python benchmarks/bench_kernels.py [--k-atoms 201 801 2001] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from raman_echo import kernels
from raman_echo.core import SystemParams
from raman_echo.dynamics import sample_ensemble


def storage_problem(k_atoms: int, span: float = 60.0, dt: float = 0.05):
    p = SystemParams(delta_in=0.5, omega1=10.0).with_gamma_r(1.0)
    ens = sample_ensemble(k_atoms, p.delta_in)
    n_eff = p.n_atoms * ens.mass
    kappa = p.omega1 * p.g_bar / p.big_delta0
    amp = np.sqrt(n_eff * ens.weights) * ens.couplings
    d = ens.detunings - 1j * p.t2_inv
    c = 1j * kappa * amp
    e = 1j * np.conj(kappa) * amp
    src_dt = 0.5 * dt
    ts = np.arange(0.0, span + src_dt, src_dt)
    src = np.exp(-0.5 * ((ts - 20.0) * 0.1) ** 2) * np.sqrt(0.1 / np.sqrt(np.pi))
    t_out = np.arange(0.0, span + dt, dt)
    y0 = np.zeros(1 + k_atoms, dtype=complex)
    return dict(
        y0=y0, full=False, d=d, c=c, e=e, D=None, f=0.0, h=0.0,
        kappa_a=0.5 * p.gamma1, sqrt_gamma=np.sqrt(p.gamma1),
        src=src.astype(complex), src_t0=0.0, src_dt=src_dt, t_out=t_out,
    )


def best_time(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-atoms", type=int, nargs="+", default=[201, 801, 2001])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--method", choices=("adaptive", "rk4"), default="rk4")
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        print("compiled backend unavailable; timing the numpy kernels only")
    print(f"{'K':>6} {'numpy [s]':>11} {'cython [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for k in args.k_atoms:
        prob = storage_problem(k)
        opts = dict(adaptive=args.method == "adaptive", substeps=4)
        run_py = lambda: kernels.python_backend.integrate_arrow(**prob, **opts)  # noqa: E731
        t_py = best_time(run_py, args.repeat)
        if kernels.compiled_backend is None:
            print(f"{k:>6} {t_py:>11.3f} {'-':>11} {'-':>8} {'-':>11}")
            continue
        run_cy = lambda: kernels.compiled_backend.integrate_arrow(**prob, **opts)  # noqa: E731
        t_cy = best_time(run_cy, args.repeat)
        diff = np.max(np.abs(run_py()[0] - run_cy()[0]))
        print(f"{k:>6} {t_py:>11.3f} {t_cy:>11.3f} {t_py / t_cy:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
