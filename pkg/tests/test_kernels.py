import numpy as np
import pytest

from raman_echo import kernels
from raman_echo import _kernels_py

BACKENDS = [kernels.python_backend]
if kernels.compiled_backend is not None:
    BACKENDS.append(kernels.compiled_backend)


def toy_system(k=7, full=False, seed=1):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=k) - 0.01j
    c = 0.3j * rng.normal(size=k)
    e = 0.3j * rng.normal(size=k)
    D = np.full(k, 20.0 + 0j) if full else None
    t_src = np.linspace(-10.0, 10.0, 401)
    src = np.exp(-(t_src**2) / 8.0) * np.exp(0.2j * t_src)
    return dict(d=d, c=c, e=e, D=D, src=src, src_t0=t_src[0], src_dt=t_src[1] - t_src[0], full=full)


def run(backend, sysd, t_out, **kw):
    k = sysd["d"].size
    n = 1 + (2 * k if sysd["full"] else k)
    return backend.integrate_arrow(
        np.zeros(n, dtype=complex),
        sysd["full"],
        sysd["d"],
        sysd["c"],
        sysd["e"],
        sysd["D"],
        2.0j if sysd["full"] else 0j,
        2.0j if sysd["full"] else 0j,
        0.5 + 0.1j,
        1.0,
        sysd["src"],
        sysd["src_t0"],
        sysd["src_dt"],
        t_out,
        **kw,
    )


def test_backend_selection():
    assert kernels.backend.BACKEND in ("python", "cython")
    assert kernels.BACKEND == kernels.backend.BACKEND


@pytest.mark.parametrize("full", [False, True])
def test_backends_agree(full):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    sysd = toy_system(full=full)
    t = np.linspace(-12.0, 20.0, 161)
    a_py, s_py, i_py, st_py = run(BACKENDS[0], sysd, t, store_every=40)
    a_cy, s_cy, i_cy, st_cy = run(BACKENDS[1], sysd, t, store_every=40)
    assert np.array_equal(i_py, i_cy)
    assert np.max(np.abs(a_py - a_cy)) < 1e-12
    assert np.max(np.abs(s_py - s_cy)) < 1e-12
    assert st_py["n_steps"] == st_cy["n_steps"]


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_fixed_step_is_fourth_order(backend):
    sysd = toy_system()
    t_ref = np.linspace(-12.0, 20.0, 65)
    ref = run(backend, sysd, t_ref, adaptive=False, substeps=64)[0]
    errs = []
    for sub in (2, 4):
        a = run(backend, sysd, t_ref, adaptive=False, substeps=sub)[0]
        errs.append(np.max(np.abs(a - ref)))
    assert errs[0] / errs[1] >= 8.0


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
def test_free_cavity_decay(backend):
    t = np.linspace(0.0, 10.0, 21)
    a, snaps, idx, stats = backend.integrate_arrow(
        np.array([1.0 + 0j, 0j]), False, np.zeros(1), np.zeros(1), np.zeros(1), None, 0j, 0j,
        0.5, 1.0, np.zeros(0, dtype=complex), 0.0, 1.0, t, rtol=1e-10, atol=1e-14,
    )
    assert np.max(np.abs(a - np.exp(-0.5 * t))) < 1e-9
    assert stats["n_rejected"] >= 0 and list(idx) == [20]


def test_source_interpolation_is_exact_for_cubics():
    t = np.linspace(0.0, 3.0, 13)
    poly = lambda x: 1 - 2 * x + 0.5 * x**2 - 0.1j * x**3  # noqa: E731
    vals = poly(t)
    for x in (0.1, 1.37, 2.99):
        assert _kernels_py.source_value(vals, 0.0, 0.25, x) == pytest.approx(poly(x), abs=1e-12)
    assert _kernels_py.source_value(vals, 0.0, 0.25, -0.1) == 0
    assert _kernels_py.source_value(vals, 0.0, 0.25, 3.1) == 0
