"""Command-line front end: ``raman-echo-sim <command> --config FILE``.

Every command writes CSV files into ``--out``. Each file starts with a
``# config_sha256=...`` comment line followed by a header row; numbers use
12 significant digits so identical inputs give byte-identical files.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, spectral
from .config import ConfigError, RunConfig, config_digest, parse_config, parse_sweep, sweep_system
from .core import (
    AdiabaticityError,
    ParameterError,
    matching_rabi_ratio,
    optical_absorption_prefactor,
    raman_absorption_coefficient,
    transmission_coefficient,
)
from .pulses import FrequencyGrid, GridError, PulseTrain, gaussian_mode

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
DIGITS = 12

FIGURES = {
    6: ("delta_in", np.linspace(0.1, 0.5, 9), ("nu_over_gamma1", "delta_in_over_gamma1", "im_s_squared")),
    7: ("delta_in", np.linspace(0.5, 5.0, 10), ("nu_over_gamma1", "delta_in_over_gamma1", "im_s_squared")),
    8: ("delta_in", np.linspace(0.1, 0.5, 9), ("nu_over_gamma1", "delta_in_over_gamma1", "z")),
    9: ("delta_in", np.linspace(0.5, 5.0, 10), ("nu_over_gamma1", "delta_in_over_gamma1", "z")),
    10: ("dw_f", np.linspace(0.01, 0.5, 50), ("dw_f_over_gamma1", "q_e")),
    11: ("dw_f", np.linspace(0.01, 0.5, 50), ("dw_f_over_gamma1", "fidelity")),
}
FIGURE_NU = np.linspace(-0.5, 0.5, 201)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if x == 0.0:
        return "0"
    return format(x, f".{DIGITS}g")


def write_csv(path: Path, header, rows, digest: str) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_sha256={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in rows)
    return path


def thread_count() -> int:
    raw = os.environ.get("RAMAN_ECHO_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def ordered_map(func, items):
    """Parallel map whose output order matches ``items`` regardless of completion order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))


def grid_for_width(dw_f: float, base: FrequencyGrid) -> FrequencyGrid:
    """Widen/refine ``base`` so a Gaussian of width ``dw_f`` fits with room to spare."""
    half = max(-base.nu_min, base.nu_max, 8.0 * dw_f)
    spacing = min(base.spacing, dw_f / 20.0)
    n = int(math.ceil(2.0 * half / spacing)) + 1
    n += 1 - n % 2
    return FrequencyGrid.symmetric(half, n)


def _sweep(args, cfg: RunConfig, default_key: str, default_values):
    if args.sweep:
        return parse_sweep(args.sweep)
    if default_key in cfg.sweeps:
        return default_key, cfg.sweeps[default_key]
    return default_key, np.asarray(default_values, dtype=float)


# commands


def cmd_spectra(cfg: RunConfig, args) -> list:
    nu = cfg.grid.nodes if args.nu_range is None else _nu_range(args.nu_range)
    header = ["nu", "re_s", "im_s", "z", "re_s2", "im_s2"]
    sweep = None
    if args.sweep or cfg.sweeps:
        key, values = _sweep(args, cfg, next(iter(cfg.sweeps), "delta_in"), [])
        sweep = (key, values)
        header = [key] + header
    points = [(None, cfg.system)] if sweep is None else [(v, sweep_system(cfg.system, sweep[0], v)) for v in sweep[1]]
    rows = []
    for value, p in points:
        s = spectral.s_function(nu, p)
        s2 = s**2
        for i in range(nu.size):
            row = [nu[i], s[i].real, s[i].imag, abs(s[i]) ** 2, s2[i].real, s2[i].imag]
            rows.append(row if value is None else [value] + row)
    return [write_csv(args.out / "spectra.csv", header, rows, args.digest)]


def _nu_range(spec: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise ConfigError(f"--nu-range {spec!r} must look like min:max:count") from None


def _efficiency_point(cfg: RunConfig, dw_f: float):
    grid = grid_for_width(dw_f, cfg.grid)
    mode = gaussian_mode(grid, dw_f)
    return spectral.efficiency_report(mode, cfg.system)


def cmd_efficiency(cfg: RunConfig, args) -> list:
    key, values = _sweep(args, cfg, "dw_f", [p.dw_f for p in cfg.pulses])
    if key != "dw_f":
        raise ConfigError(f"efficiency sweeps dw_f, not {key!r}")
    reports = ordered_map(lambda dw: _efficiency_point(cfg, dw), values)
    rows = [[dw, r.q_st, r.q_e, r.fidelity] for dw, r in zip(values, reports)]
    return [write_csv(args.out / "efficiency.csv", ["dw_f", "q_st", "q_e", "fidelity"], rows, args.digest)]


def _rounded_one_digit(x: float) -> str:
    """0.7e-3 style rounding to one significant digit."""
    exp = math.floor(math.log10(abs(x))) + 1
    mant = round(x / 10.0**exp, 1)
    return f"{mant:g}e{exp:d}"


def match_report(cfg: RunConfig) -> list:
    p = cfg.system
    rep = spectral.matching_check(p)
    rows = [
        ("gamma_r", p.gamma_r, ""),
        ("impedance_residual", rep.impedance_residual, "gamma_r = gamma1"),
        ("spectral_residual", rep.spectral_residual, "delta_in = gamma1/2"),
        ("rabi_ratio", p.rabi_ratio, ""),
    ]
    try:
        rows.append(("matching_rabi_ratio", matching_rabi_ratio(p), "gives gamma_r = gamma1"))
    except AdiabaticityError as exc:
        rows.append(("matching_rabi_ratio", float("nan"), f"unsatisfiable: {exc}"))
    except ParameterError as exc:
        rows.append(("matching_rabi_ratio", float("nan"), str(exc)))
    if cfg.cavity is not None and p.gamma1_si is not None:
        t = transmission_coefficient(cfg.cavity, p.gamma1_si)
        rows.append(("transmission", t, f"~{_rounded_one_digit(t)}"))
        rows.append(("raman_absorption_per_cm", raman_absorption_coefficient(t, cfg.cavity), "alpha_r = T/(2 chi L)"))
        pref = optical_absorption_prefactor(p.gamma1_si, cfg.cavity.fill_chi, p.rabi_ratio**2)
        rows.append(
            ("optical_absorption_prefactor_per_cm", pref, f"alpha_13 = {pref:.3g} * delta_in / Delta_in_13")
        )
    return rows


def cmd_match(cfg: RunConfig, args) -> list:
    rows = match_report(cfg)
    for name, value, note in rows:
        line = f"{name:>36s} = {_fmt(value)}"
        print(line + (f"   ({note})" if note else ""))
    return [write_csv(args.out / "match.csv", ["quantity", "value", "note"], rows, args.digest)]


def build_train(cfg: RunConfig, dw_override=None) -> PulseTrain:
    specs = cfg.pulses
    widths = [dw_override or s.dw_f for s in specs]
    grid = cfg.grid
    for dw in widths:
        if min(-grid.nu_min, grid.nu_max) < 6.0 * dw or grid.spacing > dw:
            grid = grid_for_width(max(widths), grid)
            break
    return PulseTrain([gaussian_mode(grid, dw, s.tau_k) for dw, s in zip(widths, specs)])


def _simulate_point(cfg: RunConfig, p, train):
    pipe = cfg.pipeline
    ens = dynamics.sample_ensemble(pipe.k_atoms, p.delta_in, truncation=pipe.truncation)
    return dynamics.run_pipeline(p, ens, train, t0_storage=pipe.t0, options=pipe.options)


def cmd_simulate(cfg: RunConfig, args) -> list:
    if args.sweep:
        key, values = parse_sweep(args.sweep)
        points = [(v, sweep_system(cfg.system, key, v)) for v in values]
    else:
        key, points = None, [(None, cfg.system)]
    train = build_train(cfg)
    results = ordered_map(lambda pt: _simulate_point(cfg, pt[1], train), points)
    out = []
    header = ["mode", "tau_k", "echo_peak_t", "energy_ratio", "q_st", "q_e", "fidelity", "decay_factor", "t0"]
    if key:
        header = [key] + header
    rows = []
    for i, ((value, _), res) in enumerate(zip(points, results)):
        suffix = "" if key is None else f"_{i:03d}"
        out.append(_write_trajectory(args, res.storage, f"storage{suffix}.csv"))
        out.append(_write_trajectory(args, res.retrieval, f"echo{suffix}.csv"))
        peaks = res.echo_peak_times()
        for k, rep in enumerate(res.reports):
            row = [k + 1, train.modes[k].tau_k, peaks[k], res.energy_ratios[k], rep.q_st, rep.q_e]
            row += [rep.fidelity, rep.decay_factor, res.t0_storage]
            rows.append(row if key is None else [value] + row)
        for k, rep in enumerate(res.reports):
            print(f"mode {k + 1}: q_e={_fmt(rep.q_e)} fidelity={_fmt(rep.fidelity)} echo at t={_fmt(peaks[k])}")
    out.append(write_csv(args.out / "report.csv", header, rows, args.digest))
    return out


def _write_trajectory(args, traj, name) -> Path:
    rows = [[t, a.real, a.imag, abs(b) ** 2] for t, a, b in zip(traj.t_grid, traj.a_o, traj.b_out)]
    return write_csv(args.out / name, ["t", "re_a_o", "im_a_o", "abs_b_out_sq"], rows, args.digest)


def figure_rows(cfg: RunConfig, fig_id: int, sweep=None):
    key, default_values, header = FIGURES[fig_id]
    values = default_values if sweep is None else sweep
    if key == "delta_in":
        column = "im_s2" if header[-1] == "im_s_squared" else "z"
        rows = []
        for din in values:
            p = sweep_system(cfg.system, "delta_in", din)
            s = spectral.s_function(FIGURE_NU, p)
            y = (s**2).imag if column == "im_s2" else np.abs(s) ** 2
            rows.extend([nu, din, v] for nu, v in zip(FIGURE_NU, y))
        return header, rows
    reports = ordered_map(lambda dw: _efficiency_point(cfg, dw), values)
    attr = header[-1]
    return header, [[dw, getattr(r, attr)] for dw, r in zip(values, reports)]


def cmd_figure(cfg: RunConfig, args) -> list:
    sweep = None
    if args.sweep:
        key, sweep = parse_sweep(args.sweep)
        if key != FIGURES[args.fig][0]:
            raise ConfigError(f"figure {args.fig} sweeps {FIGURES[args.fig][0]}, not {key!r}")
    header, rows = figure_rows(cfg, args.fig, sweep)
    return [write_csv(args.out / f"fig{args.fig}.csv", header, rows, args.digest)]


COMMANDS = {
    "spectra": cmd_spectra,
    "efficiency": cmd_efficiency,
    "match": cmd_match,
    "simulate": cmd_simulate,
    "figure": cmd_figure,
}


def _fig_id(raw: str) -> int:
    try:
        fig = int(raw)
    except ValueError:
        fig = None
    if fig not in FIGURES:
        valid = ", ".join(str(k) for k in FIGURES)
        raise argparse.ArgumentTypeError(f"unknown figure id {raw!r}; valid ids: {valid}")
    return fig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raman-echo-sim", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="run configuration file (defaults: matched system)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--fig", type=_fig_id, help="figure id for the 'figure' command (6-11)")
    parser.add_argument("--sweep", help="name=start:stop:count or name=v1,v2,...")
    parser.add_argument("--nu-range", help="spectra only: min:max:count (write --nu-range=-1:1:201 for negative bounds)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "figure" and args.fig is None:
        parser.error("the 'figure' command needs --fig (valid ids: " + ", ".join(map(str, FIGURES)) + ")")
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text)
        args.digest = config_digest(text, args.command, str(args.fig), args.sweep or "", args.nu_range or "")
        args.out.mkdir(parents=True, exist_ok=True)
        written = COMMANDS[args.command](cfg, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ParameterError, GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dynamics.IntegrationError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
