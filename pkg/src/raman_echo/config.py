"""Run configuration: ``[section]`` headers followed by ``key = value`` lines.

``#`` and ``;`` start comments. ``[pulse]`` may repeat, one section per
temporal mode. Every error names the offending line.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import CavityGeometry, ParameterError, SystemParams
from .dynamics import DEFAULT_K_ATOMS, PipelineOptions
from .pulses import FrequencyGrid, GridError

_SECTION = re.compile(r"^\[\s*([A-Za-z_][\w.]*)\s*\]$")
_ENTRY = re.compile(r"^([A-Za-z_]\w*)\s*=\s*(.*)$")

SYSTEM_KEYS = {
    "delta_in": float,
    "gamma_r": float,
    "t2_inv": float,
    "big_delta0": float,
    "omega1": float,
    "rabi_ratio": float,
    "n_atoms": float,
    "g_bar": float,
    "gamma1": float,
    "gamma1_si": float,
    "allow_nonadiabatic": "bool",
}
GRID_KEYS = {"nu_min": float, "nu_max": float, "n_points": int}
PULSE_KEYS = {"shape": str, "dw_f": float, "tau_k": float}
PIPELINE_KEYS = {
    "t0": float,
    "k_atoms": int,
    "rtol": float,
    "dt": float,
    "settle": float,
    "method": str,
    "substeps": int,
    "truncation": float,
}
CAVITY_KEYS = {"length_cm": float, "fill_chi": float}
SCHEMA = {
    "system": SYSTEM_KEYS,
    "grid": GRID_KEYS,
    "pulse": PULSE_KEYS,
    "pipeline": PIPELINE_KEYS,
    "cavity": CAVITY_KEYS,
    "sweep": None,
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class PulseSpec:
    shape: str = "gaussian"
    dw_f: float = 0.1
    tau_k: float = 0.0


@dataclass(frozen=True)
class PipelineSpec:
    t0: Optional[float] = None
    k_atoms: int = DEFAULT_K_ATOMS
    truncation: float = 50.0
    options: PipelineOptions = field(default_factory=PipelineOptions)


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    grid: FrequencyGrid
    pulses: tuple
    pipeline: PipelineSpec
    cavity: Optional[CavityGeometry] = None
    sweeps: dict = field(default_factory=dict)
    digest: str = ""


@dataclass
class _Section:
    name: str
    line: int
    entries: dict = field(default_factory=dict)  # key -> (raw, line)


def _convert(kind, raw: str, line: int, key: str):
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        return kind(raw)
    except ValueError:
        name = "boolean" if kind == "bool" else kind.__name__
        raise ConfigError(f"{key} = {raw!r} is not a valid {name}", line) from None


def _read_sections(text: str) -> list:
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"\s[#;]|^[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            name = m.group(1).lower()
            if name not in SCHEMA:
                raise ConfigError(f"unknown section [{name}]; expected one of {sorted(SCHEMA)}", lineno)
            if name != "pulse" and any(s.name == name for s in sections):
                raise ConfigError(f"section [{name}] appears twice", lineno)
            current = _Section(name, lineno)
            sections.append(current)
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}; expected 'key = value'", lineno)
        if current is None:
            raise ConfigError("entry before any [section] header", lineno)
        key, value = m.group(1).lower(), m.group(2).strip()
        allowed = SCHEMA[current.name]
        if allowed is not None and key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{current.name}]", lineno)
        if key in current.entries:
            raise ConfigError(f"duplicate key {key!r} in [{current.name}]", lineno)
        current.entries[key] = (value, lineno)
    return sections


def _values(section: _Section, schema: dict) -> dict:
    return {k: _convert(schema[k], raw, line, k) for k, (raw, line) in section.entries.items()}


def _build_system(vals: dict) -> SystemParams:
    """SystemParams from config keys; ``gamma_r`` and ``rabi_ratio`` fix g_bar and omega1."""
    vals = dict(vals)
    if "delta_in" not in vals:
        raise ParameterError("delta_in is required")
    if "gamma_r" in vals and "g_bar" in vals:
        raise ParameterError("give either gamma_r or g_bar, not both")
    if "rabi_ratio" in vals and "omega1" in vals:
        raise ParameterError("give either rabi_ratio or omega1, not both")
    rabi = vals.pop("rabi_ratio", 0.1)
    if "omega1" not in vals:
        vals["omega1"] = rabi * vals.get("big_delta0", 100.0)
    gamma_r = vals.pop("gamma_r", None)
    p = SystemParams(**vals)
    if gamma_r is not None:
        if p.rabi_ratio == 0:
            raise ParameterError("gamma_r > 0 needs a non-zero omega1")
        p = p.with_gamma_r(gamma_r)
    return p


SWEEPABLE = ("gamma_r", "delta_in", "t2_inv", "rabi_ratio", "big_delta0", "n_atoms")


def sweep_system(p: SystemParams, key: str, value: float) -> SystemParams:
    """Change one system quantity while holding gamma_r fixed (unless gamma_r is the one swept)."""
    if key == "gamma_r":
        return p.with_gamma_r(value)
    if key == "rabi_ratio":
        changed = replace(p, omega1=value * p.big_delta0)
    elif key in ("delta_in", "t2_inv", "big_delta0", "n_atoms"):
        changed = replace(p, **{key: value})
    else:
        raise ConfigError(f"cannot sweep {key!r}; choose from {', '.join(SWEEPABLE)}")
    return changed.with_gamma_r(p.gamma_r) if p.gamma_r > 0 else changed


def _locate(message: str, section: Optional[_Section]) -> Optional[int]:
    if section is None:
        return None
    for key, (_, line) in section.entries.items():
        if key in message:
            return line
    return section.line


def config_digest(text: str, *extra: str) -> str:
    h = hashlib.sha256(text.encode())
    for item in extra:
        h.update(b"\0" + item.encode())
    return h.hexdigest()[:16]


def parse_sweep(spec: str) -> tuple:
    """``name=start:stop:count`` (inclusive linspace) or ``name=v1,v2,...``."""
    if "=" not in spec:
        raise ConfigError(f"sweep {spec!r} must look like name=start:stop:count or name=v1,v2")
    name, rhs = (s.strip() for s in spec.split("=", 1))
    try:
        if ":" in rhs:
            start, stop, count = rhs.split(":")
            n = int(count)
            if n < 1:
                raise ValueError
            values = np.linspace(float(start), float(stop), n)
        else:
            values = np.array([float(v) for v in rhs.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {rhs!r}") from None
    if values.size == 0:
        raise ConfigError(f"sweep {name!r} has no values")
    return name, values


def parse_config(text: str) -> RunConfig:
    sections = _read_sections(text)
    by_name = {s.name: s for s in sections if s.name != "pulse"}

    sys_sec = by_name.get("system")
    sys_vals = _values(sys_sec, SYSTEM_KEYS) if sys_sec else {}
    if "delta_in" not in sys_vals and "gamma_r" not in sys_vals and "g_bar" not in sys_vals:
        sys_vals = {"delta_in": 0.5, "gamma_r": 1.0, **sys_vals}
    try:
        system = _build_system(sys_vals)
    except ParameterError as exc:
        raise ConfigError(str(exc), _locate(str(exc), sys_sec)) from None

    grid_sec = by_name.get("grid")
    grid_vals = _values(grid_sec, GRID_KEYS) if grid_sec else {}
    try:
        grid = FrequencyGrid(**grid_vals)
    except (GridError, ValueError) as exc:
        raise ConfigError(str(exc), _locate(str(exc), grid_sec)) from None

    pulses = []
    for sec in (s for s in sections if s.name == "pulse"):
        vals = _values(sec, PULSE_KEYS)
        spec = PulseSpec(**vals)
        if spec.shape != "gaussian":
            raise ConfigError(f"unsupported pulse shape {spec.shape!r}", sec.entries["shape"][1])
        if not spec.dw_f > 0:
            raise ConfigError("dw_f must be positive", sec.entries.get("dw_f", (None, sec.line))[1])
        pulses.append(spec)
    if not pulses:
        pulses.append(PulseSpec())

    pipe_sec = by_name.get("pipeline")
    pv = _values(pipe_sec, PIPELINE_KEYS) if pipe_sec else {}
    k_atoms = pv.pop("k_atoms", DEFAULT_K_ATOMS)
    if k_atoms < 3 or k_atoms % 2 == 0:
        raise ConfigError("k_atoms must be odd and >= 3", pipe_sec.entries["k_atoms"][1])
    t0 = pv.pop("t0", None)
    truncation = pv.pop("truncation", 50.0)
    if pv.get("method", "adaptive") not in ("adaptive", "rk4"):
        raise ConfigError("method must be 'adaptive' or 'rk4'", pipe_sec.entries["method"][1])
    pipeline = PipelineSpec(t0=t0, k_atoms=k_atoms, truncation=truncation, options=PipelineOptions(**pv))

    cavity = None
    cav_sec = by_name.get("cavity")
    if cav_sec:
        cv = _values(cav_sec, CAVITY_KEYS)
        if "length_cm" not in cv:
            raise ConfigError("[cavity] needs length_cm", cav_sec.line)
        try:
            cavity = CavityGeometry(length_L=cv["length_cm"], fill_chi=cv.get("fill_chi", 1.0))
        except ParameterError as exc:
            raise ConfigError(str(exc), _locate(str(exc), cav_sec)) from None

    sweeps = {}
    sw_sec = by_name.get("sweep")
    if sw_sec:
        for key, (raw, line) in sw_sec.entries.items():
            try:
                sweeps[key] = parse_sweep(f"{key}={raw}")[1]
            except ConfigError as exc:
                raise ConfigError(str(exc), line) from None

    return RunConfig(
        system=system,
        grid=grid,
        pulses=tuple(pulses),
        pipeline=pipeline,
        cavity=cavity,
        sweeps=sweeps,
        digest=config_digest(text),
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
