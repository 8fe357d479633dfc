"""Run configuration: schema, validation, canonical JSON, initial data.

A config is a JSON object with sections ``grid``, ``model``, ``solver``,
``initial``, ``outputs``, ``experiment`` and a top-level ``seed``.  Unknown
keys are rejected; missing optional keys take the defaults below, and
:func:`dump_config` writes the fully populated canonical form.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .integrator import SCHEMES, SolverConfig, plane_wave
from .model import ModelParams
from .spectral import Cutoff, SpectralField, grid_points

PRESETS = ("bump",)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted location of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


DEFAULTS: dict[str, Any] = {
    "grid": {"num_modes": 64},
    "model": {"sigma": 1.5, "cutoff": None, "oversample": 2},
    "solver": {
        "dt": 1e-3,
        "t_final": 1.0,
        "scheme": "if_rk4",
        "snapshot_every": 10,
        "invariant_every": 10,
        "blowup_threshold": 1e8,
    },
    "initial": {"kind": "smooth_preset", "name": "bump", "amplitude": 1.0},
    "outputs": {"directory": "runs", "snapshots": True},
    "experiment": {
        "cutoffs": [8, 16, 32],
        "reference": None,
        "sigmas": [1.0, 1.5, 2.0],
        "amplitudes": [0.0, 0.05, 0.1, 1.0],
        "plane_wave_k": 1,
        "s_prime": 0.0,
        "deltas": [1e-2, 1e-3, 1e-4],
        "r": 2.0,
    },
    "seed": 0,
}

_INITIAL_KEYS = {
    "plane_wave": {"kind", "amplitude", "k"},
    "mode_list": {"kind", "modes"},
    "smooth_preset": {"kind", "name", "amplitude"},
    "file": {"kind", "path", "sha256"},
}


# --- initial data -------------------------------------------------------------


def bump(num_modes: int, amplitude: complex = 1.0) -> SpectralField:
    """``A (1 + 0.3 cos x) exp(i sin x)`` truncated to ``|k| <= N``."""
    m = 8 * (2 * max(num_modes, 32) + 1)
    x = grid_points(m)
    return SpectralField.from_physical(amplitude * (1 + 0.3 * np.cos(x)) * np.exp(1j * np.sin(x)), num_modes)


def preset(name: str, num_modes: int, amplitude: complex = 1.0) -> SpectralField:
    if name == "bump":
        return bump(num_modes, amplitude)
    raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    data: dict

    def resolve(self, num_modes: int, base_dir: Path | None = None) -> SpectralField:
        d = self.data
        if self.kind == "plane_wave":
            return plane_wave(num_modes, _complex(d["amplitude"]), d["k"])
        if self.kind == "mode_list":
            modes: dict[int, complex] = {}
            for k, v in d["modes"]:
                modes[k] = modes.get(k, 0) + _complex(v)
            return SpectralField.from_modes(num_modes, modes)
        if self.kind == "smooth_preset":
            return preset(d["name"], num_modes, _complex(d["amplitude"]))
        from .persistence import load_field

        path = Path(d["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        f = load_field(path, sha256=d.get("sha256"))
        return f.resample(num_modes)


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    num_modes: int
    model: ModelParams
    solver: SolverConfig
    initial: InitialSpec
    outputs: dict
    experiment: dict
    seed: int
    raw: dict
    base_dir: Path | None = None

    def initial_field(self) -> SpectralField:
        return self.initial.resolve(self.num_modes, self.base_dir)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()[:12]


def _merge(defaults: dict, given: dict, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(path, "expected an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(given))
    return out


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _need(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(path, msg)


def _check_complex(v, path: str) -> None:
    ok = _is_num(v) or (isinstance(v, list) and len(v) == 2 and all(_is_num(x) for x in v))
    _need(ok, path, "expected a number or [re, im]")


def _normalize_complex(v) -> list[float]:
    c = _complex(v)
    return [float(c.real), float(c.imag)]


def validate(raw: dict, base_dir: Path | None = None) -> RunConfig:
    """Fill defaults, check every field and cross-field constraint, build a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    cfg: dict[str, Any] = {}
    for section in ("grid", "model", "solver", "outputs", "experiment"):
        cfg[section] = _merge(DEFAULTS[section], raw.get(section, {}), section)
    cfg["seed"] = raw.get("seed", DEFAULTS["seed"])
    _need(_is_int(cfg["seed"]), "seed", "expected an integer")

    n = cfg["grid"]["num_modes"]
    _need(_is_int(n) and n >= 1, "grid.num_modes", "expected a positive integer")

    m = cfg["model"]
    _need(_is_num(m["sigma"]) and m["sigma"] >= 1, "model.sigma", "expected a number >= 1")
    m["sigma"] = float(m["sigma"])
    _need(m["cutoff"] is None or (_is_int(m["cutoff"]) and m["cutoff"] >= 0),
          "model.cutoff", "expected null or a nonnegative integer")
    if m["cutoff"] is not None and m["cutoff"] > n:
        raise ConfigError("model.cutoff", f"cutoff {m['cutoff']} exceeds grid.num_modes {n}")
    _need(_is_int(m["oversample"]) and 1 <= m["oversample"] <= 8, "model.oversample", "expected an integer in 1..8")

    s = cfg["solver"]
    for key in ("dt", "t_final", "blowup_threshold"):
        _need(_is_num(s[key]) and s[key] > 0, f"solver.{key}", "expected a positive number")
        s[key] = float(s[key])
    for key in ("snapshot_every", "invariant_every"):
        _need(_is_int(s[key]) and s[key] >= 1, f"solver.{key}", "expected a positive integer")
    _need(s["scheme"] in SCHEMES, "solver.scheme", f"expected one of {list(SCHEMES)}")
    if s["dt"] > s["t_final"]:
        raise ConfigError("solver.dt", f"dt {s['dt']} exceeds solver.t_final {s['t_final']}")
    try:
        solver = SolverConfig(**s)
    except ValueError as e:
        raise ConfigError("solver", str(e)) from None

    init_raw = raw.get("initial", DEFAULTS["initial"])
    _need(isinstance(init_raw, dict), "initial", "expected an object")
    if "kind" not in init_raw:
        init_raw = {**DEFAULTS["initial"], **init_raw}
    kind = init_raw.get("kind")
    _need(kind in _INITIAL_KEYS, "initial.kind", f"expected one of {sorted(_INITIAL_KEYS)}")
    extra = sorted(set(init_raw) - _INITIAL_KEYS[kind])
    if extra:
        raise ConfigError(f"initial.{extra[0]}", f"unknown key for kind {kind!r}")
    init = dict(init_raw)
    if kind == "plane_wave":
        _check_complex(init.get("amplitude"), "initial.amplitude")
        init["amplitude"] = _normalize_complex(init["amplitude"])
        _need(_is_int(init.get("k")), "initial.k", "expected an integer")
        _need(abs(init["k"]) <= n, "initial.k", f"wavenumber exceeds grid.num_modes {n}")
    elif kind == "mode_list":
        modes = init.get("modes")
        _need(isinstance(modes, list) and modes, "initial.modes", "expected a non-empty list of [k, value]")
        norm = []
        for i, entry in enumerate(modes):
            p = f"initial.modes[{i}]"
            _need(isinstance(entry, list) and len(entry) == 2 and _is_int(entry[0]), p, "expected [k, value]")
            _need(abs(entry[0]) <= n, p, f"wavenumber exceeds grid.num_modes {n}")
            _check_complex(entry[1], p)
            norm.append([entry[0], _normalize_complex(entry[1])])
        init["modes"] = norm
    elif kind == "smooth_preset":
        init.setdefault("amplitude", 1.0)
        _need(init.get("name") in PRESETS, "initial.name", f"expected one of {list(PRESETS)}")
        _check_complex(init["amplitude"], "initial.amplitude")
        init["amplitude"] = _normalize_complex(init["amplitude"])
    else:
        _need(isinstance(init.get("path"), str), "initial.path", "expected a file path")
        _need(isinstance(init.get("sha256"), str), "initial.sha256", "expected a hex digest")
    cfg["initial"] = init

    o = cfg["outputs"]
    _need(isinstance(o["directory"], str), "outputs.directory", "expected a string")
    _need(isinstance(o["snapshots"], bool), "outputs.snapshots", "expected true/false")

    e = cfg["experiment"]
    _need(isinstance(e["cutoffs"], list) and all(_is_int(k) and k >= 1 for k in e["cutoffs"]),
          "experiment.cutoffs", "expected a list of positive integers")
    _need(e["reference"] is None or _is_int(e["reference"]), "experiment.reference", "expected null or an integer")
    ref = n if e["reference"] is None else e["reference"]
    if e["cutoffs"] and (max(e["cutoffs"]) >= ref or ref > n):
        raise ConfigError("experiment.cutoffs", f"cutoffs must lie below the reference {ref} <= grid.num_modes {n}")
    for key in ("sigmas", "amplitudes", "deltas"):
        _need(isinstance(e[key], list) and all(_is_num(v) for v in e[key]),
              f"experiment.{key}", "expected a list of numbers")
        e[key] = [float(v) for v in e[key]]
    _need(all(v >= 1 for v in e["sigmas"]), "experiment.sigmas", "every sigma must be >= 1")
    _need(_is_int(e["plane_wave_k"]) and abs(e["plane_wave_k"]) <= n, "experiment.plane_wave_k",
          "expected an integer within the grid")
    _need(_is_num(e["s_prime"]) and 0 <= e["s_prime"] < 2, "experiment.s_prime", "expected a number in [0, 2)")
    _need(_is_num(e["r"]) and e["r"] >= 1, "experiment.r", "expected a number >= 1")
    e["s_prime"], e["r"] = float(e["s_prime"]), float(e["r"])

    model = ModelParams(m["sigma"], Cutoff(m["cutoff"]), m["oversample"])
    return RunConfig(n, model, solver, InitialSpec(kind, init), o, e, cfg["seed"], cfg, base_dir)


# --- (de)serialization --------------------------------------------------------


def canonical_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_config(cfg: RunConfig) -> str:
    return canonical_json(cfg.raw)


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return validate(raw, base_dir)


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    """Read, apply ``key=value`` dotted overrides, and validate a JSON config."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError("", f"cannot read {path}: {e.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    for item in overrides or []:
        apply_override(raw, item)
    return validate(raw, path.parent)


def apply_override(raw: dict, item: str) -> None:
    key, sep, value = item.partition("=")
    if not sep or not key:
        raise ConfigError("", f"override {item!r} is not of the form key=value")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    parts = key.split(".")
    node = raw
    for i, part in enumerate(parts[:-1]):
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(".".join(parts[: i + 1]), "cannot override inside a non-object")
        node = nxt
    node[parts[-1]] = parsed
