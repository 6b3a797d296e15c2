"""Run configuration: a TOML file with a fixed set of sections and keys.

Unknown sections or keys are rejected so that a typo cannot silently
fall back to a default during a long run.  Relative paths resolve
against the directory holding the config file.

Example::

    [model]
    kind = "discrete"
    levels_per_dim = 16
    d = 2

    [grid]
    e_min = -0.5
    e_max = 14.5
    n_bins = 15

    [run]
    seeds = [1, 2, 3, 4]
    output = "runs/discrete"
"""

from __future__ import annotations

import copy
import importlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from .errors import ConfigError, WlTemperError

__all__ = ["RunConfig", "load_config", "parse_config", "build_model", "PREDICTORS"]


def _linear(p, x):
    return p[0] * x


def _affine(p, x):
    return p[0] + p[1] * x


def _polynomial(p, x):
    out = np.zeros_like(x)
    for c in reversed(p):
        out = out * x + c
    return out


def _power(p, x):
    return p[0] * np.power(x, p[1])


PREDICTORS = {
    "linear": _linear,
    "affine": _affine,
    "polynomial": _polynomial,
    "power": _power,
}

MODEL_KEYS = {
    "gaussian": {"kind", "d", "width", "box_halfwidth", "offset"},
    "discrete": {"kind", "levels_per_dim", "d", "table"},
    "curvefit": {"kind", "data", "predictor", "n_shape_params", "shape_bounds",
                 "shape_names", "sigma_bounds"},
}

DEFAULTS = {
    "grid": {"e_min": "auto", "e_max": "auto", "n_bins": 1000, "n_probe": 10000,
             "margin": 0.05},
    "schedule": {"ln_f0": 1.0, "ln_f_min": 1e-8, "flatness": 0.6,
                 "check_interval": None, "max_stage_steps": 10 ** 9},
    "run": {"seeds": [0, 1, 2, 3], "capacity": 256, "output": "wl_run"},
    "thermo": {"tau_min": 0.01, "tau_max": 10.0, "n_tau": 400},
    "posterior": {"tau": 1.0, "n": 3000, "threshold": 0.01, "hist_bins": 50},
    "metropolis": {"n_steps": 10 ** 6, "burn_in": None, "thinning": 10, "seed": 12345,
                   "floor": 0.90, "n_draws": 20000},
}


@dataclass
class RunConfig:
    """Validated configuration; every section is a plain dict of settings."""

    model: dict
    grid: dict
    schedule: dict
    run: dict
    thermo: dict
    posterior: dict
    metropolis: dict
    base_dir: Path = field(default_factory=Path.cwd)
    source: Optional[Path] = None

    @property
    def seeds(self) -> list:
        return list(self.run["seeds"])

    @property
    def output(self) -> Path:
        return self.resolve(self.run["output"])

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else (self.base_dir / p)

    def tau_grid(self) -> np.ndarray:
        t = self.thermo
        return np.geomspace(t["tau_min"], t["tau_max"], int(t["n_tau"]))

    def as_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in
                ("model", "grid", "schedule", "run", "thermo", "posterior", "metropolis")}


def load_config(path, base_dir=None) -> RunConfig:
    """Read and validate a config file.

    Relative paths resolve against ``base_dir``, by default the directory
    holding the file.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = tomli.loads(path.read_text(encoding="utf-8"))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = parse_config(raw, base_dir=Path(base_dir) if base_dir is not None else path.parent.resolve())
    cfg.source = path.resolve()
    return cfg


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def parse_config(raw: dict, base_dir=None) -> RunConfig:
    """Validate a parsed TOML mapping; raises :class:`ConfigError`."""
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    unknown = set(raw) - set(DEFAULTS) - {"model"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    model = dict(raw.get("model", {}))
    kind = model.get("kind")
    if kind not in MODEL_KEYS:
        raise ConfigError(f"model.kind must be one of {sorted(MODEL_KEYS)}, got {kind!r}")
    bad = set(model) - MODEL_KEYS[kind]
    if bad:
        raise ConfigError(f"unknown keys for model kind {kind!r}: {sorted(bad)}")

    sections = {}
    for name, defaults in DEFAULTS.items():
        given = dict(raw.get(name, {}))
        bad = set(given) - set(defaults)
        if bad:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
        sections[name] = {**copy.deepcopy(defaults), **given}

    g = sections["grid"]
    for key in ("e_min", "e_max"):
        if g[key] != "auto":
            g[key] = _number(g[key], f"grid.{key}")
    if g["e_min"] != "auto" and g["e_max"] != "auto" and not g["e_min"] < g["e_max"]:
        raise ConfigError("grid.e_min must be below grid.e_max")
    _positive_int(g["n_bins"], "grid.n_bins")
    _positive_int(g["n_probe"], "grid.n_probe")

    s = sections["schedule"]
    for key in ("ln_f0", "ln_f_min", "flatness"):
        s[key] = _number(s[key], f"schedule.{key}")
    if s["check_interval"] is not None:
        _positive_int(s["check_interval"], "schedule.check_interval")
    s["max_stage_steps"] = int(_number(s["max_stage_steps"], "schedule.max_stage_steps"))

    r = sections["run"]
    seeds = r["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(
            isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in seeds):
        raise ConfigError("run.seeds must be a non-empty list of non-negative integers")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("run.seeds must be distinct")
    _positive_int(r["capacity"], "run.capacity")

    t = sections["thermo"]
    t["tau_min"], t["tau_max"] = _number(t["tau_min"], "thermo.tau_min"), _number(t["tau_max"], "thermo.tau_max")
    if not 0 < t["tau_min"] < t["tau_max"]:
        raise ConfigError("thermo needs 0 < tau_min < tau_max")
    _positive_int(t["n_tau"], "thermo.n_tau")

    p = sections["posterior"]
    if not 0 < _number(p["threshold"], "posterior.threshold") < 1:
        raise ConfigError("posterior.threshold must lie in (0, 1)")
    _positive_int(p["n"], "posterior.n")

    m = sections["metropolis"]
    _positive_int(m["n_steps"], "metropolis.n_steps")
    _positive_int(m["thinning"], "metropolis.thinning")

    cfg = RunConfig(model=model, base_dir=base_dir, **sections)
    _check_model(cfg)
    return cfg


def _check_model(cfg: RunConfig):
    m = cfg.model
    if m["kind"] == "curvefit":
        for key in ("data", "n_shape_params", "shape_bounds", "sigma_bounds"):
            if key not in m:
                raise ConfigError(f"curvefit model needs model.{key}")
        data = cfg.resolve(m["data"])
        if not data.is_file():
            raise ConfigError(f"data file {data} does not exist")
        resolve_predictor(m.get("predictor", "linear"))
    elif m["kind"] == "discrete":
        for key in ("levels_per_dim", "d"):
            if key not in m:
                raise ConfigError(f"discrete model needs model.{key}")
    elif "d" not in m:
        raise ConfigError("gaussian model needs model.d")


def resolve_predictor(name: str):
    if name in PREDICTORS:
        return PREDICTORS[name]
    if ":" in name:
        module, _, attr = name.partition(":")
        try:
            return getattr(importlib.import_module(module), attr)
        except (ImportError, AttributeError) as exc:
            raise ConfigError(f"cannot import predictor {name!r}: {exc}") from None
    raise ConfigError(f"unknown predictor {name!r}; use one of {sorted(PREDICTORS)} or module:function")


def build_model(cfg: RunConfig):
    """Construct the ModelSpec described by ``cfg.model``."""
    from .dataset import load_datasets
    from .model import make_curvefit_model, make_discrete_toy, make_gaussian_toy

    m = cfg.model
    try:
        if m["kind"] == "gaussian":
            return make_gaussian_toy(m["d"], m.get("width", 1.0), m.get("box_halfwidth", 8.0),
                                     m.get("offset", 0.0))
        if m["kind"] == "discrete":
            return make_discrete_toy(m["levels_per_dim"], m["d"], m.get("table"))
        datasets = load_datasets(cfg.resolve(m["data"]))
        return make_curvefit_model(datasets, resolve_predictor(m.get("predictor", "linear")),
                                   m["n_shape_params"], tuple(m["sigma_bounds"]),
                                   [tuple(b) for b in m["shape_bounds"]], m.get("shape_names"))
    except WlTemperError as exc:
        raise ConfigError(f"model construction failed: {exc}") from None
