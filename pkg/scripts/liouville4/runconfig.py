#!/usr/bin/env python3
"""
runconfig.py - Resolve the run configuration for lab.py

Sources, lowest precedence first: built-in defaults, the JSON config file
(--config, default config.json at the repository root), environment
(LIOUVILLE4_OUTPUT_DIR, PARALLEL), command-line flags. Every value is checked
against the numerical modules' preconditions before any command runs.
"""

import copy
import json
import math
import os
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import console
import families
from entire_solutions import BETA_STAR, EPS_W, LOG_BAND
from radial_engine import OdeConfig, RadialEngineError

DEFAULTS: Dict[str, dict] = {
    "ode": {"rtol": 1e-10, "atol": 1e-12, "r_max": 50.0, "u_ceiling": 50.0, "max_step": 0.25},
    "classify": {"eps_w": EPS_W, "log_band": LOG_BAND},
    "families": {"kind": families.LOG_FAMILY, "k": [8, 16, 32, 64], "beta": None, "delta": 0.5},
    "diagnostics": {"neck_R": [5.0, 10.0, 20.0], "intvk_R": 2.0, "eta": 1.0},
    "scan": {"beta_range": "0.0:2.0:0.25", "betas": None},
    "verify": {"seed": 20240611, "pohozaev_samples": 100, "tol": None},
    "output_dir": "lab_output",
}

OUTPUT_ENV = "LIOUVILLE4_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def parse_range(text: str) -> Tuple[float, ...]:
    """'a:b:h' → a, a+h, ..., up to b inclusive; a bare number is a one-point range."""
    parts = str(text).split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"not a number range: {text!r}")
    if len(values) == 1:
        return (values[0],)
    if len(values) != 3:
        raise ConfigError(f"range must be a:b:h, got {text!r}")
    lo, hi, step = values
    if not (step > 0.0 and lo <= hi and all(math.isfinite(v) for v in values)):
        raise ConfigError(f"invalid range {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return tuple(lo + i * step for i in range(count))


def parse_list(text) -> Tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [p for p in str(text).split(",") if p.strip()]
    try:
        return tuple(float(p) for p in items)
    except (TypeError, ValueError):
        raise ConfigError(f"not a number list: {text!r}")


def _merge(base: dict, update: Mapping, path: str = ""):
    for key, value in update.items():
        if key not in base:
            console.warn_msg(f"ignoring unknown config key: {path}{key}")
            continue
        if isinstance(base[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config section {path}{key} must be an object")
            _merge(base[key], value, f"{path}{key}.")
        elif value is not None or base[key] is None:
            base[key] = value


def load_config(path: Optional[str] = None) -> dict:
    """Defaults overlaid with the JSON file at path, if given."""
    config = copy.deepcopy(DEFAULTS)
    if path is None:
        return config
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object: {path}")
    _merge(config, data)
    return config


@dataclass(frozen=True)
class RunConfig:
    ode: OdeConfig
    eps_w: float
    log_band: float
    family_kind: str
    k_values: Tuple[float, ...]
    beta: Optional[float]
    delta: float
    neck_R: Tuple[float, ...]
    intvk_R: float
    eta: float
    scan_betas: Tuple[float, ...]
    seed: int
    pohozaev_samples: int
    tol: Optional[float]
    output_dir: str
    workers: int = 1

    def __post_init__(self):
        if not (self.eps_w > 0.0 and self.log_band > 0.0):
            raise ConfigError(f"classification thresholds must be positive: {self.eps_w!r}, {self.log_band!r}")
        if self.family_kind not in families.FAMILY_KINDS:
            raise ConfigError(f"unknown family kind: {self.family_kind!r}")
        if not self.k_values:
            raise ConfigError("k list is empty")
        if any(not (k >= 1.0 and math.isfinite(k)) for k in self.k_values):
            raise ConfigError(f"k values must be finite and >= 1: {self.k_values!r}")
        if self.family_kind == families.QUAD1_FAMILY and (self.beta is None or not self.beta > BETA_STAR):
            raise ConfigError(f"quad1 family needs --beta above {BETA_STAR!r}, got {self.beta!r}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1): {self.delta!r}")
        if any(not R > 0.0 for R in self.neck_R) or not self.intvk_R > 0.0:
            raise ConfigError("neck and intvk radii must be positive")
        if not 1.0 <= self.eta < 2.0:
            raise ConfigError(f"eta must lie in [1, 2): {self.eta!r}")
        if not self.scan_betas or not all(math.isfinite(b) for b in self.scan_betas):
            raise ConfigError(f"scan needs finite betas: {self.scan_betas!r}")
        if self.pohozaev_samples < 1 or self.workers < 1:
            raise ConfigError("sample and worker counts must be at least 1")
        if self.tol is not None and not self.tol > 0.0:
            raise ConfigError(f"tol must be positive: {self.tol!r}")

    def as_dict(self) -> dict:
        """Everything that shapes results; output_dir and workers do not."""
        ode = self.ode
        return {
            "ode": {"rtol": ode.rtol, "atol": ode.atol, "r_max": ode.r_max, "u_ceiling": ode.u_ceiling,
                    "max_step": ode.max_step},
            "classify": {"eps_w": self.eps_w, "log_band": self.log_band},
            "families": {"kind": self.family_kind, "k": list(self.k_values), "beta": self.beta,
                         "delta": self.delta},
            "diagnostics": {"neck_R": list(self.neck_R), "intvk_R": self.intvk_R, "eta": self.eta},
            "scan": {"betas": list(self.scan_betas)},
            "verify": {"seed": self.seed, "pohozaev_samples": self.pohozaev_samples, "tol": self.tol},
        }


def resolve(config: dict, overrides: Optional[Mapping] = None,
            environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Build a validated RunConfig; overrides use the config file's shape, None meaning unset."""
    merged = copy.deepcopy(config)
    environ = os.environ if environ is None else environ
    if environ.get(OUTPUT_ENV):
        merged["output_dir"] = environ[OUTPUT_ENV]
    workers = 1
    if environ.get("PARALLEL"):
        try:
            workers = int(environ["PARALLEL"])
        except ValueError:
            raise ConfigError(f"PARALLEL must be an integer: {environ['PARALLEL']!r}")

    overrides = dict(overrides or {})
    flag_workers = overrides.pop("workers", None)
    if flag_workers is not None:
        workers = int(flag_workers)
    for section, values in overrides.items():
        if isinstance(values, Mapping):
            merged.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})
        elif values is not None:
            merged[section] = values

    ode, cls, fam, diag = merged["ode"], merged["classify"], merged["families"], merged["diagnostics"]
    try:
        ode_config = OdeConfig(rtol=float(ode["rtol"]), atol=float(ode["atol"]), r_max=float(ode["r_max"]),
                               u_ceiling=float(ode["u_ceiling"]), max_step=float(ode["max_step"]))
    except RadialEngineError as e:
        raise ConfigError(str(e))
    scan = merged["scan"]
    betas = parse_list(scan["betas"]) if scan.get("betas") is not None else parse_range(scan["beta_range"])
    beta = fam.get("beta")
    tol = merged["verify"].get("tol")
    return RunConfig(
        ode=ode_config,
        eps_w=float(cls["eps_w"]),
        log_band=float(cls["log_band"]),
        family_kind=str(fam["kind"]),
        k_values=parse_list(fam["k"]),
        beta=None if beta is None else float(beta),
        delta=float(fam["delta"]),
        neck_R=parse_list(diag["neck_R"]),
        intvk_R=float(diag["intvk_R"]),
        eta=float(diag["eta"]),
        scan_betas=betas,
        seed=int(merged["verify"]["seed"]),
        pohozaev_samples=int(merged["verify"]["pohozaev_samples"]),
        tol=None if tol is None else float(tol),
        output_dir=str(merged["output_dir"]),
        workers=workers,
    )
