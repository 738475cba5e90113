#!/usr/bin/env python3
"""
export.py - CSV/JSON writers and the run manifest

Numbers are written as the shortest decimal that reads back to the same
double (repr), with '.' as decimal point and '\\n' line endings, so one
config always produces the same bytes. manifest.json lists every file
written through an OutputDir with its sha256 and size; it carries no
timestamps.
"""

import csv
import hashlib
import json
import math
import os
from typing import Dict, Iterable, List, Sequence

import numpy as np

import console
import families
from diagnostics import DiagnosticSeries
from entire_solutions import ScanRow, ShootResult
from radial_engine import RadialProfile

TOOL_NAME = "liouville4"
TOOL_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"

PROFILE_COLUMNS = ("r", "u", "du", "w", "dw")
SCAN_COLUMNS = ("beta", "class", "a", "energy", "energy_tail", "r_stop")
SERIES_COLUMNS = ("k", "mu", "d_k", "mass_delta")
MEMBER_COLUMNS = ("r", "u", "V", "e4u")


class ExportError(ValueError):
    pass


def format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def sanitize(value):
    """JSON-safe copy: numpy scalars become Python numbers, non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [sanitize(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def dumps_json(data) -> str:
    return json.dumps(sanitize(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def compute_sha256(filepath: str) -> str:
    sha256_hash = hashlib.sha256()
    with open(filepath, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


class OutputDir:
    """One run's output directory. Writes are serialized by the caller; nothing here is thread-safe."""

    def __init__(self, root: str, quiet: bool = False):
        self.root = root
        self.quiet = quiet
        self.written: Dict[str, str] = {}
        os.makedirs(root, exist_ok=True)

    def _target(self, name: str) -> str:
        if os.path.isabs(name) or ".." in name.split("/"):
            raise ExportError(f"output name must stay inside the output directory: {name!r}")
        path = os.path.join(self.root, *name.split("/"))
        os.makedirs(os.path.dirname(path), exist_ok=True)
        return path

    def _record(self, name: str, path: str):
        self.written[name] = path
        if not self.quiet:
            console.log("INFO", f"Wrote {path}")

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
        path = self._target(name)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise ExportError(f"{name}: row has {len(row)} fields for {len(columns)} columns")
                writer.writerow([format_number(v) for v in row])
        self._record(name, path)
        return path

    def write_json(self, name: str, data) -> str:
        path = self._target(name)
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write(dumps_json(data))
        self._record(name, path)
        return path

    def manifest(self, config: dict) -> dict:
        files = []
        for name in sorted(self.written):
            path = self.written[name]
            files.append({"path": name, "sha256": compute_sha256(path), "size": os.path.getsize(path)})
        return {"tool": TOOL_NAME, "version": TOOL_VERSION, "config": config, "files": files}

    def write_manifest(self, config: dict) -> str:
        data = self.manifest(config)
        path = self._target(MANIFEST_NAME)
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write(dumps_json(data))
        if not self.quiet:
            console.log("INFO", f"Wrote {path}")
        return path


def profile_rows(profile: RadialProfile) -> List[tuple]:
    return list(zip(profile.r, profile.u, profile.du, profile.w, profile.dw))


def scan_rows(rows: Sequence[ScanRow]) -> List[tuple]:
    return [tuple(row.as_dict()[c] for c in SCAN_COLUMNS) for row in rows]


def series_rows(series: DiagnosticSeries) -> List[tuple]:
    return [tuple(row[c] for c in SERIES_COLUMNS) for row in series.rows()]


def member_rows(member: families.FamilyMember, r) -> List[tuple]:
    table = families.member_table(member, r)
    return list(zip(*(table[c] for c in MEMBER_COLUMNS)))


def shoot_summary(result: ShootResult) -> dict:
    t = result.trajectory
    data = {
        "beta": result.beta,
        "class": t.tag,
        "confident": t.confident,
        "a": t.a_slope,
        "r_stop": t.r_stop,
        "energy": result.energy_total,
        "energy_tail": result.energy_tail,
        "event": result.event.kind,
        "r_max": result.profile.r_max,
    }
    if result.slope is not None:
        data["slope_fit"] = {
            "a": result.slope.a,
            "a_laplacian": result.slope.a_laplacian,
            "log_coeff": result.slope.log_coeff,
            "offset": result.slope.offset,
            "consistent": result.slope.consistent,
        }
    return data


def member_grid(member: families.FamilyMember, delta: float, count: int = 401) -> np.ndarray:
    """Nodes on [0, δ], geometric near the concentration scale μ and uniform after."""
    inner = np.geomspace(min(member.mu, delta) * 1e-2, delta, count // 2)
    outer = np.linspace(0.0, delta, count - count // 2)
    return np.unique(np.concatenate([inner, outer]))


def k_label(k: float) -> str:
    return format_number(int(k)) if float(k).is_integer() else format_number(k).replace(".", "p")