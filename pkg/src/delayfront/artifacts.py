"""CSV/JSON readers and writers.  Output is deterministic: floats via repr, sorted keys."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dispersion import REGION_HEADER, Params
from .grid import Grid
from .profile import Profile, TailFit


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(_clean(config), sort_keys=True).encode()).hexdigest()[:12]


def run_dir(base: Path, command: str, config: dict) -> Path:
    d = Path(base) / f"{command}-{config_hash(config)}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def write_profile(prof: Profile, directory: Path, stem: str = "profile") -> tuple:
    """``stem.csv`` with columns z,phi and a ``stem.json`` sidecar."""
    directory = Path(directory)
    csv_path = _write_rows(directory / f"{stem}.csv", ["z", "phi"],
                           zip(prof.grid.z.tolist(), prof.values.tolist()))
    json_path = write_json(directory / f"{stem}.json", prof.metadata())
    return csv_path, json_path


def read_profile(csv_path: Path) -> Profile:
    csv_path = Path(csv_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    p = Params(meta["params"]["c"], meta["params"]["h"])
    g = meta["grid"]
    grid = Grid(g["z_min"], g["z_max"], g["n"])
    tail = None
    if meta.get("tail"):
        t = meta["tail"]
        tail = TailFit(t["amplitude"], t["exponent"], t["power"], tuple(t["fit_window"]),
                       t["residual"], t["slope"])
    return Profile(p, grid, data[:, 1].copy(), None, tail, meta["ode_residual"],
                   meta["residual_scale"], meta.get("method", "file"), meta.get("info", {}))


def write_series(path: Path, times, norms, sups) -> Path:
    return _write_rows(path, ["t", "norm_lambda", "sup_norm"], zip(times, norms, sups))


def write_values(path: Path, times, values) -> Path:
    return _write_rows(path, ["t", "value"], zip(times, values))


def write_snapshots(path: Path, times, z, fields) -> Path:
    rows = ((t, zi, vi) for t, f in zip(times, fields) for zi, vi in zip(z, f))
    return _write_rows(path, ["t", "z", "v"], rows)


def read_snapshots(path: Path) -> tuple:
    """(times, z, fields) from a t,z,v file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    n = int(np.sum(data[:, 0] == times[0]))
    return times, data[:n, 1], data[:, 2].reshape(len(times), n)


def write_region(path: Path, cells) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_HEADER)
        for cell in cells:
            w.writerow(cell.csv_row())
    return path
