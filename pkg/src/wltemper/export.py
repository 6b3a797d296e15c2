"""CSV and JSON artifacts.

Floats are written with ``repr`` so every value round-trips exactly and
identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .thermo import NO_INTERIOR_MAXIMUM
from .wl import BinReservoir, DensityOfStates, EnergyGrid

__all__ = [
    "DOS_COLUMNS",
    "SWEEP_COLUMNS",
    "fmt",
    "write_dos_csv",
    "read_dos_csv",
    "write_reservoir_csv",
    "read_reservoir_csv",
    "write_samples_csv",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_corner_tables",
    "write_json",
    "sha256",
]

DOS_COLUMNS = ["bin_index", "e_low", "e_high", "log_g_mean", "log_g_stderr", "visited"]
SWEEP_COLUMNS = ["tau", "mean_e", "stderr_mean_e", "heat_cap", "stderr_heat_cap",
                 "fisher", "stderr_fisher", "fisher_median3"]


def fmt(x) -> str:
    return repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _edges(grid: EnergyGrid):
    edges = grid.edges.tolist()
    edges[-1] = grid.e_max
    return edges


def write_dos_csv(path, dos: DensityOfStates, stderr=None) -> None:
    """One row per bin; ``stderr`` is NaN when not supplied."""
    stderr = np.full(dos.grid.n_bins, np.nan) if stderr is None else np.asarray(stderr)
    edges = _edges(dos.grid)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(DOS_COLUMNS)
        for b in range(dos.grid.n_bins):
            w.writerow([b, fmt(edges[b]), fmt(edges[b + 1]), fmt(dos.log_g[b]),
                        fmt(stderr[b]), int(dos.visited[b])])


def read_dos_csv(path):
    """Inverse of :func:`write_dos_csv`; returns ``(dos, stderr)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != DOS_COLUMNS:
        raise DataFormatError(f"{path}: expected header {','.join(DOS_COLUMNS)}", 1)
    body = [r for r in rows[1:] if r]
    try:
        e_low = [float(r[1]) for r in body]
        e_high = [float(r[2]) for r in body]
        log_g = np.array([float(r[3]) for r in body])
        stderr = np.array([float(r[4]) for r in body])
        visited = np.array([r[5] == "1" for r in body])
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    grid = EnergyGrid(e_low[0], e_high[-1], len(body))
    dos = DensityOfStates(grid, np.where(visited, log_g, np.nan), visited,
                          np.zeros(len(body), dtype=np.int64))
    return dos, stderr


def write_reservoir_csv(path, reservoir: BinReservoir) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["bin_index", "E", *reservoir.names])
        for b, items in enumerate(reservoir.samples):
            for theta, e in items:
                w.writerow([b, fmt(e), *(fmt(t) for t in theta)])


def read_reservoir_csv(path, n_bins: int) -> BinReservoir:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["bin_index", "E"]:
            raise DataFormatError(f"{path}: expected header starting bin_index,E", 1)
        res = BinReservoir(n_bins, 1, header[2:])
        for row in reader:
            if not row:
                continue
            try:
                b = int(row[0])
                res.add(b, [float(v) for v in row[2:]], float(row[1]))
            except (ValueError, IndexError):
                raise DataFormatError(f"{path}: malformed row", reader.line_num) from None
    res.capacity = max(1, max((len(s) for s in res.samples), default=1))
    return res


def write_samples_csv(path, names, samples, energies, bins=None) -> None:
    """Parameter samples; with ``bins`` the reservoir schema, else ``E,<names>``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        lead = ["bin_index", "E"] if bins is not None else ["E"]
        w.writerow([*lead, *names])
        for i, (theta, e) in enumerate(zip(samples, energies)):
            head = [int(bins[i]), fmt(e)] if bins is not None else [fmt(e)]
            w.writerow([*head, *(fmt(t) for t in theta)])


def write_sweep_csv(path, curve) -> None:
    """Sweep table plus a footer row ``tau_star,<value or marker>``."""
    n = len(curve.tau_grid)
    nan = np.full(n, np.nan)
    se = curve.stderr or {}
    cols = [curve.tau_grid, curve.mean_e, se.get("mean_e", nan), curve.heat_cap,
            se.get("heat_cap", nan), curve.fisher, se.get("fisher", nan), curve.fisher_median3]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for t in range(n):
            w.writerow([fmt(c[t]) for c in cols])
        star = NO_INTERIOR_MAXIMUM if curve.tau_star is None else fmt(curve.tau_star)
        w.writerow(["tau_star", star] + [""] * (len(SWEEP_COLUMNS) - 2))


def read_sweep_csv(path):
    """Returns ``(columns dict of arrays, tau_star or None)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows[0] != SWEEP_COLUMNS or rows[-1][0] != "tau_star":
        raise DataFormatError(f"{path}: not a sweep table")
    data = np.array([[float(v) for v in r] for r in rows[1:-1]])
    cols = {name: data[:, k] for k, name in enumerate(SWEEP_COLUMNS)}
    star = rows[-1][1]
    return cols, (None if star == NO_INTERIOR_MAXIMUM else float(star))


def write_corner_tables(directory, draws, marginals: dict, pairs: dict) -> list:
    """Write marginal and pairwise tables; returns the manifest entries.

    ``marginals`` maps a parameter index to a Histogram and ``pairs``
    maps ``(i, j)`` to a Histogram2D.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for dim, h in marginals.items():
        name = f"marginal_{draws.names[dim]}.csv"
        with (directory / name).open("w", newline="", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["bin_center", "height"])
            for c, v in zip(h.centers, h.heights):
                w.writerow([fmt(c), fmt(v)])
        entries.append({"file": name, "kind": "marginal", "params": [draws.names[dim]],
                        "tau": draws.tau, "threshold": draws.threshold})
    for (i, j), h in pairs.items():
        name = f"pair_{draws.names[i]}__{draws.names[j]}.csv"
        ci = 0.5 * (h.edges_i[1:] + h.edges_i[:-1])
        cj = 0.5 * (h.edges_j[1:] + h.edges_j[:-1])
        with (directory / name).open("w", newline="", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["i_center", "j_center", "mass"])
            for a in range(len(ci)):
                for b in range(len(cj)):
                    w.writerow([fmt(ci[a]), fmt(cj[b]), fmt(h.mass[a, b])])
        entries.append({"file": name, "kind": "pair",
                        "params": [draws.names[i], draws.names[j]],
                        "tau": draws.tau, "threshold": draws.threshold})
    return entries


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
