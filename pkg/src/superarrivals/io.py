"""Self-describing CSV and JSON output in paper units.

CSV files start with a ``#`` header block (quantity, units, run metadata,
config hash) followed by one column-name row and data rows. Floats are
written with ``repr`` so values read back bit-identically.
"""

from __future__ import annotations

import json
import math
import platform
import time
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import SuperarrivalReport, analyze_pair, t_d_sensitivity
from .errors import WindowOpenError
from .observables import ExpectationSeries, TransmissionSeries

SERIES_PREFIX = "ts_"
REFERENCE_LABELS = ("static", "free", "free_analytic")


def _num(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], header: dict) -> Path:
    path = Path(path)
    lines = [f"# {k}: {v}" for k, v in header.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else _num(c) for c in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    header, columns, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return header, columns or [], rows


def write_series(path, series: TransmissionSeries, config_hash: str = "") -> Path:
    header = {"quantity": "transmission probability beyond x_d",
              "units": "t in t0, x_d in sigma1",
              "label": series.label,
              "x_d": repr(float(series.x_d)),
              "t_p": "none" if series.t_p is None else repr(float(series.t_p)),
              "config": config_hash}
    return write_csv(path, ("t", "T"), zip(series.times, series.values), header)


def read_series(path) -> TransmissionSeries:
    header, _, rows = read_csv(path)
    data = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
    t_p = header.get("t_p", "none")
    return TransmissionSeries(data[:, 0], data[:, 1], float(header["x_d"]), header["label"],
                              None if t_p == "none" else float(t_p))


def write_expectations(path, series: ExpectationSeries, config_hash: str = "") -> Path:
    header = {"quantity": "transmitted-sector expectation values",
              "units": "t in t0, H in E0, p in p0, x in sigma1; empty below the T floor",
              "config": config_hash}
    rows = ([t, *(None if math.isnan(v) else v for v in (h, p, x))]
            for t, h, p, x in zip(series.times, series.energy_T, series.momentum_T,
                                  series.position_T))
    return write_csv(path, ("t", "H_T", "p_T", "x_T"), rows, header)


def write_trajectories(path, bundle, ids: Sequence[int], config_hash: str = "") -> Path:
    """Long format: one row per (trajectory, stored time)."""
    header = {"quantity": "Bohmian trajectories", "units": "t in t0, x in sigma1",
              "config": config_hash}
    rows = ([str(i), t, x, bundle.classifications[i]]
            for i in ids for t, x in zip(bundle.times, bundle.positions[:, i]))
    return write_csv(path, ("id", "t", "x", "classification"), rows, header)


def write_sweep(path, result, config_hash: str = "") -> Path:
    header = {"quantity": f"superarrivality sweep over {result.axis}",
              "units": "times in t0; T values are probabilities at t_end",
              "config": config_hash}
    rows = []
    for p in result.points:
        r = p.report
        rows.append([p.value, r and r.eta, r and r.delta_t, r and r.t_d, r and r.t_c,
                     p.T_reference, p.T_perturbed, p.status, p.error.replace(",", ";")])
    return write_csv(path, (result.axis, "eta", "delta_t", "t_d", "t_c", "T_s_inf", "T_p_inf",
                            "status", "error"), rows, header)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def pair_report(reference: TransmissionSeries, perturbed: TransmissionSeries,
                delta_dev: float) -> dict:
    """Everything derivable from the two series; used by both ``pair`` and ``analyze``."""
    out = {"x_d": float(perturbed.x_d), "delta_dev": delta_dev, "reference": reference.label,
           "T_reference_final": reference.final, "T_perturbed_final": perturbed.final,
           "t_d_sensitivity": {repr(k): v for k, v in t_d_sensitivity(reference, perturbed).items()}}
    try:
        report: SuperarrivalReport | None = analyze_pair(reference, perturbed, delta_dev)
    except WindowOpenError as exc:
        out.update(status="window_open", t_d=exc.t_d)
        return out
    if report is None:
        out["status"] = "none"
    else:
        out.update(status="superarrival", **report.as_dict())
    return out


def find_pair(directory) -> tuple[Path, Path]:
    """The reference and perturbed series files emitted into ``directory``."""
    directory = Path(directory)
    perturbed = directory / f"{SERIES_PREFIX}perturbed.csv"
    for label in REFERENCE_LABELS:
        ref = directory / f"{SERIES_PREFIX}{label}.csv"
        if ref.exists() and perturbed.exists():
            return ref, perturbed
    raise FileNotFoundError(f"no reference/perturbed series pair in {directory}")


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(directory, command: str, config_text: str, config_hash: str,
                   wall_time: float, files: Sequence[Path], extra: dict | None = None,
                   name: str = "manifest.json") -> Path:
    manifest = {"command": command, "config": config_text, "config_hash": config_hash,
                "tool_version": tool_version(), "python": platform.python_version(),
                "wall_time_s": wall_time, "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                "files": sorted(Path(f).name for f in files)}
    manifest.update(extra or {})
    return write_json(Path(directory) / name, manifest)
