"""Artifact writers with a provenance line carrying the run-config hash."""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .fractal_dim import BoxCountSeries
from .one_d import MeasureApprox
from .spectra_dyn import SpectrumReport


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance_line(cfg: dict) -> str:
    return f"# geolorenz {cfg.get('command', '?')} config={config_hash(cfg)}"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def write_csv(path, header, rows, cfg: dict) -> Path:
    path = Path(path)
    lines = [provenance_line(cfg), ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_points(path, pts: np.ndarray, cfg: dict, header=("x", "y", "z")) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(provenance_line(cfg) + "\n")
        np.savetxt(fh, pts, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    return path


def read_points(path) -> np.ndarray:
    pts = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return pts


def write_json(path, obj: dict, cfg: dict) -> Path:
    """JSON has no comments, so the provenance line is stored under ``_provenance``."""
    path = Path(path)
    doc = {"_provenance": provenance_line(cfg)[2:], "config": cfg, **obj}
    path.write_text(json.dumps(doc, sort_keys=True, indent=1, default=_jsonable) + "\n")
    return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (set, tuple)):
        return list(o)
    if hasattr(o, "to_dict"):
        return o.to_dict()
    return str(o)


def emit_plot_data(series, path, cfg: dict) -> Path:
    """Two-column (or bin) CSV for plotting; ordering is deterministic."""
    if isinstance(series, BoxCountSeries):
        if series.scales.size == 0:
            raise ValueError("empty series")
        return write_csv(path, ("scale", "count"), series.rows(), cfg)
    if isinstance(series, MeasureApprox):
        e = series.edges
        rows = [(float(e[i]), float(e[i + 1]), float(series.masses[i])) for i in range(series.bins)]
        return write_csv(path, ("bin_lo", "bin_hi", "mass"), rows, cfg)
    if isinstance(series, SpectrumReport):
        if series.values.size == 0:
            raise ValueError("empty series")
        return write_csv(path, ("value", "gap"), series.rows(), cfg)
    rows = list(series)
    if not rows:
        raise ValueError("empty series")
    if hasattr(rows[0], "row"):
        return write_csv(path, ("value", "witness_word", "shift"), [r.row() for r in rows], cfg)
    return write_csv(path, ("x", "y"), rows, cfg)
