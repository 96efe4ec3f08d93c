"""Deterministic on-disk artifacts: CSV tables and JSON summaries.

Every artifact starts with a header naming the artifact version and the
configuration hash of the run that produced it, so outputs can be matched to
their inputs and byte-compared across reruns.  Floats are written with 17
significant digits, which round-trips IEEE doubles exactly; nothing
time- or host-dependent is ever written.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .beamsim import DipoleRecord

ARTIFACT_VERSION = 1


def canonical_json(obj) -> str:
    """Canonical JSON form used for hashing: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """Stable sha256 hex digest of a configuration dictionary."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def _fmt(x) -> str:
    if isinstance(x, (str, np.str_)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_table(path, columns: dict, header: dict | None = None) -> None:
    """Write named columns as CSV with '# key: value' header lines."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("columns must have equal length")
    lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")


def read_table(path) -> tuple[dict, dict]:
    """Read a CSV written by write_table; returns (header, columns)."""
    path = Path(path)
    header: dict = {}
    rows: list[str] = []
    names: list[str] | None = None
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
            continue
        if names is None:
            names = [c.strip() for c in line.split(",")]
            continue
        rows.append(line)
    if names is None:
        raise ValueError(f"{path} has no column header")
    data = np.array([[float(v) for v in r.split(",")] for r in rows]) \
        if rows else np.empty((0, len(names)))
    return header, {name: data[:, i] for i, name in enumerate(names)}


def write_record(path, record: DipoleRecord, header: dict | None = None) -> None:
    """Persist one dipole record as columns (t, jx, jy, n_atoms)."""
    head = dict(header or {})
    for key, value in record.meta.items():
        head.setdefault(key, value)
    write_table(path, {"t": record.times, "jx": record.jx, "jy": record.jy,
                       "n_atoms": record.n_snapshot}, head)


def read_record(path) -> DipoleRecord:
    """Load a dipole record written by write_record."""
    header, cols = read_table(path)
    meta = {}
    for key in ("seed", "trajectory"):
        if key in header:
            meta[key] = int(header[key])
    return DipoleRecord(times=cols["t"], jx=cols["jx"], jy=cols["jy"],
                        n_snapshot=cols["n_atoms"].astype(np.int64), meta=meta)


def write_correlation(path, series, header: dict | None = None) -> None:
    """Persist a correlation series as columns (lag, re, im)."""
    head = {"t0": _fmt(series.t0), "n_traj": series.n_traj, **(header or {})}
    write_table(path, {"lag": series.lags,
                       "re": series.values.real,
                       "im": series.values.imag}, head)


def write_spectrum(path, result, header: dict | None = None) -> None:
    """Persist a spectrum as columns (omega, re, im, abs)."""
    head = {"tf": _fmt(result.tf), **(header or {})}
    write_table(path, {"omega": result.omega,
                       "re": result.values.real,
                       "im": result.values.imag,
                       "abs": np.abs(result.values)}, head)


def write_json(path, payload: dict) -> None:
    """Write a JSON artifact with deterministic layout."""
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
