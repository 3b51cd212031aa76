"""On-disk formats: particle snapshots, diagnostics series and study reports."""

import csv
import math

import numpy as np
import yaml

from .errors import OutputError

SNAPSHOT_FIELDS = ("step", "t", "index", "z1", "z2", "m", "w", "C1", "C2", "E_I")
DIAGNOSTIC_FIELDS = ("t", "total_mass", "energy", "energy_rel_err", "min_mass", "newton_iters")


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _open(path, mode):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot open {path}: {exc}") from exc


def snapshot_rows(state, rhs):
    """SnapshotRecord tuples sorted by particle index."""
    z, C = state.seeds, rhs.centroids
    for i in range(state.n):
        yield (state.step, state.t, i, z[i, 0], z[i, 1], state.masses[i], rhs.weights[i], C[i, 0], C[i, 1], rhs.E_I[i])


def write_snapshot(state, rhs, path, append=False):
    """Comma-separated records; floats use repr, which round-trips exactly."""
    with _open(path, "a" if append else "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not append or fh.tell() == 0:
            w.writerow(SNAPSHOT_FIELDS)
        for row in snapshot_rows(state, rhs):
            w.writerow([_fmt(v) for v in row])


def read_snapshot(path):
    """Columns of a snapshot file as arrays, keyed by field name."""
    with _open(path, "r") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SNAPSHOT_FIELDS:
            raise OutputError(f"{path}: unexpected header {header}")
        rows = list(reader)
    out = {}
    for k, name in enumerate(SNAPSHOT_FIELDS):
        vals = [r[k] for r in rows]
        out[name] = np.array([int(v) for v in vals] if name in ("step", "index") else [float(v) for v in vals])
    return out


def write_diagnostics(rows, path):
    with _open(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTIC_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in DIAGNOSTIC_FIELDS])


def read_diagnostics(path):
    with _open(path, "r") as fh:
        reader = csv.DictReader(fh)
        return [{k: (int(v) if k == "newton_iters" else float(v)) for k, v in row.items()} for row in reader]


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def write_report(report, path):
    """YAML record with abscissae, errors, slope and residual (plus any extras)."""
    data = {
        "mode": report.mode,
        "abscissae": _plain(report.abscissae),
        "errors": _plain(report.errors),
        "slope": _plain(report.slope),
        "residual": _plain(report.residual),
        "reference": _plain(report.reference),
        "note": report.note,
    }
    if report.extra:
        data["extra"] = _plain(report.extra)
    with _open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=False)


def read_report(path):
    with _open(path, "r") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "slope" not in data:
        raise OutputError(f"{path}: not a report")
    return data


def write_records(records, path):
    """Generic list of dicts as YAML."""
    with _open(path, "w") as fh:
        yaml.safe_dump(_plain(list(records)), fh, sort_keys=False)


def is_finite_report(data):
    return data.get("slope") is not None and math.isfinite(data["slope"])
