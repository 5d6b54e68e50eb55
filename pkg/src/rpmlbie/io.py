"""Plain CSV output with a commented JSON metadata header.

Files start with lines of the form ``# {json}`` holding the full run
metadata, followed by a CSV header row and data rows.  Floats are written
with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, meta: dict, columns: dict) -> str:
    """Write equal-length columns; returns the sha256 of the file body."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    n = {c.shape[0] for c in cols}
    if len(n) > 1:
        raise ValueError("columns differ in length")
    body = []
    for row in zip(*cols):
        body.append([_fmt(v) for v in row])
    h = hashlib.sha256()
    for row in body:
        h.update((",".join(row) + "\n").encode())
    digest = h.hexdigest()
    meta = dict(meta)
    meta["data_sha256"] = digest
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True, default=_json_default) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        w.writerows(body)
    return digest


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def read_csv(path):
    """Return (metadata, columns) with numeric columns as float arrays."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ConfigError(f"{path} has no metadata header")
            meta = json.loads(first[2:])
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    names, data = rows[0], rows[1:]
    cols = {}
    for i, n in enumerate(names):
        vals = [r[i] for r in data]
        try:
            cols[n] = np.array([float(v) for v in vals])
        except ValueError:
            cols[n] = np.array(vals)
    return meta, cols
