"""Readers for the sweep harness's CSV/JSON output files.

Each reader validates the documented column schema up front and raises
SchemaMismatchError naming the offending column and file, so a figure spec
pointed at the wrong file fails with a usable message instead of a numpy
shape error three calls later.  Extra columns are tolerated: the harness may
append diagnostic columns (such as the free-text ``error`` column in
sweep.csv) without breaking older figure specs.
"""

import csv
import json
from pathlib import Path

import numpy as np

SWEEP_NUMERIC = ("delta", "err_rel", "dt", "h", "steps", "max_fp_iters")
SNAPSHOT_NUMERIC = ("x", "u", "u_t", "u_tt")


class SchemaMismatchError(ValueError):
    """An input file does not match the documented harness schema."""


def _read_rows(path):
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        rows = list(reader)
    if not header:
        raise SchemaMismatchError(f"{path}: empty file, no header row")
    return header, rows


def _column(path, rows, name, allow_blank=False):
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        text = (row[name] or "").strip()
        if not text:
            if allow_blank:
                out[i] = np.nan
                continue
            raise SchemaMismatchError(f"{path}: column '{name}' is blank in data row {i + 1}")
        try:
            out[i] = float(text)
        except ValueError:
            raise SchemaMismatchError(
                f"{path}: column '{name}' has non-numeric value {text!r} in data row {i + 1}"
            ) from None
    return out


def _require(path, header, names):
    missing = [c for c in names if c not in header]
    if missing:
        raise SchemaMismatchError(f"{path}: missing required column '{missing[0]}'")


def read_sweep(path) -> dict:
    """Parse sweep.csv into a dict of float arrays keyed by column name.

    err_rel is nan for failed rows (their message, when the file carries an
    ``error`` column, is returned as a list of strings under "error").
    A header-only file is a schema mismatch: every figure kind needs at
    least one data row.
    """
    header, rows = _read_rows(path)
    _require(path, header, SWEEP_NUMERIC)
    if not rows:
        raise SchemaMismatchError(f"{path}: no data rows")
    data = {name: _column(path, rows, name, allow_blank=(name == "err_rel")) for name in SWEEP_NUMERIC}
    if "error" in header:
        data["error"] = [(row["error"] or "").strip() for row in rows]
    return data


def read_snapshot(path) -> dict:
    """Parse a nodal snapshot CSV (columns x[,y],u,u_t,u_tt) into float arrays.

    The presence of a ``y`` column is what distinguishes 2D snapshots; the
    caller checks for it.
    """
    header, rows = _read_rows(path)
    _require(path, header, SNAPSHOT_NUMERIC)
    if not rows:
        raise SchemaMismatchError(f"{path}: no data rows")
    names = SNAPSHOT_NUMERIC + (("y",) if "y" in header else ())
    return {name: _column(path, rows, name) for name in names}


def read_rate(path) -> dict:
    """Parse rate.json; must be an object with a 'slope' entry (may be null)."""
    path = Path(path)
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaMismatchError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or "slope" not in payload:
        raise SchemaMismatchError(f"{path}: missing required column 'slope'")
    slope = payload["slope"]
    if slope is not None and not isinstance(slope, (int, float)):
        raise SchemaMismatchError(f"{path}: column 'slope' has non-numeric value {slope!r}")
    return payload
