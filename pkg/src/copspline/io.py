"""File formats: sample CSVs, model and marginal specifications, marginal grids.

CSV files are comma separated with '.' decimals. A single header row is
allowed and detected by its first row not being numeric. Pair indices in
files are 0-based, like everywhere else in the package.

Marginal grid files carry one comment line naming the pair and resolution,
followed by ``r`` rows of ``r`` density values (row-major, first index along
the lower-numbered dimension)::

    # pair=0,1 resolution=200
    1.02,0.98,...
"""
import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .copulas import CopulaModel
from .exceptions import ConfigurationError, DomainError, ParseError
from .penalty import BivariateMarginals, GridMarginal

__all__ = [
    "read_samples_csv",
    "write_samples_csv",
    "read_json",
    "load_model",
    "load_marginals",
    "read_marginal_grid",
    "write_marginal_grid",
    "file_digest",
]

_GRID_HEADER = re.compile(r"#\s*pair\s*=\s*(\d+)\s*,\s*(\d+)\s+resolution\s*=\s*(\d+)")


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_samples_csv(path):
    """Read a numeric matrix, skipping an optional header row.

    Raises
    ------
    ParseError
        On ragged rows or non-numeric cells, naming the 1-based row and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows_start, rows = 2, rows[1:]
    else:
        rows_start = 1
    if not rows:
        raise ParseError("%s: no data rows" % path)
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ParseError("%s: row %d has %d columns, expected %d"
                             % (path, r + rows_start, len(row), width))
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise ParseError("%s: row %d, column %d: %r is not a number"
                                 % (path, r + rows_start, c + 1, cell)) from None
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise ParseError("%s: row %d, column %d is not finite"
                         % (path, bad[0] + rows_start, bad[1] + 1))
    return data


def _format_row(values):
    return ",".join(repr(float(v)) for v in values)


def write_samples_csv(path, X, header=None):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with Path(path).open("w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in X:
            fh.write(_format_row(row) + "\n")


def read_json(path):
    try:
        with Path(path).open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError("%s: invalid JSON (%s)" % (path, exc)) from None


def load_model(path):
    """Read a copula model from ``{"family": ..., "theta": ..., "rho": ..., "d": ...}``."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise ParseError("%s: model specification must be a JSON object" % path)
    try:
        return CopulaModel.from_dict(data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError("%s: invalid model specification (%s)" % (path, exc)) from None


def read_marginal_grid(path):
    """Return ``((i, j), GridMarginal)`` from a marginal grid file."""
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        match = _GRID_HEADER.match(first.strip())
        if not match:
            raise ParseError("%s: first line must look like '# pair=0,1 resolution=200'" % path)
        i, j, r = (int(g) for g in match.groups())
        rows = [line for line in fh if line.strip()]
    if len(rows) != r:
        raise ParseError("%s: expected %d rows, found %d" % (path, r, len(rows)))
    values = np.empty((r, r))
    for a, line in enumerate(rows):
        cells = line.strip().split(",")
        if len(cells) != r:
            raise ParseError("%s: row %d has %d values, expected %d"
                             % (path, a + 2, len(cells), r))
        try:
            values[a] = [float(c) for c in cells]
        except ValueError:
            raise ParseError("%s: row %d contains a non-numeric value" % (path, a + 2)) from None
    return (i, j), GridMarginal(values)


def write_marginal_grid(path, pair, values):
    values = np.asarray(values, dtype=np.float64)
    with Path(path).open("w") as fh:
        fh.write("# pair=%d,%d resolution=%d\n" % (pair[0], pair[1], values.shape[0]))
        for row in values:
            fh.write(_format_row(row) + "\n")


def load_marginals(path):
    """Known bivariate marginals from a file or directory.

    Accepted inputs:

    * a directory of marginal grid CSV files, one per pair;
    * a model JSON, whose bivariate marginals are used;
    * a JSON object ``{"pairs": [{"pair": [i, j], "model": {...}} |
      {"pair": [i, j], "grid": "file.csv"}, ...]}``, grid paths being
      relative to the JSON file.
    """
    path = Path(path)
    if path.is_dir():
        pairs = {}
        for file in sorted(path.glob("*.csv")):
            pair, grid = read_marginal_grid(file)
            if pair in pairs:
                raise ConfigurationError("pair %r given twice in %s" % (pair, path))
            pairs[pair] = grid
        if not pairs:
            raise ConfigurationError("%s contains no marginal grid files" % path)
        return BivariateMarginals(pairs)
    data = read_json(path)
    if isinstance(data, dict) and "family" in data:
        return BivariateMarginals.from_model(CopulaModel.from_dict(data))
    if not isinstance(data, dict) or "pairs" not in data:
        raise ParseError("%s: expected a model or a {'pairs': [...]} object" % path)
    pairs = {}
    for entry in data["pairs"]:
        pair = tuple(int(a) for a in entry["pair"])
        if "model" in entry:
            pairs[pair] = CopulaModel.from_dict(entry["model"])
        elif "grid" in entry:
            grid_pair, grid = read_marginal_grid(path.parent / entry["grid"])
            if grid_pair != pair:
                raise ConfigurationError("grid file %s names pair %r, expected %r"
                                         % (entry["grid"], grid_pair, pair))
            pairs[pair] = grid
        else:
            raise ParseError("%s: pair %r needs a 'model' or 'grid' entry" % (path, pair))
    return BivariateMarginals(pairs)


def file_digest(path):
    """SHA-256 of a file, or of all files below a directory in sorted order."""
    path = Path(path)
    h = hashlib.sha256()
    files = sorted(p for p in path.rglob("*") if p.is_file()) if path.is_dir() else [path]
    for file in files:
        if path.is_dir():
            h.update(str(file.relative_to(path)).encode())
        h.update(file.read_bytes())
    return h.hexdigest()
