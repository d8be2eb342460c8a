"""Plain-text CSV serialization for matrices and vectors.

Layout: a literal header line ``field,rows,cols``, a metadata line with the
values, a column-name line, then one line per row.  Complex columns are
stored as two real columns with ``_re``/``_im`` suffixes.  Floats are
written with ``repr`` so a save/load round trip is exact.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError
from .model import ScalarField

_HEADER = "field,rows,cols"


def format_matrix(arr: np.ndarray, field: ScalarField | None = None) -> str:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"only vectors and matrices serialize, got shape {arr.shape}")
    if field is None:
        field = ScalarField.COMPLEX if np.iscomplexobj(arr) else ScalarField.REAL
    field = ScalarField.coerce(field)
    arr = arr.astype(field.dtype)
    rows, cols = arr.shape
    lines = [_HEADER, f"{field.value},{rows},{cols}"]
    if field.is_real:
        lines.append(",".join(f"c{j}" for j in range(cols)))
        for i in range(rows):
            lines.append(",".join(repr(float(v)) for v in arr[i]))
    else:
        lines.append(",".join(f"c{j}_re,c{j}_im" for j in range(cols)))
        for i in range(rows):
            parts = []
            for v in arr[i]:
                parts.append(repr(float(v.real)))
                parts.append(repr(float(v.imag)))
            lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def save_matrix(path, arr, field=None) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_matrix(arr, field))


def _fail(path, lineno, msg):
    raise ConfigError(f"{path}: {msg}", line=lineno)


def load_matrix(path):
    """Read a matrix file; returns (array, field)."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from exc
    lines = [ln for ln in lines if ln.strip()]
    if len(lines) < 3:
        _fail(path, 1, "file too short for the matrix format")
    if lines[0].strip() != _HEADER:
        _fail(path, 1, f"expected header {_HEADER!r}, got {lines[0]!r}")
    meta = [p.strip() for p in lines[1].split(",")]
    if len(meta) != 3:
        _fail(path, 2, f"expected 'field,rows,cols' values, got {lines[1]!r}")
    try:
        field = ScalarField.coerce(meta[0])
    except ValueError as exc:
        _fail(path, 2, str(exc))
    try:
        rows, cols = int(meta[1]), int(meta[2])
    except ValueError:
        _fail(path, 2, f"rows/cols must be integers, got {meta[1]!r},{meta[2]!r}")
    if rows < 0 or cols < 1:
        _fail(path, 2, f"invalid dimensions {rows}x{cols}")
    per_row = cols if field.is_real else 2 * cols
    names = [p.strip() for p in lines[2].split(",")]
    if len(names) != per_row:
        _fail(path, 3, f"expected {per_row} column names, got {len(names)}")
    if len(lines) != 3 + rows:
        _fail(path, len(lines), f"expected {rows} data rows, found {len(lines) - 3}")
    data = np.empty((rows, per_row))
    for i, ln in enumerate(lines[3:]):
        parts = ln.split(",")
        if len(parts) != per_row:
            _fail(path, 4 + i, f"expected {per_row} values, got {len(parts)}")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError:
            _fail(path, 4 + i, f"non-numeric value in row: {ln!r}")
    if not np.all(np.isfinite(data)):
        _fail(path, 4, "matrix contains NaN or Inf entries")
    if field.is_real:
        return data, field
    return data[:, 0::2] + 1j * data[:, 1::2], field


def save_vector(path, vec, field=None) -> None:
    save_matrix(path, np.asarray(vec)[:, None] if np.asarray(vec).ndim == 1 else vec, field)


def load_vector(path):
    """Read a one-column matrix file back as a flat vector."""
    arr, field = load_matrix(path)
    if arr.shape[1] != 1:
        raise ConfigError(f"{path}: expected a single-column vector file, got {arr.shape[1]} columns")
    return arr[:, 0], field
