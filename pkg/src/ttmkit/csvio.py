"""
CSV files for map/tensor series and result tables.

Series file::

    # dt = 0.5
    # dim = 1
    k,i,j,re,im
    1,0,0,0.59496623263788781,0

Table file: ``# key = value`` comment lines, one header row, numeric rows.
Numbers use 17 significant digits so doubles round-trip exactly.
"""

import csv
import io
import os
import tempfile
from typing import Dict, Tuple

import numpy as np

from ttmkit.analysis import Table

SERIES_COLUMNS = ["k", "i", "j", "re", "im"]


class CsvFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_text(dt: float, mats: np.ndarray, content: str = "maps") -> str:
    mats = np.asarray(mats, dtype=complex)
    n, dim, _ = mats.shape
    buf = io.StringIO()
    buf.write(f"# dt = {fmt(dt)}\n# dim = {dim}\n# content = {content}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for k in range(n):
        for i in range(dim):
            for j in range(dim):
                z = mats[k, i, j]
                w.writerow([k + 1, i, j, fmt(z.real), fmt(z.imag)])
    return buf.getvalue()


def write_series(path, dt: float, mats, content: str = "maps") -> None:
    atomic_write(path, series_text(dt, mats, content))


def read_series(path) -> Tuple[float, np.ndarray]:
    """Parse a series file; returns ``(dt, array of shape (N, dim, dim))``."""
    meta: Dict[str, str] = {}
    entries = {}
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if fields != SERIES_COLUMNS:
                    raise CsvFormatError(path, lineno, f"expected header {','.join(SERIES_COLUMNS)}")
                header_seen = True
                continue
            if len(fields) != 5:
                raise CsvFormatError(path, lineno, f"expected 5 fields, got {len(fields)}")
            try:
                k, i, j = (int(f) for f in fields[:3])
                re, im = float(fields[3]), float(fields[4])
            except ValueError:
                raise CsvFormatError(path, lineno, "malformed number") from None
            if not (np.isfinite(re) and np.isfinite(im)):
                raise CsvFormatError(path, lineno, "non-finite value")
            if (k, i, j) in entries:
                raise CsvFormatError(path, lineno, f"duplicate entry ({k},{i},{j})")
            entries[(k, i, j)] = (complex(re, im), lineno)
    try:
        dt = float(meta["dt"])
        dim = int(meta["dim"])
    except (KeyError, ValueError):
        raise CsvFormatError(path, 1, "missing or malformed '# dt' / '# dim' header") from None
    if not (np.isfinite(dt) and dt > 0) or dim < 1:
        raise CsvFormatError(path, 1, "dt must be > 0 and dim >= 1")
    if not entries:
        raise CsvFormatError(path, 1, "no data rows")
    n = max(k for k, _, _ in entries)
    mats = np.zeros((n, dim, dim), dtype=complex)
    for (k, i, j), (z, lineno) in entries.items():
        if k < 1 or not (0 <= i < dim and 0 <= j < dim):
            raise CsvFormatError(path, lineno, f"index ({k},{i},{j}) out of range for dim {dim}")
        mats[k - 1, i, j] = z
    if len(entries) != n * dim * dim:
        raise CsvFormatError(path, 1, f"expected {n * dim * dim} entries for k=1..{n}, "
                                      f"found {len(entries)}")
    return dt, mats


def table_text(table: Table, meta: Dict[str, str] = None) -> str:
    buf = io.StringIO()
    merged = dict(table.meta)
    merged.update(meta or {})
    for key, value in merged.items():
        buf.write(f"# {key} = {value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_table(path, table: Table, meta: Dict[str, str] = None) -> None:
    atomic_write(path, table_text(table, meta))


def read_table(path) -> Table:
    meta = {}
    rows = []
    columns = None
    with open(path, newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif columns is None:
                columns = tuple(line.split(","))
            elif line:
                rows.append([float(x) for x in line.split(",")])
    return Table(columns, np.array(rows, dtype=float).reshape(-1, len(columns)), meta)
