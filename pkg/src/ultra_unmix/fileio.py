"""On-disk formats: raw float64 cubes and small CSV helpers.

Cube files carry a magic line, an ASCII shape header, and the raw
little-endian float64 payload in C order, so a write/read round trip is
bitwise lossless.  Endmember matrices travel as plain CSV with one row
per band.
"""

import csv
import io

import numpy as np

from .exceptions import FileFormatError
from .tensor_ops import as_tensor3

__all__ = ["MAGIC", "write_cube", "read_cube",
           "write_endmembers_csv", "read_endmembers_csv", "read_value_csv"]

MAGIC = b"HCUBE1\n"


def write_cube(path, T):
    """Write a third-order tensor to `path` in the raw cube format."""
    T = as_tensor3(T, name="cube")
    n1, n2, n3 = T.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{n1} {n2} {n3} f64\n".encode("ascii"))
        fh.write(T.astype("<f8", copy=False).tobytes(order="C"))


def read_cube(path):
    """Read a cube file back into a float64 array of shape (n1, n2, n3)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise FileFormatError(f"{path}: not a cube file (bad magic)")
    nl = blob.find(b"\n", len(MAGIC))
    if nl < 0:
        raise FileFormatError(f"{path}: truncated header")
    fields = blob[len(MAGIC):nl].decode("ascii", errors="replace").split()
    if len(fields) != 4 or fields[3] != "f64":
        raise FileFormatError(f"{path}: malformed header {fields!r}")
    try:
        dims = [int(f) for f in fields[:3]]
    except ValueError as err:
        raise FileFormatError(f"{path}: non-integer dimensions {fields[:3]!r}") from err
    if min(dims) < 1:
        raise FileFormatError(f"{path}: nonpositive dimensions {dims}")
    payload = blob[nl + 1:]
    expect = 8 * dims[0] * dims[1] * dims[2]
    if len(payload) != expect:
        raise FileFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expect}"
        )
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return flat.reshape(dims)


def write_endmembers_csv(path, M, header=True):
    """Write an endmember matrix as CSV, one row per band.

    Values are written with `repr`, which round-trips float64 exactly.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or min(M.shape) < 1:
        raise FileFormatError(f"endmember matrix must be 2-D nonempty, got {M.shape}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"endmember_{r + 1}" for r in range(M.shape[1])])
        for row in M:
            writer.writerow([repr(float(v)) for v in row])


def _parse_rows(text, path):
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise FileFormatError(f"{path}: empty file")
    return rows


def read_endmembers_csv(path):
    """Read an endmember CSV (header row optional) into an (L, R) array."""
    with open(path, "r", newline="") as fh:
        rows = _parse_rows(fh.read(), path)
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        rows = rows[1:]
        if not rows:
            raise FileFormatError(f"{path}: header but no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise FileFormatError(
                f"{path}: row {i + 1} has {len(row)} fields, expected {width}"
            )
        try:
            out[i] = [float(v) for v in row]
        except ValueError as err:
            raise FileFormatError(f"{path}: unparseable value in row {i + 1}") from err
    if not np.all(np.isfinite(out)):
        raise FileFormatError(f"{path}: non-finite values")
    return out


def read_value_csv(path):
    """Read a one-value-per-line CSV (header optional) into a 1-D array.

    Infinities are accepted; they appear in SRE lists from noiseless runs.
    """
    with open(path, "r", newline="") as fh:
        rows = _parse_rows(fh.read(), path)
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1
    values = []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != 1:
            raise FileFormatError(f"{path}: line {i} has {len(row)} fields, expected 1")
        try:
            values.append(float(row[0]))
        except ValueError as err:
            raise FileFormatError(f"{path}: unparseable value on line {i}") from err
    if not values:
        raise FileFormatError(f"{path}: no data lines")
    return np.asarray(values, dtype=np.float64)
