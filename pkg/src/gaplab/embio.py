"""Embedding matrix file IO.

Two interchange formats:

* MMEB: a small binary container. Header = magic ``MMEB`` (4 bytes),
  format version (u32), rows (u64), cols (u64), dtype tag (u32, 1 =
  32-bit float), all little-endian; then the payload, row-major
  little-endian float32. 28 header bytes total.
* CSV: one row per line, comma-separated decimal floats, optional header
  line. Values are written with 17 significant digits so float64 survives
  a round trip exactly.

Matrices are stored in 32-bit floats in MMEB (the common export precision
for embedding dumps) and computed on in 64-bit; CSV carries full float64.
All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .linalg import EmbeddingMatrix, as_array

__all__ = [
    "EmbeddingFileError",
    "FormatError",
    "TruncatedPayloadError",
    "NonFiniteValueError",
    "RaggedCsvError",
    "MAGIC",
    "VERSION",
    "DTYPE_FLOAT32",
    "read_mmeb",
    "write_mmeb",
    "read_csv",
    "write_csv",
    "ingest",
    "export",
]

MAGIC = b"MMEB"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sIQQI")


class EmbeddingFileError(ValueError):
    """Base class for malformed embedding files."""


class FormatError(EmbeddingFileError):
    """Bad magic, unsupported version, or unknown dtype tag."""


class TruncatedPayloadError(EmbeddingFileError):
    """Payload shorter than the header promises."""


class NonFiniteValueError(EmbeddingFileError):
    """A NaN or infinity in the payload, reported with row and column."""


class RaggedCsvError(EmbeddingFileError):
    """CSV rows with inconsistent column counts."""


def _atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-emb-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_finite(values: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        r, c = bad[0]
        raise NonFiniteValueError(f"non-finite value at row {r}, col {c}")


def write_mmeb(matrix, path: str) -> None:
    """Write a matrix as MMEB (float32 payload, atomic)."""
    values = as_array(matrix)
    _check_finite(values)
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    header = _HEADER.pack(MAGIC, VERSION, values.shape[0], values.shape[1], DTYPE_FLOAT32)
    _atomic_write(path, header + payload)


def read_mmeb(path: str) -> EmbeddingMatrix:
    """Read an MMEB file back into a float64 EmbeddingMatrix."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncatedPayloadError(
            f"file holds {len(blob)} bytes, shorter than the {_HEADER.size}-byte header"
        )
    magic, version, rows, cols, dtype = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    if dtype != DTYPE_FLOAT32:
        raise FormatError(f"unknown dtype tag {dtype}, expected {DTYPE_FLOAT32}")
    expected = rows * cols * 4
    actual = len(blob) - _HEADER.size
    if actual != expected:
        raise TruncatedPayloadError(f"payload holds {actual} bytes, expected {expected}")
    values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(rows, cols)
    values = values.astype(np.float64)
    _check_finite(values)
    return EmbeddingMatrix(values)


def write_csv(matrix, path: str) -> None:
    """Write a matrix as CSV with 17-significant-digit decimal values."""
    values = as_array(matrix)
    _check_finite(values)
    lines = [",".join(f"{v:.17g}" for v in row) for row in values]
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def _parse_csv_row(line: str):
    try:
        return [float(tok) for tok in line.split(",")]
    except ValueError:
        return None


def read_csv(path: str) -> EmbeddingMatrix:
    """Read a CSV matrix; a non-numeric first line is treated as a header."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise FormatError("empty CSV file")
    rows = []
    first = _parse_csv_row(lines[0])
    start = 0 if first is not None else 1
    if start == 1 and len(lines) == 1:
        raise FormatError("CSV holds only a header line")
    for i, line in enumerate(lines[start:], start=start):
        row = _parse_csv_row(line)
        if row is None:
            raise RaggedCsvError(f"unparseable value on line {i + 1}")
        rows.append(row)
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedCsvError(f"line {start + i + 1} has {len(row)} columns, expected {width}")
    values = np.asarray(rows, dtype=np.float64)
    _check_finite(values)
    return EmbeddingMatrix(values)


def ingest(path: str, format: str) -> EmbeddingMatrix:
    """Load an embedding matrix from ``path`` in the named format."""
    if format == "mmeb":
        return read_mmeb(path)
    if format == "csv":
        return read_csv(path)
    raise ValueError(f"unknown embedding file format {format!r}")


def export(matrix, path: str, format: str) -> None:
    """Write an embedding matrix to ``path`` in the named format."""
    if format == "mmeb":
        write_mmeb(matrix, path)
    elif format == "csv":
        write_csv(matrix, path)
    else:
        raise ValueError(f"unknown embedding file format {format!r}")
