"""Dense per-utterance feature matrices and the FVEC binary file format.

FVEC layout (little-endian, no padding, no footer):

    magic   4 bytes  b"FVEC"
    version u32      1
    rows    u64
    dim     u32      > 0
    payload rows*dim IEEE-754 float32, row-major

Row ``i`` of a matrix corresponds to line ``i`` of the manifest it was
produced for; alignment is positional and checked by row count only.
Values are stored in 32-bit precision; selection arithmetic upcasts to
64-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"FVEC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQI")


class FeatureFileError(Exception):
    """Base class for feature-file format failures."""


class BadMagicError(FeatureFileError):
    """The file does not start with the FVEC magic bytes."""


class TruncatedPayloadError(FeatureFileError):
    """The payload holds fewer values than the header declares."""


class NonFiniteValueError(FeatureFileError):
    """A NaN or infinity was found in the payload."""

    def __init__(self, row: int, col: int):
        super().__init__(f"non-finite value at row {row}, column {col}")
        self.row = row
        self.col = col


class ZeroNormRowError(FeatureFileError):
    """A row with zero Euclidean norm cannot be normalized."""

    def __init__(self, row: int):
        super().__init__(f"row {row} has zero norm")
        self.row = row


class RowCountMismatchError(FeatureFileError):
    """Matrices being combined (or paired with a manifest) disagree on rows."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Immutable dense matrix of per-utterance feature vectors.

    ``data`` is float32, C-contiguous, shape (rows, dim) with dim > 0 and
    every value finite.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = self.data
        if not isinstance(arr, np.ndarray) or arr.ndim != 2:
            raise ValueError("feature data must be a 2-D array")
        if arr.shape[1] < 1:
            raise ValueError("feature dimension must be positive")
        if arr.dtype != np.float32 or not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            object.__setattr__(self, "data", arr)
        arr.setflags(write=False)

    @classmethod
    def from_array(cls, values) -> "FeatureMatrix":
        """Build a matrix from array-like input, rejecting non-finite values."""
        arr = np.ascontiguousarray(values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        _check_finite(arr)
        return cls(data=arr)

    @property
    def rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])


def _check_finite(arr: np.ndarray) -> None:
    finite = np.isfinite(arr)
    if finite.all():
        return
    flat = int(np.flatnonzero(~finite.ravel())[0])
    row, col = divmod(flat, arr.shape[1])
    raise NonFiniteValueError(row, col)


def load_features(path: str | Path) -> FeatureMatrix:
    """Read an FVEC file, validating header, payload length and finiteness."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an FVEC file (bad magic)")
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: truncated header")
    _, version, rows, dim = _HEADER.unpack_from(raw)
    if version != FORMAT_VERSION:
        raise FeatureFileError(f"{path}: unsupported format version {version}")
    if dim < 1:
        raise FeatureFileError(f"{path}: dimension must be positive, got {dim}")
    expected = rows * dim * 4
    payload = raw[_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload) // 4} values, "
            f"header declares {rows * dim}"
        )
    if len(payload) > expected:
        raise FeatureFileError(f"{path}: {len(payload) - expected} trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, dim)
    data = np.ascontiguousarray(data, dtype=np.float32)
    _check_finite(data)
    return FeatureMatrix(data=data)


def write_features(matrix: FeatureMatrix, path: str | Path) -> None:
    """Write a matrix in the FVEC format."""
    path = Path(path)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, matrix.rows, matrix.dim)
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    path.write_bytes(header + payload)


def normalize_rows(matrix: FeatureMatrix) -> FeatureMatrix:
    """Scale each row to unit Euclidean norm, preserving direction.

    Norms are computed in 64-bit; rows of zero norm raise ZeroNormRowError.
    """
    data64 = matrix.data.astype(np.float64)
    norms = np.linalg.norm(data64, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroNormRowError(int(zero[0]))
    out = (data64 / norms[:, None]).astype(np.float32)
    return FeatureMatrix(data=out)


def concat_features(parts: Sequence[FeatureMatrix]) -> FeatureMatrix:
    """Concatenate matrices column-wise, row by row, in list order.

    No re-normalization is applied: unit-norm parts yield rows whose
    squared norm is the number of parts.
    """
    if not parts:
        raise ValueError("concat_features requires at least one part")
    rows = parts[0].rows
    for k, part in enumerate(parts):
        if part.rows != rows:
            raise RowCountMismatchError(
                f"part {k} has {part.rows} rows, part 0 has {rows}"
            )
    return FeatureMatrix(data=np.hstack([p.data for p in parts]))
