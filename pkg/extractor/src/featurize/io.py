"""Manifest reading and FVEC writing.

These mirror the consumer toolkit's on-disk contracts: manifests are
line-delimited JSON objects (id, speaker, duration_sec, phonemes,
optional text); feature files are FVEC v1 (magic "FVEC", u32 version,
u64 rows, u32 dim, little-endian float32 payload, row-major). The
extractor talks to the selection toolkit only through these files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FVEC_MAGIC = b"FVEC"
FVEC_VERSION = 1
_HEADER = struct.Struct("<4sIQI")


class ManifestReadError(Exception):
    pass


@dataclass(frozen=True)
class ManifestRow:
    id: str
    speaker: str
    duration_sec: float
    phonemes: tuple[str, ...]
    text: str | None = None


def read_manifest(path: str | Path) -> list[ManifestRow]:
    """Parse manifest rows in file order."""
    rows: list[ManifestRow] = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                raise ManifestReadError(f"{path}: line {line_no}: blank line")
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise ManifestReadError(f"{path}: line {line_no}: {exc}") from exc
            try:
                rows.append(
                    ManifestRow(
                        id=str(obj["id"]),
                        speaker=str(obj["speaker"]),
                        duration_sec=float(obj["duration_sec"]),
                        phonemes=tuple(obj["phonemes"]),
                        text=obj.get("text"),
                    )
                )
            except KeyError as exc:
                raise ManifestReadError(
                    f"{path}: line {line_no}: missing key {exc}"
                ) from exc
    if not rows:
        raise ManifestReadError(f"{path}: no records")
    return rows


def write_fvec(rows: np.ndarray, path: str | Path) -> None:
    """Write a float32 matrix as an FVEC v1 file."""
    arr = np.ascontiguousarray(rows, dtype="<f4")
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix with positive dim, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite values")
    header = _HEADER.pack(FVEC_MAGIC, FVEC_VERSION, arr.shape[0], arr.shape[1])
    Path(path).write_bytes(header + arr.tobytes())


def read_fvec(path: str | Path) -> np.ndarray:
    """Read an FVEC v1 file back (used by tests and enrollment tables)."""
    raw = Path(path).read_bytes()
    magic, version, rows, dim = _HEADER.unpack_from(raw)
    if magic != FVEC_MAGIC or version != FVEC_VERSION:
        raise ValueError(f"{path}: not an FVEC v1 file")
    return np.frombuffer(raw[_HEADER.size:], dtype="<f4").reshape(rows, dim).copy()
