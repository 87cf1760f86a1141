"""Dataset manifest model and line-delimited JSON I/O.

A manifest is a UTF-8 text file with one JSON object per line and LF line
endings. Each object has the keys ``id``, ``speaker``, ``duration_sec``,
``phonemes`` (array of strings) and an optional ``text``. Record order is
significant: feature matrices are aligned to manifests by position.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional


class ManifestError(Exception):
    """Base class for manifest loading and validation failures."""


class ManifestParseError(ManifestError):
    """A line is not a well-formed record object."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateIdError(ManifestError):
    """Two records share the same id."""

    def __init__(self, record_id: str, line_no: int):
        super().__init__(f"duplicate utterance id {record_id!r} at line {line_no}")
        self.record_id = record_id
        self.line_no = line_no


class RecordValidationError(ManifestError):
    """A parsed record violates a field invariant."""

    def __init__(self, record_id: str, reason: str):
        super().__init__(f"record {record_id!r}: {reason}")
        self.record_id = record_id
        self.reason = reason


class EmptyManifestError(ManifestError):
    """The manifest contains no records."""


@dataclass(frozen=True)
class UtteranceRecord:
    """One corpus item: identifier, speaker label, duration and phoneme tokens.

    ``text`` is carried for downstream producers but ignored by every
    selection objective.
    """

    id: str
    speaker: str
    duration_sec: float
    phonemes: tuple[str, ...]
    text: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise RecordValidationError(str(self.id), "id must be a non-empty string")
        if not isinstance(self.speaker, str) or not self.speaker:
            raise RecordValidationError(self.id, "speaker must be a non-empty string")
        d = self.duration_sec
        if isinstance(d, bool) or not isinstance(d, (int, float)):
            raise RecordValidationError(self.id, "duration_sec must be a number")
        d = float(d)
        if not (d > 0.0) or d != d or d in (float("inf"), float("-inf")):
            raise RecordValidationError(
                self.id, f"duration_sec must be a finite positive number, got {d!r}"
            )
        object.__setattr__(self, "duration_sec", d)
        object.__setattr__(self, "phonemes", tuple(self.phonemes))
        for tok in self.phonemes:
            if not isinstance(tok, str) or not tok:
                raise RecordValidationError(self.id, "phoneme tokens must be non-empty strings")
            if any(ch.isspace() for ch in tok):
                raise RecordValidationError(
                    self.id, f"phoneme token {tok!r} contains whitespace"
                )
        if self.text is not None and not isinstance(self.text, str):
            raise RecordValidationError(self.id, "text must be a string when present")


@dataclass(frozen=True)
class Manifest:
    """Immutable, ordered collection of utterance records.

    Inventories are derived from the records and sorted by codepoint so
    they are deterministic regardless of record order.
    """

    records: tuple[UtteranceRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen: dict[str, int] = {}
        for line_no, rec in enumerate(self.records, start=1):
            if rec.id in seen:
                raise DuplicateIdError(rec.id, line_no)
            seen[rec.id] = line_no

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def phoneme_inventory(self) -> tuple[str, ...]:
        return tuple(sorted({tok for rec in self.records for tok in rec.phonemes}))

    @cached_property
    def speaker_inventory(self) -> tuple[str, ...]:
        return tuple(sorted({rec.speaker for rec in self.records}))

    @cached_property
    def total_duration_sec(self) -> float:
        return float(sum(rec.duration_sec for rec in self.records))

    def total_duration(self, indices: Iterable[int]) -> float:
        """Sum of duration_sec over an index set; the empty set sums to 0."""
        total = 0.0
        for i in sorted(set(indices)):
            if not 0 <= i < len(self.records):
                raise IndexError(f"record index {i} out of range for {len(self.records)} records")
            total += self.records[i].duration_sec
        return total

    def digest(self) -> str:
        """Hex digest over the ordered, fully serialized records."""
        h = hashlib.sha256()
        for rec in self.records:
            h.update(json.dumps(_record_obj(rec), ensure_ascii=False).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()


_REQUIRED_KEYS = ("id", "speaker", "duration_sec", "phonemes")
_ALLOWED_KEYS = frozenset(_REQUIRED_KEYS) | {"text"}


def _reject_nonfinite(token: str):
    raise ValueError(f"non-finite number {token!r} is not allowed")


def _parse_line(line_no: int, line: str) -> UtteranceRecord:
    try:
        obj = json.loads(line, parse_constant=_reject_nonfinite)
    except ValueError as exc:
        raise ManifestParseError(line_no, f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ManifestParseError(line_no, "expected a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise ManifestParseError(line_no, f"missing keys: {', '.join(missing)}")
    unknown = sorted(set(obj) - _ALLOWED_KEYS)
    if unknown:
        raise ManifestParseError(line_no, f"unknown keys: {', '.join(unknown)}")
    if not isinstance(obj["phonemes"], list):
        raise ManifestParseError(line_no, "phonemes must be an array of strings")
    return UtteranceRecord(
        id=obj["id"],
        speaker=obj["speaker"],
        duration_sec=obj["duration_sec"],
        phonemes=tuple(obj["phonemes"]),
        text=obj.get("text"),
    )


def load_manifest(path: str | Path) -> Manifest:
    """Load a manifest file, validating every record.

    Raises ManifestParseError (with line number), RecordValidationError,
    DuplicateIdError or EmptyManifestError.
    """
    path = Path(path)
    records: list[UtteranceRecord] = []
    seen: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped:
                raise ManifestParseError(line_no, "blank line")
            rec = _parse_line(line_no, stripped)
            if rec.id in seen:
                raise DuplicateIdError(rec.id, line_no)
            seen[rec.id] = line_no
            records.append(rec)
    if not records:
        raise EmptyManifestError(f"{path}: manifest contains no records")
    return Manifest(records=tuple(records))


def _record_obj(rec: UtteranceRecord) -> dict:
    obj: dict = {
        "id": rec.id,
        "speaker": rec.speaker,
        "duration_sec": rec.duration_sec,
        "phonemes": list(rec.phonemes),
    }
    if rec.text is not None:
        obj["text"] = rec.text
    return obj


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest that load_manifest reads back identically."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for rec in manifest.records:
            f.write(json.dumps(_record_obj(rec), ensure_ascii=False))
            f.write("\n")
