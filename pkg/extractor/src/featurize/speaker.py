"""Speaker embeddings: one identity vector per speaker, repeated per
utterance so that rows of the same speaker are bitwise identical.

Three table sources:
  * label-hash  deterministic unit vector derived from the label alone
  * json table  producer-supplied {"label": [floats]} enrollment vectors
  * enrollment  one audio clip per speaker, encoded with the acoustic
                backend

All vectors are re-normalized to unit length on the way out.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .acoustic import LogMelEncoder


class UnknownSpeakerError(Exception):
    def __init__(self, label: str):
        super().__init__(f"speaker {label!r} has no enrollment vector")
        self.label = label


class EnrollmentAudioMissingError(Exception):
    def __init__(self, label: str, path: Path):
        super().__init__(f"speaker {label!r}: enrollment audio missing at {path}")
        self.label = label


def _label_vector(label: str, dim: int) -> np.ndarray:
    # counter-mode hashing expands the label into dim stable floats
    values = np.empty(dim, dtype=np.float64)
    for block in range((dim + 7) // 8):
        digest = hashlib.blake2b(
            f"spk:{label}:{block}".encode("utf-8"), digest_size=32
        ).digest()
        for j in range(8):
            k = block * 8 + j
            if k >= dim:
                break
            word = int.from_bytes(digest[j * 4:(j + 1) * 4], "little")
            values[k] = word / 2**31 - 1.0
    return values / np.linalg.norm(values)


class SpeakerTable:
    """Label -> unit vector lookup."""

    def __init__(self, vectors: dict[str, np.ndarray], name: str):
        self.name = name
        self.dim = len(next(iter(vectors.values())))
        self._vectors = {}
        for label, vec in vectors.items():
            v = np.asarray(vec, dtype=np.float64)
            norm = np.linalg.norm(v)
            if norm == 0.0 or v.shape != (self.dim,):
                raise ValueError(f"speaker {label!r}: bad enrollment vector")
            self._vectors[label] = (v / norm).astype(np.float32)

    @classmethod
    def from_labels(cls, labels: list[str], dim: int = 512) -> "SpeakerTable":
        unique = sorted(set(labels))
        return cls(
            {label: _label_vector(label, dim) for label in unique},
            name="label-hash-v1",
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "SpeakerTable":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(obj, dict) or not obj:
            raise ValueError(f"{path}: expected a non-empty speaker->vector object")
        return cls(
            {label: np.asarray(vec, dtype=np.float64) for label, vec in obj.items()},
            name=f"table:{Path(path).name}",
        )

    @classmethod
    def from_enrollment_dir(
        cls,
        labels: list[str],
        directory: str | Path,
        audio_ext: str = ".wav",
        n_mels: int = 64,
    ) -> "SpeakerTable":
        encoder = LogMelEncoder(n_mels=n_mels)
        directory = Path(directory)
        vectors = {}
        for label in sorted(set(labels)):
            path = directory / f"{label}{audio_ext}"
            if not path.exists():
                raise EnrollmentAudioMissingError(label, path)
            vectors[label] = encoder.encode_path(path).astype(np.float64)
        return cls(vectors, name=f"enroll:{encoder.name}")

    def lookup(self, label: str) -> np.ndarray:
        try:
            return self._vectors[label]
        except KeyError:
            raise UnknownSpeakerError(label) from None

    def rows_for(self, labels: list[str]) -> np.ndarray:
        return np.stack([self.lookup(label) for label in labels])
