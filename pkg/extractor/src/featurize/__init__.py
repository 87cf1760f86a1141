"""Per-utterance feature extraction to FVEC files."""

from .acoustic import LogMelEncoder, Wav2Vec2Encoder, read_wav_mono
from .io import ManifestRow, read_fvec, read_manifest, write_fvec
from .speaker import SpeakerTable
from .text import HashedNgramTextEncoder, TransformersTextEncoder

__version__ = "0.1.0"

__all__ = [
    "HashedNgramTextEncoder",
    "LogMelEncoder",
    "ManifestRow",
    "SpeakerTable",
    "TransformersTextEncoder",
    "Wav2Vec2Encoder",
    "read_fvec",
    "read_manifest",
    "read_wav_mono",
    "write_fvec",
]
