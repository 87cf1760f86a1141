"""Command-line interface: manifest in, FVEC feature file + sidecar out.

Rows are produced in manifest order regardless of batch size. A metadata
sidecar (<out>.meta.json) records the backend, model, pooling, and
extraction date for every file written.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from .acoustic import AudioReadError, LogMelEncoder, Wav2Vec2Encoder
from .io import ManifestReadError, read_manifest, write_fvec
from .speaker import (
    EnrollmentAudioMissingError,
    SpeakerTable,
    UnknownSpeakerError,
)
from .text import (
    HashedNgramTextEncoder,
    ModelLoadError,
    TextEncodeError,
    TransformersTextEncoder,
)

# pretrained checkpoints are configuration; these are only defaults for the
# optional model-backed backends
DEFAULT_TEXT_MODEL = "bert-base-uncased"
DEFAULT_ACOUSTIC_MODEL = "facebook/wav2vec2-base"


def _batched(items, size):
    for lo in range(0, len(items), size):
        yield items[lo:lo + size]


def _write_sidecar(out: Path, rows: int, dim: int, backend: str, manifest: Path,
                   pooling: str, layer: str, extra: dict | None = None) -> None:
    meta = {
        "backend": backend,
        "pooling": pooling,
        "layer": layer,
        "rows": rows,
        "dim": dim,
        "source_manifest": str(manifest),
        "extracted_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    Path(str(out) + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )


def cmd_linguistic(args: argparse.Namespace) -> int:
    records = read_manifest(args.manifest)
    texts = []
    for row, rec in enumerate(records):
        if rec.text is None or not rec.text.strip():
            print(f"error: record {rec.id!r} (row {row}) has no text", file=sys.stderr)
            return 1
        texts.append(rec.text)
    if args.backend == "transformers":
        encoder = TransformersTextEncoder(args.model)
        layer = "last_hidden_state"
    else:
        encoder = HashedNgramTextEncoder(dim=args.dim)
        layer = "n/a"
    blocks = [encoder.encode_batch(batch) for batch in _batched(texts, args.batch_size)]
    rows = np.vstack(blocks)
    write_fvec(rows, args.out)
    _write_sidecar(args.out, rows.shape[0], rows.shape[1], encoder.name,
                   args.manifest, pooling="mean over token vectors", layer=layer)
    print(f"wrote {args.out}: {rows.shape[0]}x{rows.shape[1]} ({encoder.name})")
    return 0


def cmd_speaker(args: argparse.Namespace) -> int:
    records = read_manifest(args.manifest)
    labels = [rec.speaker for rec in records]
    if args.table is not None:
        table = SpeakerTable.from_json(args.table)
    elif args.enroll_dir is not None:
        table = SpeakerTable.from_enrollment_dir(
            labels, args.enroll_dir, audio_ext=args.audio_ext, n_mels=args.mels
        )
    else:
        table = SpeakerTable.from_labels(labels, dim=args.dim)
    rows = table.rows_for(labels)
    write_fvec(rows, args.out)
    _write_sidecar(args.out, rows.shape[0], rows.shape[1], table.name,
                   args.manifest, pooling="one vector per speaker", layer="n/a",
                   extra={"n_speakers": len(set(labels))})
    print(f"wrote {args.out}: {rows.shape[0]}x{rows.shape[1]} ({table.name})")
    return 0


def cmd_acoustic(args: argparse.Namespace) -> int:
    records = read_manifest(args.manifest)
    paths = [Path(args.audio_dir) / f"{rec.id}{args.audio_ext}" for rec in records]
    missing = [p for p in paths if not p.exists()]
    if missing:
        print(f"error: missing audio: {missing[0]}", file=sys.stderr)
        return 1
    if args.backend == "wav2vec2":
        encoder = Wav2Vec2Encoder(args.model)
        layer = "last_hidden_state"
    else:
        encoder = LogMelEncoder(n_mels=args.mels)
        layer = "log-mel power"
    blocks = [encoder.encode_batch(batch) for batch in _batched(paths, args.batch_size)]
    rows = np.vstack(blocks)
    write_fvec(rows, args.out)
    _write_sidecar(args.out, rows.shape[0], rows.shape[1], encoder.name,
                   args.manifest, pooling="mean over frames", layer=layer)
    print(f"wrote {args.out}: {rows.shape[0]}x{rows.shape[1]} ({encoder.name})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featurize",
        description="Produce FVEC feature files from a dataset manifest.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("linguistic", help="sentence vectors from record texts")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--backend", choices=["hashed-ngram", "transformers"],
                   default="hashed-ngram")
    p.add_argument("--model", default=DEFAULT_TEXT_MODEL,
                   help="checkpoint for the transformers backend")
    p.add_argument("--dim", type=int, default=256,
                   help="hashed-ngram output dimension")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_linguistic)

    p = sub.add_parser("speaker", help="one identity vector per speaker")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--table", type=Path,
                   help="JSON file mapping speaker label to enrollment vector")
    p.add_argument("--enroll-dir", type=Path,
                   help="directory with one <label><ext> clip per speaker")
    p.add_argument("--audio-ext", default=".wav")
    p.add_argument("--dim", type=int, default=512,
                   help="label-hash output dimension")
    p.add_argument("--mels", type=int, default=64,
                   help="mel bands for enrollment encoding")
    p.set_defaults(func=cmd_speaker)

    p = sub.add_parser("acoustic", help="clip vectors from audio files")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--audio-dir", type=Path, required=True,
                   help="directory with one <id><ext> clip per record")
    p.add_argument("--audio-ext", default=".wav")
    p.add_argument("--backend", choices=["logmel", "wav2vec2"], default="logmel")
    p.add_argument("--model", default=DEFAULT_ACOUSTIC_MODEL,
                   help="checkpoint for the wav2vec2 backend")
    p.add_argument("--mels", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=8)
    p.set_defaults(func=cmd_acoustic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        ManifestReadError,
        TextEncodeError,
        AudioReadError,
        UnknownSpeakerError,
        EnrollmentAudioMissingError,
        ModelLoadError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
