"""Subset quality metrics and report documents.

Metrics are pure functions of (manifest, features, indices): the method
that produced a subset never influences its metric values. Reports are
emitted as JSON documents (one object, ``report_version`` = 1) and
optionally as delimited tables for plotting.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .diversity import MomentAccumulator
from .features import FeatureMatrix, RowCountMismatchError
from .manifest import Manifest
from .selectors import CountTable, SelectionResult, entropy

REPORT_VERSION = 1
ENTROPY_BASE = 2.0


@dataclass(frozen=True)
class SubsetMetrics:
    """Quality metrics of one subset.

    ``diversity`` is the sum of squared pairwise distances over ordered
    pairs; ``mean_pairwise_sq_dist`` divides it by n*(n-1) for n >= 2.
    Both are None when no features were supplied.
    """

    n_utterances: int
    total_duration_sec: float
    n_speakers: int
    phoneme_entropy_bits: float
    speaker_entropy_bits: float
    phoneme_coverage: float
    diversity: Optional[float] = None
    mean_pairwise_sq_dist: Optional[float] = None


def evaluate_subset(
    manifest: Manifest,
    features: Optional[FeatureMatrix],
    indices: Iterable[int],
) -> SubsetMetrics:
    """Compute SubsetMetrics for an index set (deduplicated, order-free)."""
    idx = sorted(set(int(i) for i in indices))
    n_records = len(manifest.records)
    for i in idx:
        if not 0 <= i < n_records:
            raise IndexError(f"record index {i} out of range for {n_records} records")
    if features is not None and features.rows != n_records:
        raise RowCountMismatchError(
            f"feature matrix has {features.rows} rows, manifest has {n_records} records"
        )

    if not idx:
        return SubsetMetrics(
            n_utterances=0,
            total_duration_sec=0.0,
            n_speakers=0,
            phoneme_entropy_bits=0.0,
            speaker_entropy_bits=0.0,
            phoneme_coverage=0.0,
            diversity=0.0 if features is not None else None,
            mean_pairwise_sq_dist=0.0 if features is not None else None,
        )

    table = CountTable.from_subset(manifest, idx)
    full_inventory = manifest.phoneme_inventory
    if full_inventory:
        coverage = len(set(table.phoneme_counts)) / len(full_inventory)
    else:
        coverage = 1.0  # nothing to cover

    diversity_value: Optional[float] = None
    mean_sq: Optional[float] = None
    if features is not None:
        acc = MomentAccumulator.empty(features.dim)
        for i in idx:
            acc.absorb(features.data[i].astype(np.float64))
        diversity_value = acc.diversity_total()
        n = len(idx)
        mean_sq = diversity_value / (n * (n - 1)) if n >= 2 else 0.0

    return SubsetMetrics(
        n_utterances=len(idx),
        total_duration_sec=manifest.total_duration(idx),
        n_speakers=len(table.speaker_counts),
        phoneme_entropy_bits=entropy(table.phoneme_counts, base=ENTROPY_BASE),
        speaker_entropy_bits=entropy(table.speaker_counts, base=ENTROPY_BASE),
        phoneme_coverage=coverage,
        diversity=diversity_value,
        mean_pairwise_sq_dist=mean_sq,
    )


@dataclass(frozen=True)
class ComparisonTable:
    """One metrics row per method, ordered by method name."""

    rows: tuple[tuple[str, SubsetMetrics], ...]

    def to_csv(self) -> str:
        header = [
            "method", "n_utterances", "total_duration_sec", "n_speakers",
            "phoneme_entropy_bits", "speaker_entropy_bits", "phoneme_coverage",
            "diversity", "mean_pairwise_sq_dist",
        ]
        lines = [",".join(header)]
        for method, m in self.rows:
            d = asdict(m)
            lines.append(",".join([method] + [_csv_cell(d[k]) for k in header[1:]]))
        return "\n".join(lines) + "\n"

    def metrics_for(self, method: str) -> SubsetMetrics:
        for name, m in self.rows:
            if name == method:
                return m
        raise KeyError(method)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def compare_methods(
    results: Sequence[SelectionResult],
    manifest: Manifest,
    features: Optional[FeatureMatrix] = None,
) -> ComparisonTable:
    """Evaluate several selection results against one manifest."""
    digest = manifest.digest()
    rows = []
    for result in results:
        if result.manifest_digest != digest:
            raise ValueError(
                f"result for method {result.method!r} was computed against a "
                "different manifest"
            )
        rows.append((result.method, evaluate_subset(manifest, features, result.indices)))
    rows.sort(key=lambda item: item[0])
    return ComparisonTable(rows=tuple(rows))


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------

def _metrics_payload(metrics: SubsetMetrics) -> dict:
    return asdict(metrics)


def metrics_document(metrics: SubsetMetrics) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "entropy_base": ENTROPY_BASE,
        "metrics": _metrics_payload(metrics),
    }


def result_document(
    result: SelectionResult, manifest: Manifest, metrics: SubsetMetrics
) -> dict:
    """Full selection report: parameters, picks, per-step values, metrics."""
    return {
        "report_version": REPORT_VERSION,
        "method": result.method,
        "seed": result.seed,
        "t_max_sec": result.t_max_sec,
        "overflow_policy": result.overflow_policy.value,
        "manifest_digest": result.manifest_digest,
        "n_selected": len(result.indices),
        "indices": list(result.indices),
        "ids": [manifest.records[i].id for i in result.indices],
        "per_step": [
            {
                "index": s.index,
                "objective": s.objective,
                "cumulative_duration_sec": s.cumulative_duration,
            }
            for s in result.per_step
        ],
        "entropy_base": ENTROPY_BASE,
        "metrics": _metrics_payload(metrics),
    }


def write_document(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def read_result_indices(
    path: str | Path, manifest: Optional[Manifest] = None
) -> list[int]:
    """Selected indices from a selection report written by write_document.

    When a manifest is given and the report carries a manifest digest, the
    two must match.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or "indices" not in doc:
        raise ValueError(f"{path}: not a selection report (no 'indices' field)")
    if manifest is not None and doc.get("manifest_digest"):
        if doc["manifest_digest"] != manifest.digest():
            raise ValueError(
                f"{path}: selection was computed against a different manifest"
            )
    return [int(i) for i in doc["indices"]]


def read_indices_file(path: str | Path) -> list[int]:
    """Plain index list: one base-10 integer per line."""
    indices = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            indices.append(int(stripped))
        except ValueError:
            raise ValueError(f"{path}: line {line_no}: expected an integer, got {stripped!r}")
    return indices
