"""Shared fixture builders and naive oracles for the test suite.

The oracles recompute objectives from their definitions (explicit pairwise
sums, from-scratch count tables) so they stay independent of the moment
accumulator and the incremental selector paths they check.
"""

from __future__ import annotations

import math

import numpy as np

from coresel import FeatureMatrix, Manifest, UtteranceRecord

# Two floats are treated as tied when they agree to this relative window;
# integer-count entropies and random-vector gains are far apart otherwise.
TIE_RTOL = 1e-11


def build_manifest(
    n: int,
    rng: np.random.Generator,
    n_speakers: int = 3,
    phoneme_pool: tuple[str, ...] = ("a", "e", "i", "k", "s", "t"),
    max_tokens: int = 8,
    duration_range: tuple[float, float] = (1.0, 5.0),
) -> Manifest:
    records = []
    for i in range(n):
        n_tok = int(rng.integers(0, max_tokens + 1))
        toks = tuple(phoneme_pool[int(j)] for j in rng.integers(0, len(phoneme_pool), n_tok))
        records.append(
            UtteranceRecord(
                id=f"utt{i:04d}",
                speaker=f"spk{int(rng.integers(0, n_speakers)):02d}",
                duration_sec=float(rng.uniform(*duration_range)),
                phonemes=toks,
            )
        )
    return Manifest(records=tuple(records))


def uniform_duration_manifest(n: int, duration: float = 1.0) -> Manifest:
    records = tuple(
        UtteranceRecord(id=f"u{i}", speaker="s0", duration_sec=duration, phonemes=("a",))
        for i in range(n)
    )
    return Manifest(records=records)


def random_features(n: int, dim: int, rng: np.random.Generator) -> FeatureMatrix:
    return FeatureMatrix.from_array(rng.normal(size=(n, dim)))


def unit_rows(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    X = rng.normal(size=(n, dim))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# naive oracles
# ---------------------------------------------------------------------------

def pairwise_sq_dist_sum(vectors: np.ndarray, x: np.ndarray) -> float:
    """Sum over the set of ||x - y||^2, one explicit distance at a time."""
    total = 0.0
    for y in np.asarray(vectors, dtype=np.float64):
        diff = np.asarray(x, dtype=np.float64) - y
        total += float(diff @ diff)
    return total


def brute_force_spread(vectors: np.ndarray) -> float:
    """Double loop over all ordered pairs of ||x - y||^2."""
    V = np.asarray(vectors, dtype=np.float64)
    total = 0.0
    for a in V:
        for b in V:
            diff = a - b
            total += float(diff @ diff)
    return total


def exhaustive_min_sq_dist(vectors: np.ndarray, x: np.ndarray) -> float:
    V = np.asarray(vectors, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    return min(float((x - y) @ (x - y)) for y in V)


def entropy_naive(counts: dict[str, int]) -> float:
    """Base-2 entropy computed straight from the definition."""
    total = sum(counts.values())
    if total == 0:
        return 0.0
    h = 0.0
    for tok in sorted(counts):
        c = counts[tok]
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def tied_argmax_set(values: np.ndarray) -> list[int]:
    """Indices whose value matches the maximum within TIE_RTOL."""
    values = np.asarray(values, dtype=np.float64)
    vmax = float(np.max(values))
    window = TIE_RTOL * max(1.0, abs(vmax))
    return [int(i) for i in np.flatnonzero(values >= vmax - window)]


# ---------------------------------------------------------------------------
# greedy-step replay: every accepted pick must be the lowest-index argmax of
# the naively recomputed objective over the remaining candidates
# ---------------------------------------------------------------------------

def check_diversity_steps(features: FeatureMatrix, result) -> None:
    X = features.data.astype(np.float64)
    selected: list[int] = []
    for step_no, idx in enumerate(result.indices):
        if step_no > 0:
            remaining = [i for i in range(X.shape[0]) if i not in selected]
            gains = np.array(
                [pairwise_sq_dist_sum(X[selected], X[i]) for i in remaining]
            )
            tied = tied_argmax_set(gains)
            assert idx == remaining[min(tied)], (
                f"step {step_no}: picked {idx}, oracle argmax "
                f"{remaining[min(tied)]}"
            )
        selected.append(idx)


def check_farthest_steps(features: FeatureMatrix, result) -> None:
    X = features.data.astype(np.float64)
    selected: list[int] = []
    for step_no, idx in enumerate(result.indices):
        if step_no > 0:
            remaining = [i for i in range(X.shape[0]) if i not in selected]
            dists = np.array(
                [exhaustive_min_sq_dist(X[selected], X[i]) for i in remaining]
            )
            tied = tied_argmax_set(dists)
            assert idx == remaining[min(tied)], (
                f"step {step_no}: picked {idx}, oracle argmax "
                f"{remaining[min(tied)]}"
            )
        selected.append(idx)


def check_entropy_steps(manifest: Manifest, result, with_speakers: bool) -> None:
    selected: list[int] = []
    for step_no, idx in enumerate(result.indices):
        remaining = [i for i in range(len(manifest.records)) if i not in selected]
        scores = []
        for i in remaining:
            subset = selected + [i]
            phoneme_counts: dict[str, int] = {}
            speaker_counts: dict[str, int] = {}
            for j in subset:
                rec = manifest.records[j]
                for tok in rec.phonemes:
                    phoneme_counts[tok] = phoneme_counts.get(tok, 0) + 1
                speaker_counts[rec.speaker] = speaker_counts.get(rec.speaker, 0) + 1
            score = entropy_naive(phoneme_counts)
            if with_speakers:
                score += entropy_naive(speaker_counts)
            scores.append(score)
        tied = tied_argmax_set(np.array(scores))
        assert idx == remaining[min(tied)], (
            f"step {step_no}: picked {idx}, oracle argmax {remaining[min(tied)]}"
        )
        selected.append(idx)
