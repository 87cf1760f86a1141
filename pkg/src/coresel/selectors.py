"""Budget-constrained subset selection methods.

Five methods share one loop shape: propose a candidate, check it against
the remaining duration budget, then accept, stop, or (under the skip
policy) drop it from contention and propose again.

* ``diversity``       greedy sum-of-squared-distance maximization; the
                      first pick is a uniform draw, every later pick is
                      the argmax of the moment-form marginal gain.
* ``farthest_point``  same loop with a max-min objective: the candidate
                      farthest from its nearest selected neighbour.
* ``phoneme_balance`` greedy phoneme-entropy maximization from the empty
                      set.
* ``input_balance``   greedy maximization of phoneme entropy plus
                      speaker-occurrence entropy.
* ``random``          uniform sampling without replacement (control).

Randomness comes from numpy's PCG64 generator seeded with the caller's
64-bit seed, so runs reproduce across machines. All candidate scans are
evaluated over fixed-size chunks; worker count changes scheduling only,
never arithmetic, and ties always resolve to the lowest manifest index.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, NamedTuple, Optional

import numpy as np

from .diversity import MomentAccumulator
from .features import FeatureMatrix, RowCountMismatchError
from .manifest import EmptyManifestError, Manifest

# Fixed scan granularity: chunk-local arithmetic is identical no matter how
# many workers process the chunks.
_SCAN_CHUNK = 8192
# Cache the float64 working copy of the feature rows up to this many bytes.
# The upcast from float32 storage is exact, so caching affects speed only.
_F64_CACHE_LIMIT = 2 * 1024**3
_LN2 = math.log(2.0)


class OverflowPolicy(str, Enum):
    """What to do when the proposed candidate would exceed the budget."""

    STOP_ON_FIRST_OVERFLOW = "stop_on_first_overflow"
    SKIP_AND_CONTINUE = "skip_and_continue"


@dataclass(frozen=True)
class SelectionBudget:
    """Total-duration budget in seconds plus the overflow policy."""

    t_max_sec: float
    overflow_policy: OverflowPolicy = OverflowPolicy.STOP_ON_FIRST_OVERFLOW

    def __post_init__(self):
        t = float(self.t_max_sec)
        if not math.isfinite(t) or t <= 0.0:
            raise ValueError(f"t_max_sec must be a finite positive number, got {t!r}")
        object.__setattr__(self, "t_max_sec", t)
        object.__setattr__(self, "overflow_policy", OverflowPolicy(self.overflow_policy))


class SelectionStep(NamedTuple):
    index: int
    objective: float
    cumulative_duration: float


@dataclass(frozen=True)
class SelectionResult:
    """Ordered selection with per-step diagnostics.

    ``per_step`` records, for each accepted index, the method's objective
    value after the add and the running total duration. ``manifest_digest``
    ties the result to the manifest it was computed against.
    """

    method: str
    indices: tuple[int, ...]
    per_step: tuple[SelectionStep, ...]
    seed: int
    t_max_sec: float
    overflow_policy: OverflowPolicy
    manifest_digest: str


@dataclass
class CountTable:
    """Phoneme-token and speaker occurrence counts for entropy objectives."""

    phoneme_counts: dict[str, int]
    speaker_counts: dict[str, int]
    total_phonemes: int
    total_utterances: int

    @classmethod
    def empty(cls) -> "CountTable":
        return cls({}, {}, 0, 0)

    @classmethod
    def from_subset(cls, manifest: Manifest, indices) -> "CountTable":
        table = cls.empty()
        for i in sorted(set(indices)):
            table.add(manifest.records[i])
        return table

    def add(self, record) -> None:
        for tok in record.phonemes:
            self.phoneme_counts[tok] = self.phoneme_counts.get(tok, 0) + 1
            self.total_phonemes += 1
        self.speaker_counts[record.speaker] = self.speaker_counts.get(record.speaker, 0) + 1
        self.total_utterances += 1


def entropy(counts: Mapping[str, float], base: float = 2.0) -> float:
    """Shannon entropy of the occurrence distribution in a count table.

    Probabilities are counts over their total; zero counts contribute
    nothing and an all-zero (or empty) table has entropy 0. Computed in
    log2 so dyadic distributions come out exact, then rescaled for other
    bases.
    """
    if not base > 1.0:
        raise ValueError(f"entropy base must be > 1, got {base!r}")
    total = 0.0
    for c in counts.values():
        if c < 0:
            raise ValueError(f"counts must be non-negative, got {c!r}")
        total += c
    if total == 0.0:
        return 0.0
    h = 0.0
    for c in counts.values():
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    if base == 2.0:
        return h
    return h / math.log2(base)


# ---------------------------------------------------------------------------
# shared loop machinery
# ---------------------------------------------------------------------------

def _require_records(manifest: Manifest) -> None:
    if len(manifest.records) == 0:
        raise EmptyManifestError("selection requires a non-empty manifest")


def _check_alignment(features: FeatureMatrix, manifest: Manifest) -> None:
    if features.rows != len(manifest.records):
        raise RowCountMismatchError(
            f"feature matrix has {features.rows} rows, manifest has "
            f"{len(manifest.records)} records"
        )


def _durations(manifest: Manifest) -> np.ndarray:
    return np.array([rec.duration_sec for rec in manifest.records], dtype=np.float64)


def _chunk_bounds(n: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + _SCAN_CHUNK, n)) for lo in range(0, n, _SCAN_CHUNK)]


def _draw_active(rng: np.random.Generator, active: np.ndarray) -> int:
    idxs = np.flatnonzero(active)
    return int(idxs[int(rng.integers(idxs.size))])


def _first_affordable_draw(
    rng: np.random.Generator,
    active: np.ndarray,
    durations: np.ndarray,
    t_max: float,
    skip: bool,
) -> Optional[int]:
    """Uniform initial draw; over-budget draws end selection or re-draw."""
    cand = _draw_active(rng, active)
    while durations[cand] > t_max:
        if not skip:
            return None
        active[cand] = False
        if not active.any():
            return None
        cand = _draw_active(rng, active)
    return cand


class _ChunkScanner:
    """Lowest-index argmax over active candidates, scanned in fixed chunks."""

    def __init__(self, n: int, threads: int = 1):
        self.bounds = _chunk_bounds(n)
        workers = max(1, int(threads))
        self._pool = (
            ThreadPoolExecutor(max_workers=workers)
            if workers > 1 and len(self.bounds) > 1
            else None
        )

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()

    def map(self, fn: Callable[[int, int], None]) -> None:
        """Apply fn to every chunk (used for in-place slice updates)."""
        if self._pool is None:
            for lo, hi in self.bounds:
                fn(lo, hi)
        else:
            list(self._pool.map(lambda b: fn(*b), self.bounds))

    def best(
        self, scores: Callable[[int, int], np.ndarray], active: np.ndarray
    ) -> Optional[tuple[float, int]]:
        def chunk_best(lo: int, hi: int) -> Optional[tuple[float, int]]:
            act = active[lo:hi]
            if not act.any():
                return None
            vals = np.where(act, scores(lo, hi), -np.inf)
            j = int(np.argmax(vals))
            return (float(vals[j]), lo + j)

        if self._pool is None:
            results = [chunk_best(lo, hi) for lo, hi in self.bounds]
        else:
            results = list(self._pool.map(lambda b: chunk_best(*b), self.bounds))
        best: Optional[tuple[float, int]] = None
        for r in results:  # chunk order keeps ties on the lowest index
            if r is not None and (best is None or r[0] > best[0]):
                best = r
        return best


def _next_affordable(
    propose: Callable[[], Optional[tuple[float, int]]],
    active: np.ndarray,
    cum: float,
    durations: np.ndarray,
    t_max: float,
    skip: bool,
) -> Optional[tuple[float, int]]:
    """Propose argmax winners until one fits the remaining budget.

    Faithful policy: the first over-budget winner ends selection. Skip
    policy: over-budget winners leave contention and the scan repeats.
    """
    while active.any():
        best = propose()
        if best is None:
            return None
        value, idx = best
        if cum + durations[idx] <= t_max:
            return best
        if not skip:
            return None
        active[idx] = False
    return None


def _make_result(
    method: str,
    steps: list[SelectionStep],
    seed: int,
    budget: SelectionBudget,
    manifest: Manifest,
) -> SelectionResult:
    return SelectionResult(
        method=method,
        indices=tuple(s.index for s in steps),
        per_step=tuple(steps),
        seed=int(seed),
        t_max_sec=budget.t_max_sec,
        overflow_policy=budget.overflow_policy,
        manifest_digest=manifest.digest(),
    )


# ---------------------------------------------------------------------------
# feature-space methods
# ---------------------------------------------------------------------------

class _Rows64:
    """64-bit view of the stored rows, served in fixed scan chunks.

    Chunks are pre-converted when the full copy fits _F64_CACHE_LIMIT;
    otherwise each request converts on the fly. Both paths produce
    bit-identical values (the float32 -> float64 upcast is exact).
    """

    def __init__(self, X: np.ndarray):
        self._X = X
        self.bounds = _chunk_bounds(X.shape[0])
        self._cache: dict[int, np.ndarray] | None = None
        if X.shape[0] * X.shape[1] * 8 <= _F64_CACHE_LIMIT:
            self._cache = {
                lo: np.ascontiguousarray(X[lo:hi], dtype=np.float64)
                for lo, hi in self.bounds
            }

    def chunk(self, lo: int, hi: int) -> np.ndarray:
        if self._cache is not None:
            return self._cache[lo]
        return np.ascontiguousarray(self._X[lo:hi], dtype=np.float64)

    def row(self, i: int) -> np.ndarray:
        return self._X[i].astype(np.float64)

    def sq_norms(self) -> np.ndarray:
        out = np.empty(self._X.shape[0], dtype=np.float64)
        for lo, hi in self.bounds:
            block = self.chunk(lo, hi)
            out[lo:hi] = np.einsum("ij,ij->i", block, block)
        return out


def select_diversity(
    features: FeatureMatrix,
    manifest: Manifest,
    budget: SelectionBudget,
    seed: int,
    threads: int = 1,
) -> SelectionResult:
    """Greedy spread maximization under a duration budget.

    The first pick is a uniform seeded draw; each later pick maximizes the
    sum of squared distances to the already-selected vectors, evaluated in
    O(rows * dim) per step from running moments. The per-step objective is
    the subset spread, accumulated as twice each accepted gain (equal to
    the closed form in exact arithmetic and monotone by construction).
    """
    _require_records(manifest)
    _check_alignment(features, manifest)
    X = features.data
    n, dim = X.shape
    durations = _durations(manifest)
    skip = budget.overflow_policy is OverflowPolicy.SKIP_AND_CONTINUE
    rng = np.random.Generator(np.random.PCG64(int(seed)))

    rows64 = _Rows64(X)
    sq = rows64.sq_norms()
    acc = MomentAccumulator.empty(dim)
    active = np.ones(n, dtype=bool)
    steps: list[SelectionStep] = []

    first = _first_affordable_draw(rng, active, durations, budget.t_max_sec, skip)
    if first is None:
        return _make_result("diversity", steps, seed, budget, manifest)

    scanner = _ChunkScanner(n, threads)
    try:
        cum = 0.0
        v_total = 0.0
        cand, gain = first, 0.0
        while True:
            active[cand] = False
            cum += float(durations[cand])
            v_total += 2.0 * gain
            acc.absorb(rows64.row(cand))
            steps.append(SelectionStep(cand, v_total, cum))
            if not active.any():
                break
            best = _next_affordable(
                lambda: scanner.best(
                    lambda lo, hi: acc.gains(rows64.chunk(lo, hi), sq[lo:hi]), active
                ),
                active, cum, durations, budget.t_max_sec, skip,
            )
            if best is None:
                break
            gain, cand = best
    finally:
        scanner.close()
    return _make_result("diversity", steps, seed, budget, manifest)


def select_farthest_point(
    features: FeatureMatrix,
    manifest: Manifest,
    budget: SelectionBudget,
    seed: int,
    threads: int = 1,
) -> SelectionResult:
    """Greedy max-min selection: each pick is the candidate farthest from
    its nearest selected neighbour (squared Euclidean distance).

    Loop, seeding and budget handling match select_diversity; only the
    objective differs. The per-step objective is the accepted candidate's
    distance to the nearest previously selected vector (0 for the first).
    """
    _require_records(manifest)
    _check_alignment(features, manifest)
    X = features.data
    n = X.shape[0]
    durations = _durations(manifest)
    skip = budget.overflow_policy is OverflowPolicy.SKIP_AND_CONTINUE
    rng = np.random.Generator(np.random.PCG64(int(seed)))

    active = np.ones(n, dtype=bool)
    steps: list[SelectionStep] = []

    first = _first_affordable_draw(rng, active, durations, budget.t_max_sec, skip)
    if first is None:
        return _make_result("farthest_point", steps, seed, budget, manifest)

    rows64 = _Rows64(X)
    min_d = np.full(n, np.inf, dtype=np.float64)
    scanner = _ChunkScanner(n, threads)
    try:
        cum = 0.0
        cand, value = first, 0.0
        while True:
            active[cand] = False
            cum += float(durations[cand])
            steps.append(SelectionStep(cand, value, cum))
            if not active.any():
                break
            center = rows64.row(cand)

            def update(lo: int, hi: int) -> None:
                diffs = rows64.chunk(lo, hi) - center
                np.minimum(
                    min_d[lo:hi],
                    np.einsum("ij,ij->i", diffs, diffs),
                    out=min_d[lo:hi],
                )

            scanner.map(update)
            best = _next_affordable(
                lambda: scanner.best(lambda lo, hi: min_d[lo:hi], active),
                active, cum, durations, budget.t_max_sec, skip,
            )
            if best is None:
                break
            value, cand = best
    finally:
        scanner.close()
    return _make_result("farthest_point", steps, seed, budget, manifest)


# ---------------------------------------------------------------------------
# entropy-balance methods
# ---------------------------------------------------------------------------

def _xlogx(v: np.ndarray) -> np.ndarray:
    # natural-log x*log(x) with the 0*log(0) = 0 convention
    return v * np.log(np.where(v > 0.0, v, 1.0))


class _EntropyState:
    """Count tables in array form with O(total tokens) candidate scoring.

    Entropy is evaluated through H = (ln T - W/T) / ln 2 with
    W = sum_i c_i ln c_i, so adding one utterance only touches the counts
    of its own tokens.
    """

    def __init__(self, manifest: Manifest, speaker_weights: np.ndarray):
        vocab = {tok: i for i, tok in enumerate(manifest.phoneme_inventory)}
        speakers = {s: i for i, s in enumerate(manifest.speaker_inventory)}
        n = len(manifest.records)

        tok_idx: list[int] = []
        tok_cnt: list[float] = []
        row_ptr = np.zeros(n + 1, dtype=np.int64)
        for i, rec in enumerate(manifest.records):
            counts: dict[str, int] = {}
            for tok in rec.phonemes:
                counts[tok] = counts.get(tok, 0) + 1
            for tok in sorted(counts):
                tok_idx.append(vocab[tok])
                tok_cnt.append(float(counts[tok]))
            row_ptr[i + 1] = len(tok_idx)

        self.tok_idx = np.array(tok_idx, dtype=np.int64)
        self.tok_cnt = np.array(tok_cnt, dtype=np.float64)
        self.row_ptr = row_ptr
        self.row_tok_total = self._row_sums(self.tok_cnt)
        self.spk_idx = np.array(
            [speakers[rec.speaker] for rec in manifest.records], dtype=np.int64
        )
        self.spk_weight = np.asarray(speaker_weights, dtype=np.float64)

        self.c = np.zeros(len(vocab), dtype=np.float64)
        self.t = 0.0
        self.sc = np.zeros(len(speakers), dtype=np.float64)
        self.ts = 0.0

    def _row_sums(self, values: np.ndarray) -> np.ndarray:
        # reduceat with clipped starts; empty rows are masked to zero
        if len(self.tok_idx) == 0:
            return np.zeros(len(self.row_ptr) - 1, dtype=np.float64)
        padded = np.concatenate([values, [0.0]])
        starts = np.minimum(self.row_ptr[:-1], len(values))
        sums = np.add.reduceat(padded, starts)
        return sums * (np.diff(self.row_ptr) > 0)

    def phoneme_entropy_after_add(self) -> np.ndarray:
        vals = self.c[self.tok_idx]
        dw = self._row_sums(_xlogx(vals + self.tok_cnt) - _xlogx(vals))
        w = float(np.sum(_xlogx(self.c)))
        t_new = self.t + self.row_tok_total
        safe = np.where(t_new > 0.0, t_new, 1.0)
        return np.where(t_new > 0.0, (np.log(safe) - (w + dw) / safe) / _LN2, 0.0)

    def speaker_entropy_after_add(self) -> np.ndarray:
        vals = self.sc[self.spk_idx]
        dw = _xlogx(vals + self.spk_weight) - _xlogx(vals)
        w = float(np.sum(_xlogx(self.sc)))
        t_new = self.ts + self.spk_weight
        return (np.log(t_new) - (w + dw) / t_new) / _LN2

    def accept(self, i: int) -> None:
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        self.c[self.tok_idx[lo:hi]] += self.tok_cnt[lo:hi]
        self.t += float(self.row_tok_total[i])
        self.sc[self.spk_idx[i]] += float(self.spk_weight[i])
        self.ts += float(self.spk_weight[i])

    def phoneme_entropy(self) -> float:
        if self.t <= 0.0:
            return 0.0
        return (math.log(self.t) - float(np.sum(_xlogx(self.c))) / self.t) / _LN2

    def speaker_entropy(self) -> float:
        if self.ts <= 0.0:
            return 0.0
        return (math.log(self.ts) - float(np.sum(_xlogx(self.sc))) / self.ts) / _LN2


def select_entropy_balance(
    manifest: Manifest,
    objective: str,
    budget: SelectionBudget,
    seed: int = 0,
    *,
    phoneme_weight: float = 1.0,
    speaker_weight: float = 1.0,
    duration_weighted_speakers: bool = False,
) -> SelectionResult:
    """Greedy entropy maximization from the empty set.

    ``objective`` is "phoneme" (phoneme-token entropy) or
    "phoneme_plus_speaker" (adds speaker-occurrence entropy; by default the
    two are weighted equally and speakers are counted per utterance rather
    than per second). The seed is recorded for reproducibility but the
    greedy start is deterministic, so it is never consumed.
    """
    if objective not in ("phoneme", "phoneme_plus_speaker"):
        raise ValueError(f"unknown objective {objective!r}")
    _require_records(manifest)
    durations = _durations(manifest)
    skip = budget.overflow_policy is OverflowPolicy.SKIP_AND_CONTINUE
    use_speaker = objective == "phoneme_plus_speaker"
    method = "input_balance" if use_speaker else "phoneme_balance"

    weights = durations if duration_weighted_speakers else np.ones(len(manifest.records))
    state = _EntropyState(manifest, weights)
    n = len(manifest.records)
    active = np.ones(n, dtype=bool)
    steps: list[SelectionStep] = []

    def propose() -> Optional[tuple[float, int]]:
        scores = phoneme_weight * state.phoneme_entropy_after_add()
        if use_speaker:
            scores = scores + speaker_weight * state.speaker_entropy_after_add()
        masked = np.where(active, scores, -np.inf)
        j = int(np.argmax(masked))
        if not active[j]:
            return None
        return (float(masked[j]), j)

    cum = 0.0
    while True:
        best = _next_affordable(propose, active, cum, durations, budget.t_max_sec, skip)
        if best is None:
            break
        _, cand = best
        active[cand] = False
        cum += float(durations[cand])
        state.accept(cand)
        value = phoneme_weight * state.phoneme_entropy()
        if use_speaker:
            value += speaker_weight * state.speaker_entropy()
        steps.append(SelectionStep(cand, value, cum))
        if not active.any():
            break
    return _make_result(method, steps, seed, budget, manifest)


def select_random(
    manifest: Manifest, budget: SelectionBudget, seed: int
) -> SelectionResult:
    """Uniform sampling without replacement until the budget rule triggers.

    A seeded permutation fixes the without-replacement order; the per-step
    objective is 0 (this control method has none).
    """
    _require_records(manifest)
    durations = _durations(manifest)
    skip = budget.overflow_policy is OverflowPolicy.SKIP_AND_CONTINUE
    rng = np.random.Generator(np.random.PCG64(int(seed)))

    steps: list[SelectionStep] = []
    cum = 0.0
    for idx in rng.permutation(len(manifest.records)):
        idx = int(idx)
        if cum + durations[idx] <= budget.t_max_sec:
            cum += float(durations[idx])
            steps.append(SelectionStep(idx, 0.0, cum))
        elif skip:
            continue
        else:
            break
    return _make_result("random", steps, seed, budget, manifest)


# ---------------------------------------------------------------------------
# method registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodSpec:
    name: str
    needs_features: bool
    stochastic: bool


METHODS: dict[str, MethodSpec] = {
    "diversity": MethodSpec("diversity", needs_features=True, stochastic=True),
    "phoneme_balance": MethodSpec("phoneme_balance", needs_features=False, stochastic=False),
    "input_balance": MethodSpec("input_balance", needs_features=False, stochastic=False),
    "random": MethodSpec("random", needs_features=False, stochastic=True),
    "farthest_point": MethodSpec("farthest_point", needs_features=True, stochastic=True),
}


def run_selection(
    method: str,
    manifest: Manifest,
    budget: SelectionBudget,
    seed: int,
    features: Optional[FeatureMatrix] = None,
    threads: int = 1,
) -> SelectionResult:
    """Dispatch a selection method by registry name."""
    try:
        spec = METHODS[method]
    except KeyError:
        raise ValueError(
            f"unknown method {method!r}; known: {', '.join(sorted(METHODS))}"
        ) from None
    if spec.needs_features and features is None:
        raise ValueError(f"method {method!r} requires a feature matrix")
    if method == "diversity":
        return select_diversity(features, manifest, budget, seed, threads)
    if method == "farthest_point":
        return select_farthest_point(features, manifest, budget, seed, threads)
    if method == "phoneme_balance":
        return select_entropy_balance(manifest, "phoneme", budget, seed)
    if method == "input_balance":
        return select_entropy_balance(manifest, "phoneme_plus_speaker", budget, seed)
    return select_random(manifest, budget, seed)
