"""Budget-constrained, diversity-maximizing subset selection for dataset
manifests with precomputed feature vectors."""

from .diversity import MomentAccumulator, min_distance_gain
from .features import (
    FeatureMatrix,
    concat_features,
    load_features,
    normalize_rows,
    write_features,
)
from .manifest import Manifest, UtteranceRecord, load_manifest, write_manifest
from .report import (
    ComparisonTable,
    SubsetMetrics,
    compare_methods,
    evaluate_subset,
)
from .selectors import (
    METHODS,
    CountTable,
    OverflowPolicy,
    SelectionBudget,
    SelectionResult,
    entropy,
    run_selection,
    select_diversity,
    select_entropy_balance,
    select_farthest_point,
    select_random,
)

__version__ = "0.1.0"

__all__ = [
    "ComparisonTable",
    "CountTable",
    "FeatureMatrix",
    "METHODS",
    "Manifest",
    "MomentAccumulator",
    "OverflowPolicy",
    "SelectionBudget",
    "SelectionResult",
    "SubsetMetrics",
    "UtteranceRecord",
    "compare_methods",
    "concat_features",
    "entropy",
    "evaluate_subset",
    "load_features",
    "load_manifest",
    "min_distance_gain",
    "normalize_rows",
    "run_selection",
    "select_diversity",
    "select_entropy_balance",
    "select_farthest_point",
    "select_random",
    "write_features",
    "write_manifest",
]
