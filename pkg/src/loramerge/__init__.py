"""Merge independently trained LoRA language adapters into one, and account
for the training time/cost advantage of merging over retraining.

The core objects are :class:`LoraAdapter` (per-layer low-rank factors) and
:class:`DeltaMap` (per-layer full-rank deltas, the "language vectors" that
merging operates on).  :func:`merge` runs a TIES pipeline optionally
preceded by DARE pruning and/or KnOTS SVD alignment.
"""

from .adapters import (
    DeltaMap,
    LoraAdapter,
    TensorBlock,
    compute_delta,
    load_adapter,
    load_as_delta,
    load_delta,
    refactor_to_adapter,
    save_adapter,
    save_delta,
)
from .container import read_header, read_tensors, write_tensors
from .costing import (
    ComparisonReport,
    CostScenario,
    LanguageUpdate,
    MeasuredCosts,
    initial_setup,
    lpt_makespan,
    reduction_pct,
    render_table,
    scenario_from_json_dict,
    update_language,
)
from .errors import (
    AlignmentError,
    DataError,
    FormatError,
    LoramergeError,
    NumericalError,
    OverlapError,
    PairingError,
    ParameterError,
    RateUndefinedError,
    ReductionUndefinedError,
    SimilarityUndefinedError,
    StorageError,
    ValidationError,
)
from .merging import (
    KnotsFactors,
    MergeConfig,
    dare_prune,
    disjoint_merge,
    elect_sign,
    knots_merge,
    knots_transform,
    merge,
    ties_merge,
    trim,
)
from .metrics import (
    PRF,
    accuracy,
    evaluate_task,
    hallucination_rate,
    macro_prf,
    rouge_l,
    rouge_n,
    tokenize,
)
from .similarity import SimilarityMatrix, cosine, flatten, similarity_matrix

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "ComparisonReport",
    "CostScenario",
    "DataError",
    "DeltaMap",
    "FormatError",
    "KnotsFactors",
    "LanguageUpdate",
    "LoraAdapter",
    "LoramergeError",
    "MeasuredCosts",
    "MergeConfig",
    "NumericalError",
    "OverlapError",
    "PRF",
    "PairingError",
    "ParameterError",
    "RateUndefinedError",
    "ReductionUndefinedError",
    "SimilarityMatrix",
    "SimilarityUndefinedError",
    "StorageError",
    "TensorBlock",
    "ValidationError",
    "accuracy",
    "compute_delta",
    "cosine",
    "dare_prune",
    "disjoint_merge",
    "elect_sign",
    "evaluate_task",
    "flatten",
    "hallucination_rate",
    "initial_setup",
    "knots_merge",
    "knots_transform",
    "load_adapter",
    "load_as_delta",
    "load_delta",
    "lpt_makespan",
    "macro_prf",
    "merge",
    "read_header",
    "read_tensors",
    "reduction_pct",
    "refactor_to_adapter",
    "render_table",
    "rouge_l",
    "rouge_n",
    "save_adapter",
    "save_delta",
    "scenario_from_json_dict",
    "similarity_matrix",
    "ties_merge",
    "tokenize",
    "trim",
    "update_language",
    "write_tensors",
]
