"""Per-subtask decision-threshold tuning over boolean expressions."""

from trusthresh._core import (
    Dataset,
    MultiLabelDataset,
    ThresholdConfigError,
    ThresholdError,
    check_expression,
    default_fit,
    default_fit_multilabel,
    evaluate,
    fit,
    fit_multilabel,
    greedy_fit,
    grid_oracle,
    grid_oracle_multilabel,
    load_dataset,
    rank_normalize,
    sgl_fit,
    sgl_fit_multilabel,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "MultiLabelDataset",
    "ThresholdConfigError",
    "ThresholdError",
    "check_expression",
    "default_fit",
    "default_fit_multilabel",
    "evaluate",
    "fit",
    "fit_multilabel",
    "greedy_fit",
    "grid_oracle",
    "grid_oracle_multilabel",
    "load_dataset",
    "rank_normalize",
    "sgl_fit",
    "sgl_fit_multilabel",
]
