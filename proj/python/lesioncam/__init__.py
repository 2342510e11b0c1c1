"""CAM-guided two-stage skin lesion classification."""

from lesioncam._core import (
    DataError,
    FormatError,
    NumericError,
    Pipeline,
    ShapeError,
    UsageError,
    auc_report,
    generate_synthetic,
    hflip,
    materialize_synthetic,
    remove_hairs,
    roc_auc,
    rotate90,
)

__all__ = [
    "DataError",
    "FormatError",
    "NumericError",
    "Pipeline",
    "ShapeError",
    "UsageError",
    "auc_report",
    "generate_synthetic",
    "hflip",
    "materialize_synthetic",
    "remove_hairs",
    "roc_auc",
    "rotate90",
]
