from .harness import (
    BarrierReport,
    BarrierRow,
    CurvePoint,
    SizeBucket,
    evaluate_barriers,
    evaluate_on_records,
    learning_curve,
    nested_subset_records,
    transferability_eval,
    write_barriers_csv,
    write_learning_curve_csv,
    write_transferability_csv,
)
from .metrics import MetricsReport, compute_metrics
from .splits import SPLIT_NAMES, SplitSpec, stratified_split

__all__ = [
    "BarrierReport",
    "BarrierRow",
    "CurvePoint",
    "MetricsReport",
    "SPLIT_NAMES",
    "SizeBucket",
    "SplitSpec",
    "compute_metrics",
    "evaluate_barriers",
    "evaluate_on_records",
    "learning_curve",
    "nested_subset_records",
    "stratified_split",
    "transferability_eval",
    "write_barriers_csv",
    "write_learning_curve_csv",
    "write_transferability_csv",
]
