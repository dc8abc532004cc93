"""
Synthetic cell-traffic datasets
"""

from .generator import (
    DEFAULT_PROFILES,
    MIDDAY_SPIKE,
    PROFILES,
    SeparationReport,
    SyntheticDataset,
    SyntheticProfile,
    SyntheticSpec,
    day_labels,
    generate,
    holdout_split,
    separation_report,
    write_dataset_csv,
    write_labels_csv,
)

__all__ = [
    "DEFAULT_PROFILES",
    "MIDDAY_SPIKE",
    "PROFILES",
    "SeparationReport",
    "SyntheticDataset",
    "SyntheticProfile",
    "SyntheticSpec",
    "day_labels",
    "generate",
    "holdout_split",
    "separation_report",
    "write_dataset_csv",
    "write_labels_csv",
]
