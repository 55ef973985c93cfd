"""Adaptive post-processing of brain tumour segmentations.

Volumes are numpy arrays indexed ``[z, y, x]``; spacing is ``(dx, dy, dz)`` in mm.
"""

from ._core import (
    ConfigError,
    IoError,
    Policy,
    ValidationError,
    evaluate,
    extract_features,
    feature_names,
    generate_case,
    load_image,
    load_segmentation,
    rank,
    save_segmentation,
)

__all__ = [
    "ConfigError",
    "IoError",
    "Policy",
    "ValidationError",
    "evaluate",
    "extract_features",
    "feature_names",
    "generate_case",
    "load_image",
    "load_segmentation",
    "rank",
    "save_segmentation",
]
