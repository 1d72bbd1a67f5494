"""Unsupervised anomaly detectors: Mahalanobis, LOF, isolation forest."""

from .mahalanobis import MahalanobisModel, mahalanobis_fit, mahalanobis_score
from .lof import lof_scores
from .iforest import (
    IsolationForestModel,
    c_factor,
    iforest_fit,
    iforest_score,
    load_forest,
    save_forest,
)

__all__ = [
    "MahalanobisModel",
    "mahalanobis_fit",
    "mahalanobis_score",
    "lof_scores",
    "IsolationForestModel",
    "c_factor",
    "iforest_fit",
    "iforest_score",
    "load_forest",
    "save_forest",
]
