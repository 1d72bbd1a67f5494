"""Derivation of the eight trip attributes and z-score normalization.

Columns, in order: duration (min), distance (km), avg_speed (km/h),
max_speed (km/h), time_of_day_sin, time_of_day_cos, time_of_week_sin,
time_of_week_cos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScaleError
from .trip_store import TripRecord

ATTRIBUTE_NAMES = [
    "duration",
    "distance",
    "avg_speed",
    "max_speed",
    "time_of_day_sin",
    "time_of_day_cos",
    "time_of_week_sin",
    "time_of_week_cos",
]

SECONDS_PER_DAY = 86_400
SECONDS_PER_WEEK = 7 * SECONDS_PER_DAY
# 1970-01-01 was a Thursday; the Monday of that week is 3 days earlier.
_MONDAY_OFFSET = 3 * SECONDS_PER_DAY

# floor on the duration used for average speed, in hours (one minute)
MIN_DURATION_HOURS = 1.0 / 60.0


@dataclass(frozen=True)
class Normalizer:
    """Per-column mean and sample standard deviation (divisor n-1)."""

    means: np.ndarray
    stds: np.ndarray


@dataclass(frozen=True)
class TripFeatureMatrix:
    """Z-scored per-trip attribute matrix, one row per trip."""

    vins: np.ndarray  # str array, one per row
    trip_ids: np.ndarray
    attributes: np.ndarray  # n x 8
    normalizer: Normalizer


def encode_cyclic(value: float, period: float) -> tuple[float, float]:
    """Map a periodic value to (sin, cos) of its phase in [0, 2*pi)."""
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    angle = 2.0 * math.pi * value / period
    return math.sin(angle), math.cos(angle)


def derive_attributes(trips: list[TripRecord]) -> np.ndarray:
    """Compute the raw (pre-normalization) n x 8 attribute matrix.

    Average speed uses a one-minute duration floor so that trips with equal
    departure and arrival timestamps remain usable.
    """
    n = len(trips)
    out = np.empty((n, 8), dtype=float)
    for i, t in enumerate(trips):
        duration_min = (t.arrival - t.departure) / 60.0
        avg_speed = t.distance_km / max(duration_min / 60.0, MIN_DURATION_HOURS)
        time_of_day = t.departure % SECONDS_PER_DAY
        time_of_week = ((t.departure + _MONDAY_OFFSET) % SECONDS_PER_WEEK) / SECONDS_PER_DAY
        tod_sin, tod_cos = encode_cyclic(time_of_day, SECONDS_PER_DAY)
        tow_sin, tow_cos = encode_cyclic(time_of_week, 7.0)
        out[i] = (
            duration_min,
            t.distance_km,
            avg_speed,
            t.max_speed_kmh,
            tod_sin,
            tod_cos,
            tow_sin,
            tow_cos,
        )
    return out


def fit_normalizer(matrix: np.ndarray) -> Normalizer:
    """Fit per-column means and sample standard deviations."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least 2 rows")
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0, ddof=1)
    degenerate = np.flatnonzero(stds <= 0.0)
    if degenerate.size:
        names = [
            ATTRIBUTE_NAMES[j] if j < len(ATTRIBUTE_NAMES) else str(j)
            for j in degenerate
        ]
        raise DegenerateScaleError(f"constant column(s): {names}")
    return Normalizer(means=means, stds=stds)


def apply_normalizer(normalizer: Normalizer, matrix: np.ndarray) -> np.ndarray:
    """Apply the fitted statistics; never refits."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[1] != normalizer.means.shape[0]:
        raise ValueError(
            f"column count {matrix.shape[1]} does not match normalizer "
            f"({normalizer.means.shape[0]})"
        )
    return (matrix - normalizer.means) / normalizer.stds


def build_feature_matrix(
    trips: list[TripRecord], normalizer: Normalizer | None = None
) -> TripFeatureMatrix:
    """Derive attributes, fit a normalizer if not supplied, and z-score."""
    raw = derive_attributes(trips)
    if normalizer is None:
        normalizer = fit_normalizer(raw)
    return TripFeatureMatrix(
        vins=np.array([t.vin for t in trips]),
        trip_ids=np.array([t.trip_id for t in trips]),
        attributes=apply_normalizer(normalizer, raw),
        normalizer=normalizer,
    )
