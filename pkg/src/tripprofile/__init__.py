"""Trip-level anomaly profiling features for vehicle claim classification."""

from .errors import (
    DegenerateScaleError,
    NotFittedError,
    ParseError,
    SingularCovarianceError,
    StageDependencyError,
    TripProfileError,
    UndefinedMetricError,
    ValidationError,
)
from .trip_store import (
    PolicyRecord,
    PortfolioSplit,
    TripRecord,
    parse_policy_csv,
    parse_trip_csv,
    split_by_vin,
)
from .trip_prep import (
    ATTRIBUTE_NAMES,
    Normalizer,
    TripFeatureMatrix,
    build_feature_matrix,
    derive_attributes,
)

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTE_NAMES",
    "DegenerateScaleError",
    "Normalizer",
    "NotFittedError",
    "ParseError",
    "PolicyRecord",
    "PortfolioSplit",
    "SingularCovarianceError",
    "StageDependencyError",
    "TripFeatureMatrix",
    "TripProfileError",
    "TripRecord",
    "UndefinedMetricError",
    "ValidationError",
    "build_feature_matrix",
    "derive_attributes",
    "parse_policy_csv",
    "parse_trip_csv",
    "split_by_vin",
    "__version__",
]
