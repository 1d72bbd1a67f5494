"""Vehicle-level design-matrix preprocessing: rare-category pooling, target
encoding, bagged-tree imputation of commute_distance, Yeo-Johnson transform
and z-score normalization.

All statistics are fitted on training rows only and frozen; applying a fitted
recipe to its own fitting data reproduces the fit-time output exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.tree import DecisionTreeRegressor

from .errors import NotFittedError

logger = logging.getLogger(__name__)

CATEGORICAL_COLUMNS = ["gender", "marital_status", "pmt_plan", "veh_use"]
NUMERIC_TRF_COLUMNS = [
    "annual_distance",
    "commute_distance",
    "conv_count_3_yrs_minor",
    "veh_age",
    "years_claim_free",
    "years_licensed",
]
# Canonical design-matrix ordering: traditional risk factors, total distance
# driven, then any telematics quantile/interaction columns.
TRF_COLUMNS = [
    "annual_distance",
    "commute_distance",
    "conv_count_3_yrs_minor",
    "gender",
    "marital_status",
    "pmt_plan",
    "veh_age",
    "veh_use",
    "years_claim_free",
    "years_licensed",
]
DISTANCE_COLUMN = "distance"

POOLED_LABEL = "other"
DEFAULT_CLAMP = 20.57
DEFAULT_POOL_THRESHOLD = 0.05

YJ_LAMBDA_BOUNDS = (-5.0, 5.0)
YJ_TOL = 1e-6

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def pool_rare_categories(column: pd.Series, threshold: float = DEFAULT_POOL_THRESHOLD,
                         ) -> tuple[pd.Series, set[str]]:
    """Map categories with training frequency <= threshold to 'other'.

    Returns the pooled column and the set of kept (un-pooled) categories.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    freq = column.value_counts(normalize=True)
    kept = set(freq.index[freq > threshold])
    pooled = column.where(column.isin(kept), POOLED_LABEL)
    return pooled, kept


def _clamped_logit(p: float, clamp: float) -> float:
    if p <= 0.0:
        return -clamp
    if p >= 1.0:
        return clamp
    return float(np.clip(math.log(p / (1.0 - p)), -clamp, clamp))


@dataclass
class TargetEncoder:
    """Category -> claim-risk coefficient map for one feature.

    The encoding of a category is the clamped logit of its positive rate,
    which is the intercept-free categorical logistic maximum-likelihood
    solution whenever that solution is finite; the clamp resolves separation.
    """

    mapping: dict[str, float]
    default: float  # used for categories unseen in training (incl. 'other')
    clamp: float

    def encode(self, column: pd.Series) -> pd.Series:
        return column.map(lambda c: self.mapping.get(c, self.default))


def fit_target_encoder(column: pd.Series, y: np.ndarray,
                       clamp: float = DEFAULT_CLAMP) -> TargetEncoder:
    """Fit the per-category encoding from a pooled column and binary labels."""
    y = np.asarray(y)
    if not set(np.unique(y)) <= {0, 1}:
        raise ValueError("labels must be binary 0/1")
    mapping = {}
    for cat, rate in pd.Series(y, index=column.index).groupby(column).mean().items():
        mapping[cat] = _clamped_logit(float(rate), clamp)
    default = mapping.get(POOLED_LABEL, _clamped_logit(float(y.mean()), clamp))
    return TargetEncoder(mapping=mapping, default=default, clamp=clamp)


def apply_yeo_johnson(x, lam: float):
    """Piecewise power transform; the identity at lambda = 1."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    if abs(lam) > 1e-300:
        out[pos] = (np.power(x[pos] + 1.0, lam) - 1.0) / lam
    else:
        out[pos] = np.log1p(x[pos])
    neg = ~pos
    if abs(lam - 2.0) > 1e-300:
        out[neg] = -(np.power(-x[neg] + 1.0, 2.0 - lam) - 1.0) / (2.0 - lam)
    else:
        out[neg] = -np.log1p(-x[neg])
    return out if out.shape else float(out)


def yeo_johnson_loglik(x: np.ndarray, lam: float) -> float:
    """Gaussian profile log-likelihood of the transformed sample, including
    the Jacobian term."""
    x = np.asarray(x, dtype=float)
    n = x.size
    psi = apply_yeo_johnson(x, lam)
    var = psi.var()
    if var <= 0:
        return -np.inf
    jacobian = (lam - 1.0) * np.sum(np.sign(x) * np.log1p(np.abs(x)))
    return -0.5 * n * math.log(var) + jacobian


def fit_yeo_johnson(x: np.ndarray) -> float:
    """Maximize the profile log-likelihood over lambda by golden section."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 values to fit lambda")
    if np.ptp(x) == 0:
        logger.warning("constant column; using identity lambda = 1")
        return 1.0
    a, b = YJ_LAMBDA_BOUNDS
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = yeo_johnson_loglik(x, c)
    fd = yeo_johnson_loglik(x, d)
    while b - a > YJ_TOL:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = yeo_johnson_loglik(x, c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = yeo_johnson_loglik(x, d)
    return (a + b) / 2.0


@dataclass
class BaggedImputer:
    """Committee of regression trees predicting commute_distance."""

    trees: list[DecisionTreeRegressor]
    predictors: list[str]

    def predict(self, frame: pd.DataFrame) -> np.ndarray:
        X = frame[self.predictors].to_numpy(dtype=float)
        preds = np.stack([t.predict(X) for t in self.trees])
        return preds.mean(axis=0)


def fit_bagged_imputer(frame: pd.DataFrame, target: np.ndarray,
                       predictors: list[str], num_trees: int = 25,
                       min_samples_leaf: int = 5, seed: int = 0) -> BaggedImputer:
    """Fit `num_trees` trees, each on a bootstrap resample of complete rows."""
    n = len(frame)
    if n < num_trees:
        raise ValueError(
            f"need at least {num_trees} complete rows to fit the imputer, got {n}"
        )
    X = frame[predictors].to_numpy(dtype=float)
    y = np.asarray(target, dtype=float)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(num_trees):
        rows = rng.integers(0, n, size=n)
        tree = DecisionTreeRegressor(
            min_samples_leaf=min_samples_leaf,
            random_state=int(rng.integers(0, 2**31 - 1)),
        )
        tree.fit(X[rows], y[rows])
        trees.append(tree)
    return BaggedImputer(trees=trees, predictors=list(predictors))


@dataclass
class Recipe:
    """Fit-once, apply-many preprocessing pipeline for the design matrix.

    Step order: pool rare categories, target-encode, impute commute_distance,
    Yeo-Johnson per column, z-score per column.
    """

    pool_threshold: float = DEFAULT_POOL_THRESHOLD
    clamp: float = DEFAULT_CLAMP
    impute_seed: int = 0
    fitted: bool = False
    kept_categories: dict[str, set[str]] = field(default_factory=dict)
    encoders: dict[str, TargetEncoder] = field(default_factory=dict)
    imputer: BaggedImputer | None = None
    lambdas: dict[str, float] = field(default_factory=dict)
    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)
    columns: list[str] = field(default_factory=list)

    def fit(self, frame: pd.DataFrame, y: np.ndarray) -> "Recipe":
        """Fit every step on training rows; labels are used only by the
        target encoders."""
        y = np.asarray(y)
        if len(frame) != len(y):
            raise ValueError("frame and labels disagree in length")
        work = frame.copy()

        for col in CATEGORICAL_COLUMNS:
            if col not in work.columns:
                continue
            pooled, kept = pool_rare_categories(work[col], self.pool_threshold)
            self.kept_categories[col] = kept
            enc = fit_target_encoder(pooled, y, self.clamp)
            self.encoders[col] = enc
            work[col] = enc.encode(pooled)

        if "commute_distance" in work.columns:
            predictors = [
                c for c in work.columns
                if c != "commute_distance" and not c.startswith("q")
            ]
            complete = work["commute_distance"].notna()
            self.imputer = fit_bagged_imputer(
                work.loc[complete],
                work.loc[complete, "commute_distance"].to_numpy(),
                predictors,
                seed=self.impute_seed,
            )
            missing = ~complete
            if missing.any():
                work.loc[missing, "commute_distance"] = self.imputer.predict(
                    work.loc[missing]
                )

        self.columns = list(work.columns)
        for col in self.columns:
            x = work[col].to_numpy(dtype=float)
            lam = fit_yeo_johnson(x)
            self.lambdas[col] = lam
            x = apply_yeo_johnson(x, lam)
            mean = float(x.mean())
            std = float(x.std(ddof=1))
            if std <= 0:
                logger.warning("column %s constant after transform; scale 1", col)
                std = 1.0
            self.means[col] = mean
            self.stds[col] = std
        self.fitted = True
        return self

    def transform(self, frame: pd.DataFrame) -> pd.DataFrame:
        """Apply the frozen steps; never refits."""
        if not self.fitted:
            raise NotFittedError("recipe must be fitted before transform")
        work = frame.copy()
        for col, enc in self.encoders.items():
            kept = self.kept_categories[col]
            pooled = work[col].where(work[col].isin(kept), POOLED_LABEL)
            work[col] = enc.encode(pooled)
        if self.imputer is not None:
            missing = work["commute_distance"].isna()
            if missing.any():
                work.loc[missing, "commute_distance"] = self.imputer.predict(
                    work.loc[missing]
                )
        out = {}
        for col in self.columns:
            x = apply_yeo_johnson(work[col].to_numpy(dtype=float), self.lambdas[col])
            out[col] = (x - self.means[col]) / self.stds[col]
        return pd.DataFrame(out, index=work.index)[self.columns]

    def fit_transform(self, frame: pd.DataFrame, y: np.ndarray) -> pd.DataFrame:
        return self.fit(frame, y).transform(frame)
