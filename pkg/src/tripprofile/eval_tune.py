"""Classification metrics, vehicle-level k-fold cross-validation, and grid
search for detector and elastic-net hyperparameters."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from . import enet
from .errors import UndefinedMetricError
from .tabular_prep import Recipe

logger = logging.getLogger(__name__)

# tuning grids; cardinalities 12, 20, 10, 10, 50, 5
K_FRAC_GRID = [0.05 * i for i in range(1, 13)]
B_FRAC_GRID = [0.05 * i for i in range(1, 21)]
K_GRID = [5 * i for i in range(1, 11)]
B_GRID = [100 * i for i in range(1, 11)]
LAMBDA_GRID = [10.0 ** (-10.0 + 10.0 * i / 49.0) for i in range(50)]
ALPHA_GRID = [0.0, 0.25, 0.5, 0.75, 1.0]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]  # vin -> fold index
    seed: int


@dataclass(frozen=True)
class GridSpec:
    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("grid must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("grid values must be strictly increasing")


@dataclass
class TuneResult:
    grid: list[tuple]  # one tuple of grid values per evaluated point
    mean_auc: list[float]
    sd_auc: list[float]
    best_index: int = 0
    best_point: tuple = field(default_factory=tuple)

    def as_frame(self) -> pd.DataFrame:
        cols = {f"grid_value_{i + 1}": [g[i] for g in self.grid]
                for i in range(len(self.grid[0]))}
        cols["mean_auc"] = self.mean_auc
        cols["sd_auc"] = self.sd_auc
        return pd.DataFrame(cols)


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Pairwise concordance probability, ties counted one half.

    Computed with midranks, which is exactly the tie-as-half convention.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = rankdata(scores)
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def confusion_metrics(scores: np.ndarray, labels: np.ndarray,
                      threshold: float = 0.5) -> dict[str, float]:
    """Accuracy, sensitivity and specificity at a hard threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    preds = (scores >= threshold).astype(int)
    tp = int(((preds == 1) & (labels == 1)).sum())
    tn = int(((preds == 0) & (labels == 0)).sum())
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0:
        raise UndefinedMetricError("sensitivity undefined: no positive labels")
    if n_neg == 0:
        raise UndefinedMetricError("specificity undefined: no negative labels")
    return {
        "accuracy": (tp + tn) / labels.size,
        "sensitivity": tp / n_pos,
        "specificity": tn / n_neg,
    }


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of midranks."""
    rx = rankdata(x)
    ry = rankdata(y)
    return float(np.corrcoef(rx, ry)[0, 1])


def make_folds(vins: list[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Assign whole vehicles to folds; fold sizes differ by at most one."""
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    ordered = sorted(vins)
    rng = random.Random(seed)
    rng.shuffle(ordered)
    assignments = {vin: i % k for i, vin in enumerate(ordered)}
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def _fold_vins(folds: FoldPlan, fold: int) -> tuple[list[str], list[str]]:
    train = [v for v, f in folds.assignments.items() if f != fold]
    valid = [v for v, f in folds.assignments.items() if f == fold]
    return sorted(train), sorted(valid)


def cross_validate_frame(
    frame: pd.DataFrame,
    labels: pd.Series,
    folds: FoldPlan,
    fit_predict,
) -> tuple[float, float]:
    """Generic out-of-fold evaluation over a vin-indexed design frame.

    `fit_predict(train_frame, train_labels, valid_frame) -> valid scores`
    owns all preprocessing, so no fold-validation statistic can leak into
    fitting.  Returns (AUC of concatenated out-of-fold scores, sd of
    per-fold AUCs).
    """
    oof_scores: list[np.ndarray] = []
    oof_labels: list[np.ndarray] = []
    fold_aucs: list[float] = []
    for fold in range(folds.k):
        train_vins, valid_vins = _fold_vins(folds, fold)
        train_vins = [v for v in train_vins if v in frame.index]
        valid_vins = [v for v in valid_vins if v in frame.index]
        y_train = labels.loc[train_vins].to_numpy()
        y_valid = labels.loc[valid_vins].to_numpy()
        scores = np.asarray(
            fit_predict(frame.loc[train_vins], y_train, frame.loc[valid_vins])
        )
        oof_scores.append(scores)
        oof_labels.append(y_valid)
        try:
            fold_aucs.append(auc(scores, y_valid))
        except UndefinedMetricError:
            logger.warning("fold %d has a single class; skipped in sd", fold)
    pooled_auc = auc(np.concatenate(oof_scores), np.concatenate(oof_labels))
    sd = float(np.std(fold_aucs, ddof=1)) if len(fold_aucs) > 1 else 0.0
    return pooled_auc, sd


def _standardize_fit_predict(train_frame, y_train, valid_frame):
    """Per-fold z-scoring plus non-penalized logistic regression."""
    mu = train_frame.mean(axis=0)
    sd = train_frame.std(axis=0, ddof=1).replace(0.0, 1.0)
    X_train = ((train_frame - mu) / sd).to_numpy(dtype=float)
    X_valid = ((valid_frame - mu) / sd).to_numpy(dtype=float)
    beta = enet.newton_logistic(X_train, y_train)
    return X_valid @ beta


def cv_auc_unpenalized(frame: pd.DataFrame, labels: pd.Series,
                       folds: FoldPlan) -> tuple[float, float]:
    """Five-fold CV AUC of a plain logistic regression on the given features."""
    return cross_validate_frame(frame, labels, folds, _standardize_fit_predict)


def _recipe_enet_fit_predict(lam: float, alpha: float, clamp: float,
                             impute_seed: int):
    def fit_predict(train_frame, y_train, valid_frame):
        recipe = Recipe(clamp=clamp, impute_seed=impute_seed)
        X_train = recipe.fit_transform(train_frame, y_train).to_numpy(dtype=float)
        X_valid = recipe.transform(valid_frame).to_numpy(dtype=float)
        model = enet.fit(X_train, y_train, lam, alpha)
        return enet.predict_proba(model, X_valid)
    return fit_predict


def cross_validate(frame: pd.DataFrame, labels: pd.Series, folds: FoldPlan,
                   lam: float, alpha: float, clamp: float = 20.57,
                   impute_seed: int = 0) -> tuple[float, float]:
    """Out-of-fold AUC of the full recipe + elastic-net pipeline."""
    return cross_validate_frame(
        frame, labels, folds,
        _recipe_enet_fit_predict(lam, alpha, clamp, impute_seed),
    )


def tune_detector(feature_frames: dict[float, pd.DataFrame], labels: pd.Series,
                  folds: FoldPlan, grid: GridSpec) -> TuneResult:
    """Pick the grid value whose 66 profile features maximize CV AUC.

    `feature_frames` maps each grid value to the vin-indexed frame of
    11 quantiles + 55 interactions computed with that value. Ties prefer
    the smaller hyperparameter.
    """
    points, means, sds = [], [], []
    for value in grid.values:
        mean_auc, sd_auc = cv_auc_unpenalized(feature_frames[value], labels, folds)
        points.append((value,))
        means.append(mean_auc)
        sds.append(sd_auc)
    best = min(range(len(points)), key=lambda i: (-means[i], points[i][0]))
    return TuneResult(grid=points, mean_auc=means, sd_auc=sds,
                      best_index=best, best_point=points[best])


def tune_detector_from_trips(trips_by_vin: dict, labels: pd.Series,
                             folds: FoldPlan, scheme: str, algorithm: str,
                             grid: GridSpec, num_trees: int = 100,
                             seed: int = 0) -> TuneResult:
    """Compute profiles for every grid value, then run :func:`tune_detector`.

    Training vehicles are those present in the fold plan; in the global
    scheme the detector is fitted once per grid value on all their trips.
    """
    from . import profiling
    from .trip_prep import build_feature_matrix

    train_vins = sorted(folds.assignments)
    frames: dict[float, pd.DataFrame] = {}
    if scheme == profiling.LOCAL:
        subset = {v: trips_by_vin[v] for v in train_vins}
        for value in grid.values:
            kwargs = {"k_frac": value} if algorithm == profiling.LOF else {"b_frac": value}
            profiles = profiling.local_profiles(
                subset, algorithm, num_trees=num_trees, seed=seed, **kwargs
            )
            frames[value] = profiling.features_frame(profiles)
    elif scheme == profiling.GLOBAL:
        train_trips = [t for v in train_vins for t in trips_by_vin[v]]
        matrix = build_feature_matrix(train_trips)
        for value in grid.values:
            kwargs = {"k": int(value)} if algorithm == profiling.LOF else {"b": int(value)}
            profiles = profiling.global_profiles(
                matrix, algorithm, num_trees=num_trees, seed=seed, **kwargs
            )
            frames[value] = profiling.features_frame(profiles)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return tune_detector(frames, labels, folds, grid)


def tune_enet(frame: pd.DataFrame, labels: pd.Series, folds: FoldPlan,
              lambda_grid: list[float] | None = None,
              alpha_grid: list[float] | None = None,
              clamp: float = 20.57, impute_seed: int = 0) -> TuneResult:
    """Grid-search (lambda, alpha) by out-of-fold AUC.

    Ties prefer larger lambda, then larger alpha (stronger regularization,
    then sparsity).
    """
    lambda_grid = LAMBDA_GRID if lambda_grid is None else lambda_grid
    alpha_grid = ALPHA_GRID if alpha_grid is None else alpha_grid
    points, means, sds = [], [], []
    for alpha in alpha_grid:
        for lam in lambda_grid:
            mean_auc, sd_auc = cross_validate(
                frame, labels, folds, lam, alpha, clamp, impute_seed
            )
            points.append((lam, alpha))
            means.append(mean_auc)
            sds.append(sd_auc)
    best = min(
        range(len(points)),
        key=lambda i: (-means[i], -points[i][0], -points[i][1]),
    )
    return TuneResult(grid=points, mean_auc=means, sd_auc=sds,
                      best_index=best, best_point=points[best])
