"""End-to-end orchestration shared by the CLI and the acceptance suite."""

from __future__ import annotations

import logging
import pickle
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import enet, profiling
from .design import design_frame
from .eval_tune import FoldPlan, auc, confusion_metrics, make_folds
from .tabular_prep import Recipe
from .trip_prep import build_feature_matrix
from .trip_store import PolicyRecord, PortfolioSplit, TripRecord, trips_by_vin

logger = logging.getLogger(__name__)

_MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """One classifier variant: the baseline or a detector-augmented model."""

    name: str
    scheme: str | None = None  # None = baseline (no anomaly features)
    algorithm: str | None = None
    detector_param: float | None = None  # k_frac/b_frac (local) or k/b (global)
    lam: float = 1e-3
    alpha: float = 0.5


def default_model_specs(lam: float = 1e-3, alpha: float = 0.5,
                        local_k_frac: float = 0.35, local_b_frac: float = 0.85,
                        global_k: int = 50, global_b: int = 400,
                        ) -> list[ModelSpec]:
    """Baseline plus the six scheme/algorithm variants."""
    specs = [ModelSpec(name="baseline", lam=lam, alpha=alpha)]
    for scheme in (profiling.LOCAL, profiling.GLOBAL):
        for algorithm in profiling.ALGORITHMS:
            param = None
            if algorithm == profiling.LOF:
                param = local_k_frac if scheme == profiling.LOCAL else global_k
            elif algorithm == profiling.IFOREST:
                param = local_b_frac if scheme == profiling.LOCAL else global_b
            specs.append(ModelSpec(
                name=f"{scheme.lower()}_{algorithm.lower()}",
                scheme=scheme, algorithm=algorithm, detector_param=param,
                lam=lam, alpha=alpha,
            ))
    return specs


def compute_profiles(trips: list[TripRecord], split: PortfolioSplit,
                     scheme: str, algorithm: str,
                     detector_param: float | None,
                     num_trees: int = 100, seed: int = 0,
                     ) -> dict[str, profiling.AnomalyProfile]:
    """Profiles for every vehicle, fitting only on training information.

    Local profiles are in-silo per vehicle. Global models are fitted on
    training vehicles' trips (normalizer included) and then score all trips.
    """
    by_vin = trips_by_vin(trips)
    if scheme == profiling.LOCAL:
        kwargs = {}
        if algorithm == profiling.LOF:
            kwargs["k_frac"] = detector_param
        elif algorithm == profiling.IFOREST:
            kwargs["b_frac"] = detector_param
        return profiling.local_profiles(by_vin, algorithm, num_trees=num_trees,
                                        seed=seed, **kwargs)
    if scheme == profiling.GLOBAL:
        train_trips = [t for t in trips if t.vin in split.train_vins]
        train_matrix = build_feature_matrix(train_trips)
        all_matrix = build_feature_matrix(trips, normalizer=train_matrix.normalizer)
        kwargs = {}
        if algorithm == profiling.LOF:
            kwargs["k"] = int(detector_param)
        elif algorithm == profiling.IFOREST:
            kwargs["b"] = int(detector_param)
        return profiling.global_profiles(train_matrix, algorithm,
                                         num_trees=num_trees, seed=seed,
                                         score_matrix=all_matrix, **kwargs)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class TrainedModel:
    spec: ModelSpec
    recipe: Recipe
    classifier: enet.FittedClassifier
    feature_names: list[str]


def train_model(spec: ModelSpec, trips: list[TripRecord],
                policies: list[PolicyRecord], split: PortfolioSplit,
                clamp: float = 20.57, num_trees: int = 100, seed: int = 0,
                ) -> tuple[TrainedModel, pd.DataFrame, pd.Series]:
    """Fit recipe + classifier on the training vins.

    Returns the trained model plus the full (train + test) raw design frame
    and labels for downstream scoring.
    """
    feats = None
    if spec.scheme is not None:
        profiles = compute_profiles(trips, split, spec.scheme, spec.algorithm,
                                    spec.detector_param, num_trees, seed)
        feats = profiling.features_frame(profiles)
    frame, labels = design_frame(policies, trips, feats)
    train_vins = sorted(split.train_vins)
    y_train = labels.loc[train_vins].to_numpy()
    recipe = Recipe(clamp=clamp, impute_seed=seed)
    X_train = recipe.fit_transform(frame.loc[train_vins], y_train)
    classifier = enet.fit(X_train.to_numpy(dtype=float), y_train,
                          spec.lam, spec.alpha)
    classifier.feature_names = list(X_train.columns)
    classifier.recipe_ref = spec.name
    model = TrainedModel(spec=spec, recipe=recipe, classifier=classifier,
                         feature_names=list(X_train.columns))
    return model, frame, labels


def score_model(model: TrainedModel, frame: pd.DataFrame,
                vins: list[str]) -> np.ndarray:
    """Claim probabilities for the given vins."""
    X = model.recipe.transform(frame.loc[vins]).to_numpy(dtype=float)
    return enet.predict_proba(model.classifier, X)


def evaluate_models(specs: list[ModelSpec], trips: list[TripRecord],
                    policies: list[PolicyRecord], split: PortfolioSplit,
                    clamp: float = 20.57, num_trees: int = 100, seed: int = 0,
                    ) -> pd.DataFrame:
    """Test-set metrics for every spec plus deltas against the first
    (baseline) row."""
    rows = []
    test_vins = sorted(split.test_vins)
    baseline: dict[str, float] | None = None
    for spec in specs:
        model, frame, labels = train_model(spec, trips, policies, split,
                                           clamp, num_trees, seed)
        scores = score_model(model, frame, test_vins)
        y_test = labels.loc[test_vins].to_numpy()
        metrics = {"auc": auc(scores, y_test)}
        metrics.update(confusion_metrics(scores, y_test))
        row = {"model": spec.name, **metrics}
        if baseline is None:
            baseline = metrics
            for key in metrics:
                row[f"delta_{key}"] = 0.0
        else:
            for key in metrics:
                row[f"delta_{key}"] = metrics[key] - baseline[key]
        rows.append(row)
        logger.info("evaluated %s: auc=%.4f", spec.name, metrics["auc"])
    return pd.DataFrame(rows)


def save_model(model: TrainedModel, path: str | Path) -> None:
    payload = {"format_version": _MODEL_FORMAT_VERSION, "model": model}
    with open(path, "wb") as f:
        pickle.dump(payload, f)


def load_model(path: str | Path) -> TrainedModel:
    with open(path, "rb") as f:
        payload = pickle.load(f)
    version = payload.get("format_version")
    if version != _MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    return payload["model"]


def make_vin_folds(split: PortfolioSplit, k: int = 5, seed: int = 0) -> FoldPlan:
    return make_folds(sorted(split.train_vins), k=k, seed=seed)
