"""Per-vehicle (routine) and portfolio-level (peculiarity) anomaly profiles,
plus quantile feature extraction and pairwise interactions."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .anomaly import iforest_fit, iforest_score, lof_scores, mahalanobis_fit, mahalanobis_score
from .errors import DegenerateScaleError
from .trip_prep import TripFeatureMatrix, build_feature_matrix
from .trip_store import TripRecord

logger = logging.getLogger(__name__)

LOCAL = "LOCAL"
GLOBAL = "GLOBAL"

MAHALANOBIS = "MAHALANOBIS"
LOF = "LOF"
IFOREST = "IFOREST"

ALGORITHMS = (MAHALANOBIS, LOF, IFOREST)

QUANTILE_LEVELS = np.arange(0, 101, 10)  # 0, 10, ..., 100
QUANTILE_NAMES = [f"q{p}" for p in QUANTILE_LEVELS]
INTERACTION_NAMES = [
    f"{QUANTILE_NAMES[i]}_x_{QUANTILE_NAMES[j]}"
    for i in range(11)
    for j in range(i + 1, 11)
]

# vehicles with fewer trips than this get a constant zero local profile
MIN_LOCAL_TRIPS = 5

# ridge applied when a vehicle's own trips have singular covariance
_LOCAL_RIDGE = 1e-8


@dataclass(frozen=True)
class AnomalyProfile:
    vin: str
    scheme: str  # LOCAL or GLOBAL
    algorithm: str
    scores: np.ndarray  # one per trip, ordered by trip_id


def _score_matrix(X: np.ndarray, algorithm: str, *, k: int | None = None,
                  b: int | None = None, num_trees: int = 100,
                  seed: int = 0) -> np.ndarray:
    if algorithm == MAHALANOBIS:
        model = mahalanobis_fit(X, ridge_eps=_LOCAL_RIDGE)
        return mahalanobis_score(model, X)
    if algorithm == LOF:
        return lof_scores(X, k)
    if algorithm == IFOREST:
        forest = iforest_fit(X, num_trees=num_trees, sample_size=b, seed=seed)
        return iforest_score(forest, X)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def local_profiles(trips_by_vin: dict[str, list[TripRecord]], algorithm: str,
                   *, k_frac: float | None = None, b_frac: float | None = None,
                   num_trees: int = 100, seed: int = 0) -> dict[str, AnomalyProfile]:
    """Score each vehicle's trips against that vehicle's other trips only.

    A fresh normalizer is fitted per vehicle; LOF and isolation-forest
    parameters scale with the vehicle's trip count. Vehicles with too few
    trips get a constant zero profile and a warning.
    """
    if algorithm == LOF and k_frac is None:
        raise ValueError("LOF needs k_frac in the local scheme")
    if algorithm == IFOREST and b_frac is None:
        raise ValueError("isolation forest needs b_frac in the local scheme")
    out: dict[str, AnomalyProfile] = {}
    for vin in sorted(trips_by_vin):
        trips = trips_by_vin[vin]
        n_i = len(trips)
        try:
            if n_i < MIN_LOCAL_TRIPS:
                raise DegenerateScaleError(f"only {n_i} trips")
            fm = build_feature_matrix(trips)
            if algorithm == LOF:
                k_i = min(max(1, round(k_frac * n_i)), n_i - 1)
                scores = _score_matrix(fm.attributes, LOF, k=k_i)
            elif algorithm == IFOREST:
                b_i = min(max(2, round(b_frac * n_i)), n_i)
                scores = _score_matrix(
                    fm.attributes, IFOREST, b=b_i, num_trees=num_trees, seed=seed
                )
            else:
                scores = _score_matrix(fm.attributes, MAHALANOBIS)
        except DegenerateScaleError as exc:
            logger.warning("vin %s: %s; emitting zero profile", vin, exc)
            scores = np.zeros(n_i)
        out[vin] = AnomalyProfile(vin=vin, scheme=LOCAL, algorithm=algorithm,
                                  scores=np.asarray(scores, dtype=float))
    return out


def global_profiles(train_matrix: TripFeatureMatrix, algorithm: str, *,
                    k: int | None = None, b: int | None = None,
                    num_trees: int = 100, seed: int = 0,
                    score_matrix: TripFeatureMatrix | None = None,
                    ) -> dict[str, AnomalyProfile]:
    """Fit one model on all training trips and score every trip against it.

    `score_matrix` defaults to the training matrix; pass a matrix holding
    train + test trips (normalized with the train-fitted normalizer) to score
    held-out vehicles without refitting.
    """
    X_train = train_matrix.attributes
    if score_matrix is None:
        score_matrix = train_matrix
    X_score = score_matrix.attributes

    if algorithm == MAHALANOBIS:
        model = mahalanobis_fit(X_train, ridge_eps=_LOCAL_RIDGE)
        scores = mahalanobis_score(model, X_score)
    elif algorithm == LOF:
        if k is None or not 1 <= k < X_train.shape[0]:
            raise ValueError(
                f"k must be in [1, {X_train.shape[0] - 1}], got {k}"
            )
        # LOF has no fit/score separation: training trips keep their in-sample
        # score, held-out trips are scored against the training neighborhoods.
        scores = _global_lof(train_matrix, score_matrix, k)
    elif algorithm == IFOREST:
        if b is None:
            raise ValueError("isolation forest needs b in the global scheme")
        forest = iforest_fit(X_train, num_trees=num_trees, sample_size=b, seed=seed)
        scores = iforest_score(forest, X_score)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    out: dict[str, AnomalyProfile] = {}
    vins = score_matrix.vins
    trip_ids = score_matrix.trip_ids
    for vin in np.unique(vins):
        rows = np.flatnonzero(vins == vin)
        rows = rows[np.argsort(trip_ids[rows], kind="stable")]
        out[str(vin)] = AnomalyProfile(
            vin=str(vin), scheme=GLOBAL, algorithm=algorithm,
            scores=scores[rows].astype(float),
        )
    return out


def _global_lof(train_matrix: TripFeatureMatrix, score_matrix: TripFeatureMatrix,
                k: int) -> np.ndarray:
    """LOF for the rows of `score_matrix` against the training cloud.

    Trips present in the training matrix (matched on vin and trip_id) keep
    their in-sample LOF; other trips are treated as queries, with neighbor
    sets drawn from training points only.
    """
    from scipy.spatial.distance import cdist

    X_train = train_matrix.attributes
    in_sample = lof_scores(X_train, k)

    if score_matrix is train_matrix:
        return in_sample

    train_index = {
        (v, int(t)): i
        for i, (v, t) in enumerate(zip(train_matrix.vins, train_matrix.trip_ids))
    }
    row_of = [
        train_index.get((v, int(t)))
        for v, t in zip(score_matrix.vins, score_matrix.trip_ids)
    ]

    # k-distance and LRD of every training point (self excluded)
    n = X_train.shape[0]
    D_train = cdist(X_train, X_train)
    np.fill_diagonal(D_train, np.inf)
    kdist = np.partition(D_train, k - 1, axis=1)[:, k - 1]
    lrd_train = np.empty(n)
    for i in range(n):
        nbrs = np.flatnonzero(D_train[i] <= kdist[i])
        rd = np.maximum(kdist[nbrs], D_train[i, nbrs])
        lrd_train[i] = 1.0 / max(rd.mean(), 1e-12)

    scores = np.empty(score_matrix.attributes.shape[0])
    query_rows = [i for i, r in enumerate(row_of) if r is None]
    for i, r in enumerate(row_of):
        if r is not None:
            scores[i] = in_sample[r]
    if query_rows:
        D = cdist(score_matrix.attributes[query_rows], X_train)
        for pos, i in enumerate(query_rows):
            d = D[pos]
            kd = np.partition(d, k - 1)[k - 1]
            nbrs = np.flatnonzero(d <= kd)
            rd = np.maximum(kdist[nbrs], d[nbrs])
            lrd_q = 1.0 / max(rd.mean(), 1e-12)
            scores[i] = lrd_train[nbrs].mean() / lrd_q
    return scores


def extract_quantiles(profile: AnomalyProfile) -> np.ndarray:
    """The 11 evenly spaced percentiles (type-7 linear interpolation)."""
    if profile.scores.size == 0:
        raise ValueError(f"empty profile for vin {profile.vin!r}")
    return np.percentile(profile.scores, QUANTILE_LEVELS)


def pairwise_interactions(quantiles: np.ndarray) -> np.ndarray:
    """All 55 products q_i * q_j with i < j, in lexicographic order."""
    q = np.asarray(quantiles, dtype=float)
    if q.shape != (11,):
        raise ValueError(f"expected 11 quantiles, got shape {q.shape}")
    return np.array([q[i] * q[j] for i in range(11) for j in range(i + 1, 11)])


def profile_features(profiles: dict[str, AnomalyProfile]) -> dict[str, np.ndarray]:
    """Per-vin 66-vector: 11 quantiles followed by their 55 interactions."""
    out = {}
    for vin, profile in profiles.items():
        q = extract_quantiles(profile)
        out[vin] = np.concatenate([q, pairwise_interactions(q)])
    return out


def features_frame(profiles: dict[str, AnomalyProfile]) -> "pd.DataFrame":
    """Vin-indexed frame of the 66 profile-feature columns."""
    import pandas as pd

    feats = profile_features(profiles)
    vins = sorted(feats)
    data = np.vstack([feats[v] for v in vins])
    return pd.DataFrame(data, index=vins, columns=QUANTILE_NAMES + INTERACTION_NAMES)


def write_profile_csv(profiles: dict[str, AnomalyProfile],
                      trip_ids_by_vin: dict[str, list[int]],
                      path: str | Path) -> None:
    """Export `vin,scheme,algorithm,trip_id,score` rows."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["vin", "scheme", "algorithm", "trip_id", "score"])
        for vin in sorted(profiles):
            p = profiles[vin]
            for trip_id, score in zip(trip_ids_by_vin[vin], p.scores):
                w.writerow([vin, p.scheme, p.algorithm, trip_id, repr(float(score))])


def write_feature_csv(features: dict[str, np.ndarray], path: str | Path) -> None:
    """Export `vin` plus the 66 numeric profile-feature columns."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["vin"] + QUANTILE_NAMES + INTERACTION_NAMES)
        for vin in sorted(features):
            w.writerow([vin] + [repr(float(v)) for v in features[vin]])
