"""Command-line pipeline orchestration.

Subcommands: simulate | profile | tune-detector | tune-model | train |
evaluate | report.  Configuration is a JSON file; --seed, --jobs and --out
are common flags.  Reports are plain CSV; figures are left to downstream
plotting tools.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import enet, eval_tune, pipeline, profiling, synthgen
from .design import design_frame
from .errors import StageDependencyError, TripProfileError
from .eval_tune import GridSpec
from .trip_prep import ATTRIBUTE_NAMES, build_feature_matrix, derive_attributes
from .trip_store import (
    parse_policy_csv,
    parse_trip_csv,
    split_by_vin,
    trips_by_vin,
    write_policy_csv,
    write_trip_csv,
)

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    "trips": "trips.csv",
    "policies": "policies.csv",
    "split_ratio": 0.7,
    "split_seed": 0,
    "folds": 5,
    "clamp": 20.57,
    "num_trees": 100,
    "lambda": 1e-3,
    "alpha": 0.5,
    "mahalanobis_ridge": 0.0,
    "local_k_frac": 0.35,
    "local_b_frac": 0.85,
    "global_k": 50,
    "global_b": 400,
    "models": ["baseline", "local_mahalanobis", "local_lof", "local_iforest",
               "global_mahalanobis", "global_lof", "global_iforest"],
    "simulate": {},
}


def load_config(path: str | None, out_dir: Path, seed: int | None) -> dict:
    config = dict(DEFAULT_CONFIG)
    if path is not None:
        config.update(json.loads(Path(path).read_text()))
    config["out"] = out_dir
    if seed is not None:
        config["split_seed"] = seed
        config.setdefault("simulate", {})
        config["simulate"] = {**config["simulate"], "seed": seed}
    return config


def _resolve(config: dict, key: str) -> Path:
    path = Path(config[key])
    if not path.is_absolute():
        path = config["out"] / path
    return path


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise StageDependencyError(
            f"stage {stage!r} needs missing artifact {path}"
        )
    return path


def _load_portfolio(config: dict, stage: str):
    trips = parse_trip_csv(_require(_resolve(config, "trips"), stage))
    policies = parse_policy_csv(_require(_resolve(config, "policies"), stage))
    split = split_by_vin(policies, config["split_ratio"], config["split_seed"])
    return trips, policies, split


def _model_specs(config: dict) -> list[pipeline.ModelSpec]:
    all_specs = {
        s.name: s
        for s in pipeline.default_model_specs(
            lam=config["lambda"], alpha=config["alpha"],
            local_k_frac=config["local_k_frac"],
            local_b_frac=config["local_b_frac"],
            global_k=config["global_k"], global_b=config["global_b"],
        )
    }
    unknown = [m for m in config["models"] if m not in all_specs]
    if unknown:
        raise ValueError(f"unknown model names: {unknown}")
    return [all_specs[m] for m in config["models"]]


def cmd_simulate(config: dict) -> None:
    synth = synthgen.SynthConfig(**{
        k: tuple(v) if k == "trips_per_vehicle_range" else v
        for k, v in config.get("simulate", {}).items()
    })
    trips, policies, truths = synthgen.generate_portfolio(synth)
    out = config["out"]
    write_trip_csv(trips, out / "trips.csv")
    write_policy_csv(policies, out / "policies.csv")
    synthgen.write_ground_truth_csv(truths, out / "ground_truth.csv")
    print(f"wrote {len(trips)} trips for {len(policies)} vehicles to {out}")


def cmd_profile(config: dict, scheme: str, algorithm: str) -> None:
    trips, policies, split = _load_portfolio(config, "profile")
    param = {
        (profiling.LOCAL, profiling.LOF): config["local_k_frac"],
        (profiling.LOCAL, profiling.IFOREST): config["local_b_frac"],
        (profiling.GLOBAL, profiling.LOF): config["global_k"],
        (profiling.GLOBAL, profiling.IFOREST): config["global_b"],
    }.get((scheme, algorithm))
    profiles = pipeline.compute_profiles(
        trips, split, scheme, algorithm, param,
        num_trees=config["num_trees"], seed=config["split_seed"],
    )
    by_vin = trips_by_vin(trips)
    ids = {vin: [t.trip_id for t in ts] for vin, ts in by_vin.items()}
    tag = f"{scheme.lower()}_{algorithm.lower()}"
    out = config["out"]
    profiling.write_profile_csv(profiles, ids, out / f"profiles_{tag}.csv")
    feats = profiling.profile_features(profiles)
    profiling.write_feature_csv(feats, out / f"profile_features_{tag}.csv")
    print(f"wrote profiles for {len(profiles)} vehicles ({tag})")


def cmd_tune_detector(config: dict, scheme: str, algorithm: str) -> None:
    trips, policies, split = _load_portfolio(config, "tune-detector")
    if algorithm == profiling.MAHALANOBIS:
        raise ValueError("Mahalanobis has no hyperparameter to tune")
    grids = {
        (profiling.LOCAL, profiling.LOF): eval_tune.K_FRAC_GRID,
        (profiling.LOCAL, profiling.IFOREST): eval_tune.B_FRAC_GRID,
        (profiling.GLOBAL, profiling.LOF): eval_tune.K_GRID,
        (profiling.GLOBAL, profiling.IFOREST): eval_tune.B_GRID,
    }
    grid = GridSpec(name=f"{scheme}_{algorithm}",
                    values=tuple(grids[(scheme, algorithm)]))
    train_trips = {v: ts for v, ts in trips_by_vin(trips).items()
                   if v in split.train_vins}
    labels = pd.Series({p.vin: p.claim_ind for p in policies
                        if p.vin in split.train_vins})
    folds = eval_tune.make_folds(sorted(split.train_vins), k=config["folds"],
                                 seed=config["split_seed"])
    result = eval_tune.tune_detector_from_trips(
        train_trips, labels, folds, scheme, algorithm, grid,
        num_trees=config["num_trees"], seed=config["split_seed"],
    )
    tag = f"{scheme.lower()}_{algorithm.lower()}"
    path = config["out"] / f"tune_{tag}.csv"
    result.as_frame().to_csv(path, index=False)
    print(f"best {tag} value: {result.best_point[0]} "
          f"(cv auc {result.mean_auc[result.best_index]:.4f})")


def cmd_tune_model(config: dict, model: str) -> None:
    trips, policies, split = _load_portfolio(config, "tune-model")
    spec = next(s for s in _model_specs({**config, "models": [model]}))
    feats = None
    if spec.scheme is not None:
        profiles = pipeline.compute_profiles(
            trips, split, spec.scheme, spec.algorithm, spec.detector_param,
            num_trees=config["num_trees"], seed=config["split_seed"],
        )
        feats = profiling.features_frame(profiles)
    frame, labels = design_frame(policies, trips, feats)
    train_vins = sorted(split.train_vins)
    folds = eval_tune.make_folds(train_vins, k=config["folds"],
                                 seed=config["split_seed"])
    result = eval_tune.tune_enet(
        frame.loc[train_vins], labels.loc[train_vins], folds,
        lambda_grid=config.get("lambda_grid"),
        alpha_grid=config.get("alpha_grid"),
        clamp=config["clamp"], impute_seed=config["split_seed"],
    )
    path = config["out"] / f"tune_enet_{model}.csv"
    result.as_frame().to_csv(path, index=False)
    lam, alpha = result.best_point
    print(f"best (lambda, alpha) for {model}: ({lam:.3g}, {alpha}) "
          f"(cv auc {result.mean_auc[result.best_index]:.4f})")


def cmd_train(config: dict, model: str) -> None:
    trips, policies, split = _load_portfolio(config, "train")
    spec = next(s for s in _model_specs({**config, "models": [model]}))
    trained, _, _ = pipeline.train_model(
        spec, trips, policies, split, clamp=config["clamp"],
        num_trees=config["num_trees"], seed=config["split_seed"],
    )
    out = config["out"]
    pipeline.save_model(trained, out / f"model_{model}.pkl")
    enet.write_coefficient_csv(trained.classifier,
                               out / f"coefficients_{model}.csv")
    print(f"trained {model}: {np.count_nonzero(trained.classifier.coefficients)}"
          f" nonzero coefficients")


def cmd_evaluate(config: dict) -> None:
    trips, policies, split = _load_portfolio(config, "evaluate")
    specs = _model_specs(config)
    report = pipeline.evaluate_models(
        specs, trips, policies, split, clamp=config["clamp"],
        num_trees=config["num_trees"], seed=config["split_seed"],
    )
    path = config["out"] / "evaluation_report.csv"
    report.to_csv(path, index=False)
    print(report.to_string(index=False))


def _write_roc_csv(scores: np.ndarray, labels: np.ndarray, path: Path) -> None:
    """ROC curve points swept over every distinct score threshold."""
    order = np.argsort(-scores, kind="stable")
    y = np.asarray(labels)[order]
    s = np.asarray(scores)[order]
    n_pos = max(int((y == 1).sum()), 1)
    n_neg = max(int((y == 0).sum()), 1)
    tps = np.cumsum(y == 1)
    fps = np.cumsum(y == 0)
    last = np.r_[np.flatnonzero(np.diff(s)), y.size - 1]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["threshold", "false_positive_rate", "true_positive_rate"])
        w.writerow([np.inf, 0.0, 0.0])
        for i in last:
            w.writerow([s[i], fps[i] / n_neg, tps[i] / n_pos])


def cmd_report(config: dict) -> None:
    trips, policies, split = _load_portfolio(config, "report")
    out = config["out"]
    test_vins = sorted(split.test_vins)
    labels = pd.Series({p.vin: p.claim_ind for p in policies})

    for model_name in config["models"]:
        model_path = out / f"model_{model_name}.pkl"
        if not model_path.exists():
            continue
        trained = pipeline.load_model(model_path)
        feats = None
        if trained.spec.scheme is not None:
            profiles = pipeline.compute_profiles(
                trips, split, trained.spec.scheme, trained.spec.algorithm,
                trained.spec.detector_param, num_trees=config["num_trees"],
                seed=config["split_seed"],
            )
            feats = profiling.features_frame(profiles)
        frame, _ = design_frame(policies, trips, feats)
        scores = pipeline.score_model(trained, frame, test_vins)
        y = labels.loc[test_vins].to_numpy()
        _write_roc_csv(scores, y, out / f"roc_{model_name}.csv")
        enet.write_coefficient_csv(trained.classifier,
                                   out / f"coefficients_{model_name}.csv")
        pd.DataFrame({"vin": test_vins, "score": scores}).to_csv(
            out / f"score_density_{model_name}.csv", index=False)

    # Spearman correlation of global Mahalanobis scores with the 8 attributes
    train_trips = [t for t in trips if t.vin in split.train_vins]
    matrix = build_feature_matrix(train_trips)
    from .anomaly import mahalanobis_fit, mahalanobis_score

    mah = mahalanobis_fit(matrix.attributes,
                          ridge_eps=max(config["mahalanobis_ridge"], 1e-8))
    scores = mahalanobis_score(mah, matrix.attributes)
    raw = derive_attributes(train_trips)
    with open(out / "spearman_attributes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trip_attribute", "spearman_correlation"])
        for j, name in enumerate(ATTRIBUTE_NAMES):
            w.writerow([name, f"{eval_tune.spearman(raw[:, j], scores):.4f}"])
    print(f"wrote report artifacts to {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripprofile",
        description="Routine/peculiarity anomaly profiling for claim "
                    "classification",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1,
                        help="reserved for parallel backends; single process")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate")
    for name in ("profile", "tune-detector"):
        p = sub.add_parser(name)
        p.add_argument("--scheme", choices=[profiling.LOCAL, profiling.GLOBAL],
                       required=True)
        p.add_argument("--algorithm", choices=list(profiling.ALGORITHMS),
                       required=True)
    for name in ("tune-model", "train"):
        p = sub.add_parser(name)
        p.add_argument("--model", required=True)
    sub.add_parser("evaluate")
    sub.add_parser("report")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = load_config(args.config, out_dir, args.seed)
    try:
        if args.command == "simulate":
            cmd_simulate(config)
        elif args.command == "profile":
            cmd_profile(config, args.scheme, args.algorithm)
        elif args.command == "tune-detector":
            cmd_tune_detector(config, args.scheme, args.algorithm)
        elif args.command == "tune-model":
            cmd_tune_model(config, args.model)
        elif args.command == "train":
            cmd_train(config, args.model)
        elif args.command == "evaluate":
            cmd_evaluate(config)
        elif args.command == "report":
            cmd_report(config)
    except (TripProfileError, ValueError, OSError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
