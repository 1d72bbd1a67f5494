import numpy as np
import pandas as pd
import pytest

from tripprofile import pipeline, profiling
from tripprofile.design import design_frame, distance_driven, policy_frame
from tripprofile.synthgen import SynthConfig, generate_portfolio
from tripprofile.tabular_prep import TRF_COLUMNS
from tripprofile.trip_store import split_by_vin


@pytest.fixture(scope="module")
def portfolio():
    config = SynthConfig(num_vehicles=60, trips_per_vehicle_range=(20, 40),
                         peculiarity_claim_weight=2.0, seed=7)
    trips, policies, truths = generate_portfolio(config)
    split = split_by_vin(policies, 0.7, seed=0)
    return trips, policies, split


class TestDesignFrame:
    def test_policy_frame_layout(self, portfolio):
        trips, policies, _ = portfolio
        frame, labels = policy_frame(policies)
        assert list(frame.columns) == TRF_COLUMNS
        assert len(frame) == len(policies)
        assert set(labels.unique()) <= {0, 1}
        assert frame.index.is_monotonic_increasing
        missing = frame["commute_distance"].isna().sum()
        assert missing == sum(p.commute_distance is None for p in policies)

    def test_distance_driven_sums(self, portfolio):
        trips, _, _ = portfolio
        totals = distance_driven(trips)
        vin = trips[0].vin
        expected = sum(t.distance_km for t in trips if t.vin == vin)
        assert totals[vin] == pytest.approx(expected)

    def test_design_frame_without_profiles(self, portfolio):
        trips, policies, _ = portfolio
        frame, labels = design_frame(policies, trips)
        assert list(frame.columns) == TRF_COLUMNS + ["distance"]
        assert len(frame) == len(labels) == len(policies)

    def test_design_frame_with_profiles(self, portfolio):
        trips, policies, split = portfolio
        profiles = pipeline.compute_profiles(trips, split, profiling.GLOBAL,
                                             profiling.MAHALANOBIS, None)
        feats = profiling.features_frame(profiles)
        frame, _ = design_frame(policies, trips, feats)
        assert frame.shape[1] == 11 + 66
        assert list(frame.columns[-66:]) == (profiling.QUANTILE_NAMES
                                             + profiling.INTERACTION_NAMES)

    def test_missing_profile_vins_rejected(self, portfolio):
        trips, policies, split = portfolio
        profiles = pipeline.compute_profiles(trips, split, profiling.GLOBAL,
                                             profiling.MAHALANOBIS, None)
        feats = profiling.features_frame(profiles).iloc[:-2]
        with pytest.raises(ValueError, match="no profile features"):
            design_frame(policies, trips, feats)


class TestModelSpecs:
    def test_default_specs(self):
        specs = pipeline.default_model_specs()
        assert [s.name for s in specs] == [
            "baseline",
            "local_mahalanobis", "local_lof", "local_iforest",
            "global_mahalanobis", "global_lof", "global_iforest",
        ]
        assert specs[0].scheme is None
        by_name = {s.name: s for s in specs}
        assert by_name["local_lof"].detector_param == 0.35
        assert by_name["local_iforest"].detector_param == 0.85
        assert by_name["global_lof"].detector_param == 50
        assert by_name["global_iforest"].detector_param == 400


class TestTrainEvaluate:
    def test_train_and_score(self, portfolio):
        trips, policies, split = portfolio
        spec = pipeline.ModelSpec(name="baseline")
        model, frame, labels = pipeline.train_model(spec, trips, policies, split)
        test_vins = sorted(split.test_vins)
        scores = pipeline.score_model(model, frame, test_vins)
        assert scores.shape == (len(test_vins),)
        assert ((scores > 0) & (scores < 1)).all()

    def test_evaluate_reports_deltas(self, portfolio):
        trips, policies, split = portfolio
        specs = [pipeline.ModelSpec(name="baseline"),
                 pipeline.ModelSpec(name="global_mahalanobis",
                                    scheme=profiling.GLOBAL,
                                    algorithm=profiling.MAHALANOBIS)]
        report = pipeline.evaluate_models(specs, trips, policies, split)
        assert list(report["model"]) == ["baseline", "global_mahalanobis"]
        for metric in ("auc", "accuracy", "sensitivity", "specificity"):
            assert report.loc[0, f"delta_{metric}"] == 0.0
            recomputed = report.loc[1, metric] - report.loc[0, metric]
            assert report.loc[1, f"delta_{metric}"] == pytest.approx(recomputed)

    def test_deterministic(self, portfolio):
        trips, policies, split = portfolio
        spec = pipeline.ModelSpec(name="global_iforest",
                                  scheme=profiling.GLOBAL,
                                  algorithm=profiling.IFOREST,
                                  detector_param=128)
        a, frame, _ = pipeline.train_model(spec, trips, policies, split)
        b, _, _ = pipeline.train_model(spec, trips, policies, split)
        np.testing.assert_array_equal(a.classifier.coefficients,
                                      b.classifier.coefficients)

    def test_save_load_round_trip(self, portfolio, tmp_path):
        trips, policies, split = portfolio
        spec = pipeline.ModelSpec(name="baseline")
        model, frame, _ = pipeline.train_model(spec, trips, policies, split)
        path = tmp_path / "model.pkl"
        pipeline.save_model(model, path)
        loaded = pipeline.load_model(path)
        vins = sorted(split.test_vins)
        np.testing.assert_array_equal(pipeline.score_model(loaded, frame, vins),
                                      pipeline.score_model(model, frame, vins))

    def test_load_rejects_unknown_version(self, tmp_path):
        import pickle

        path = tmp_path / "model.pkl"
        path.write_bytes(pickle.dumps({"format_version": 99, "model": None}))
        with pytest.raises(ValueError, match="version"):
            pipeline.load_model(path)


def test_compute_profiles_local_covers_all_vehicles(portfolio):
    trips, policies, split = portfolio
    profiles = pipeline.compute_profiles(trips, split, profiling.LOCAL,
                                         profiling.LOF, 0.35)
    assert set(profiles) == {p.vin for p in policies}


def test_compute_profiles_unknown_scheme(portfolio):
    trips, _, split = portfolio
    with pytest.raises(ValueError):
        pipeline.compute_profiles(trips, split, "REGIONAL",
                                  profiling.MAHALANOBIS, None)
