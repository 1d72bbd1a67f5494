import numpy as np
import pandas as pd
import pytest
from scipy import stats

from oracles import brute_auc
from tripprofile import eval_tune
from tripprofile.errors import UndefinedMetricError
from tripprofile.eval_tune import (
    ALPHA_GRID,
    B_FRAC_GRID,
    B_GRID,
    GridSpec,
    K_FRAC_GRID,
    K_GRID,
    LAMBDA_GRID,
    auc,
    confusion_metrics,
    cross_validate_frame,
    cv_auc_unpenalized,
    make_folds,
    spearman,
    tune_detector,
    tune_enet,
)


class TestAuc:
    def test_worked_example(self):
        assert auc(np.array([0.1, 0.4, 0.35, 0.8]),
                   np.array([0, 0, 1, 1])) == 0.75

    def test_perfect_and_reversed(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        assert auc(scores, np.array([0, 0, 1, 1])) == 1.0
        assert auc(scores, np.array([1, 1, 0, 0])) == 0.0

    def test_ties_count_half(self):
        assert auc(np.array([0.5, 0.5]), np.array([0, 1])) == 0.5

    def test_matches_brute_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(5, 200))
            scores = rng.integers(0, 10, size=n) / 10.0  # many ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert auc(scores, labels) == brute_auc(scores, labels)

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc(np.array([0.1, 0.2]), np.array([1, 1]))


class TestConfusionMetrics:
    def test_hand_example(self):
        scores = np.array([0.9, 0.6, 0.4, 0.2, 0.7])
        labels = np.array([1, 0, 1, 0, 1])
        m = confusion_metrics(scores, labels)
        # predictions at 0.5: 1, 1, 0, 0, 1 -> TP=2 TN=1 FP=1 FN=1
        assert m["accuracy"] == pytest.approx(3 / 5)
        assert m["sensitivity"] == pytest.approx(2 / 3)
        assert m["specificity"] == pytest.approx(1 / 2)

    def test_threshold_inclusive(self):
        m = confusion_metrics(np.array([0.5, 0.4]), np.array([1, 0]))
        assert m["sensitivity"] == 1.0

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            confusion_metrics(np.array([0.6]), np.array([1]))


class TestSpearman:
    def test_monotone_relationship(self):
        x = np.arange(20.0)
        assert spearman(x, np.exp(x / 5)) == pytest.approx(1.0)
        assert spearman(x, -x**3) == pytest.approx(-1.0)

    def test_matches_scipy(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=100)
        y = x + rng.normal(size=100)
        expected = stats.spearmanr(x, y).statistic
        assert spearman(x, y) == pytest.approx(expected, abs=1e-12)


class TestFolds:
    def test_balanced_assignment(self):
        vins = [f"V{i}" for i in range(23)]
        plan = make_folds(vins, k=5, seed=0)
        sizes = [sum(1 for f in plan.assignments.values() if f == fold)
                 for fold in range(5)]
        assert set(plan.assignments) == set(vins)
        assert max(sizes) - min(sizes) <= 1

    def test_deterministic(self):
        vins = [f"V{i}" for i in range(30)]
        assert make_folds(vins, 5, 3) == make_folds(vins, 5, 3)
        assert make_folds(vins, 5, 3) != make_folds(vins, 5, 4)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            make_folds(["A", "B"], k=1)


class TestGrids:
    def test_cardinalities(self):
        assert len(K_FRAC_GRID) == 12
        assert len(B_FRAC_GRID) == 20
        assert len(K_GRID) == 10
        assert len(B_GRID) == 10
        assert len(LAMBDA_GRID) == 50
        assert len(ALPHA_GRID) == 5
        assert len(LAMBDA_GRID) * len(ALPHA_GRID) == 250

    def test_endpoints(self):
        assert K_FRAC_GRID[0] == pytest.approx(0.05)
        assert K_FRAC_GRID[-1] == pytest.approx(0.60)
        assert B_FRAC_GRID[-1] == pytest.approx(1.00)
        assert K_GRID == list(range(5, 51, 5))
        assert B_GRID == list(range(100, 1001, 100))
        assert LAMBDA_GRID[0] == pytest.approx(1e-10)
        assert LAMBDA_GRID[-1] == pytest.approx(1.0)
        assert ALPHA_GRID == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_grid_spec_validation(self):
        with pytest.raises(ValueError):
            GridSpec("empty", ())
        with pytest.raises(ValueError):
            GridSpec("unsorted", (2.0, 1.0))


def make_cv_data(n=80, seed=0):
    rng = np.random.default_rng(seed)
    vins = [f"V{i:03d}" for i in range(n)]
    frame = pd.DataFrame({
        "x1": rng.normal(size=n),
        "x2": rng.normal(size=n),
    }, index=vins)
    logits = 2.0 * frame["x1"].to_numpy()
    labels = pd.Series((rng.uniform(size=n) < 1 / (1 + np.exp(-logits)))
                       .astype(int), index=vins)
    return frame, labels


class TestCrossValidation:
    def test_out_of_fold_only(self):
        frame, labels = make_cv_data()
        folds = make_folds(list(frame.index), k=4, seed=0)
        seen_valid: list[set] = []

        def fit_predict(train_frame, y_train, valid_frame):
            assert not set(train_frame.index) & set(valid_frame.index)
            seen_valid.append(set(valid_frame.index))
            return np.zeros(len(valid_frame))

        cross_validate_frame(frame, labels, folds, fit_predict)
        covered = set().union(*seen_valid)
        assert covered == set(frame.index)

    def test_signal_beats_noise(self):
        frame, labels = make_cv_data(n=200, seed=2)
        folds = make_folds(list(frame.index), k=5, seed=0)
        mean_auc, sd_auc = cv_auc_unpenalized(frame, labels, folds)
        assert mean_auc > 0.7
        assert sd_auc >= 0.0
        noise = frame.copy()
        noise["x1"] = np.random.default_rng(3).normal(size=len(frame))
        noise_auc, _ = cv_auc_unpenalized(noise, labels, folds)
        assert mean_auc > noise_auc


class TestTuneDetector:
    def test_picks_informative_value(self):
        frame, labels = make_cv_data(n=150, seed=4)
        noise = frame.copy()
        noise["x1"] = np.random.default_rng(5).normal(size=len(frame))
        folds = make_folds(list(frame.index), k=5, seed=0)
        grid = GridSpec("k", (1.0, 2.0))
        result = tune_detector({1.0: noise, 2.0: frame}, labels, folds, grid)
        assert result.best_point == (2.0,)
        assert len(result.grid) == 2
        report = result.as_frame()
        assert list(report.columns) == ["grid_value_1", "mean_auc", "sd_auc"]

    def test_tie_prefers_smaller_value(self):
        frame, labels = make_cv_data(n=100, seed=6)
        folds = make_folds(list(frame.index), k=5, seed=0)
        grid = GridSpec("k", (1.0, 2.0, 3.0))
        result = tune_detector({v: frame for v in grid.values}, labels, folds,
                               grid)
        assert result.best_point == (1.0,)


class TestTuneEnet:
    def test_tie_prefers_larger_lambda_then_alpha(self, monkeypatch):
        frame, labels = make_cv_data(n=40, seed=7)
        folds = make_folds(list(frame.index), k=2, seed=0)
        monkeypatch.setattr(eval_tune, "cross_validate",
                            lambda *a, **kw: (0.5, 0.0))
        result = tune_enet(frame, labels, folds,
                           lambda_grid=[0.1, 1.0], alpha_grid=[0.0, 1.0])
        assert result.best_point == (1.0, 1.0)

    def test_small_grid_runs_end_to_end(self):
        rng = np.random.default_rng(8)
        n = 100
        vins = [f"V{i:03d}" for i in range(n)]
        frame = pd.DataFrame({
            "annual_distance": rng.gamma(4.0, 3000.0, size=n),
            "commute_distance": rng.gamma(2.0, 8.0, size=n),
            "conv_count_3_yrs_minor": rng.poisson(0.4, size=n).astype(float),
            "gender": rng.choice(["F", "M"], size=n),
            "marital_status": rng.choice(["single", "married"], size=n),
            "pmt_plan": rng.choice(["annual", "monthly"], size=n),
            "veh_age": rng.integers(0, 20, size=n).astype(float),
            "veh_use": rng.choice(["commute", "pleasure"], size=n),
            "years_claim_free": rng.integers(0, 25, size=n).astype(float),
            "years_licensed": rng.integers(1, 50, size=n).astype(float),
            "distance": rng.gamma(5.0, 2000.0, size=n),
        }, index=vins)
        labels = pd.Series(rng.integers(0, 2, size=n), index=vins)
        folds = make_folds(vins, k=3, seed=0)
        result = tune_enet(frame, labels, folds,
                           lambda_grid=[1e-3, 1e-1], alpha_grid=[0.5])
        assert len(result.grid) == 2
        assert result.best_point in result.grid
