import numpy as np
import pytest

from oracles import brute_lof
from tripprofile.anomaly import lof_scores


def test_square_symmetry_gives_uniform_scores():
    # the four corners of a square are mutually interchangeable, so every
    # point has the same density as its neighbors and LOF = 1 exactly
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(lof_scores(X, k=2), np.ones(4))


def test_isolated_point_scores_high():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(size=(30, 2)), [[15.0, 15.0]]])
    scores = lof_scores(X, k=5)
    assert np.argmax(scores) == 30
    assert scores[30] > 2.0
    assert np.median(scores[:30]) == pytest.approx(1.0, abs=0.2)


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(1)
    for n, p, k in [(20, 2, 3), (50, 4, 7), (80, 8, 15), (30, 1, 2)]:
        X = rng.normal(size=(n, p))
        expected = brute_lof(X, k)
        np.testing.assert_allclose(lof_scores(X, k), expected, rtol=1e-10)


def test_tie_expansion_on_integer_lattice():
    # lattice coordinates make distances exactly representable, so the
    # <= k-distance comparison must include all tied neighbors
    xs, ys = np.meshgrid(np.arange(5.0), np.arange(5.0))
    X = np.column_stack([xs.ravel(), ys.ravel()])
    for k in (1, 3, 4, 8):
        np.testing.assert_allclose(lof_scores(X, k), brute_lof(X, k), rtol=1e-10)


def test_duplicate_points_stay_finite():
    X = np.array([[0.0, 0.0]] * 4 + [[5.0, 5.0]])
    scores = lof_scores(X, k=2)
    assert np.isfinite(scores).all()
    np.testing.assert_allclose(scores, brute_lof(X, 2), rtol=1e-10)


def test_k_bounds():
    X = np.zeros((5, 2))
    with pytest.raises(ValueError):
        lof_scores(X, 0)
    with pytest.raises(ValueError):
        lof_scores(X, 5)
    with pytest.raises(ValueError):
        lof_scores(X[0], 1)
