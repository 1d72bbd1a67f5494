"""Distance-to-centroid anomaly scoring with the inverse covariance metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingularCovarianceError


@dataclass(frozen=True)
class MahalanobisModel:
    centroid: np.ndarray
    precision: np.ndarray  # inverse of (sample covariance + ridge_eps * I)
    ridge_eps: float


def mahalanobis_fit(matrix: np.ndarray, ridge_eps: float = 0.0) -> MahalanobisModel:
    """Fit centroid and precision matrix from the rows of `matrix`.

    With ridge_eps = 0 a singular covariance raises instead of being silently
    regularized; pass a small positive ridge_eps for rank-deficient data.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-d matrix with at least 2 rows")
    if ridge_eps < 0:
        raise ValueError(f"ridge_eps must be >= 0, got {ridge_eps}")
    centroid = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov) + ridge_eps * np.eye(X.shape[1])
    eigvals = np.linalg.eigvalsh(cov)
    if eigvals[0] <= eigvals[-1] * 1e-12:
        raise SingularCovarianceError(
            "covariance matrix is singular; pass a positive ridge_eps"
        )
    chol = np.linalg.cholesky(cov)
    inv_chol = np.linalg.inv(chol)
    precision = inv_chol.T @ inv_chol
    precision = (precision + precision.T) / 2.0
    return MahalanobisModel(centroid=centroid, precision=precision, ridge_eps=ridge_eps)


def mahalanobis_score(model: MahalanobisModel, x: np.ndarray) -> np.ndarray:
    """Distance of point(s) `x` from the fitted centroid under the precision.

    Accepts a single p-vector or an m x p matrix; returns a scalar or m-vector.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != model.centroid.shape[0]:
        raise ValueError(
            f"dimension mismatch: point has {pts.shape[1]}, model has "
            f"{model.centroid.shape[0]}"
        )
    diff = pts - model.centroid
    quad = np.einsum("ij,jk,ik->i", diff, model.precision, diff)
    d = np.sqrt(np.maximum(quad, 0.0))
    return float(d[0]) if single else d
