"""Independent reference implementations used only by the tests.

These are deliberately written as plain, slow, loop-based code with no
shared helpers from the package under test, so that agreement between the
two is meaningful evidence of correctness.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize


def brute_lof(X: np.ndarray, k: int) -> np.ndarray:
    """Loop-based local outlier factor: k-distance with tie expansion,
    reachability distance, local reachability density, score."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            dist[i, j] = math.dist(X[i], X[j])

    kdist = np.zeros(n)
    neighbors: list[list[int]] = []
    for i in range(n):
        others = sorted(d for j, d in enumerate(dist[i]) if j != i)
        kdist[i] = others[k - 1]
        neighbors.append(
            [j for j in range(n) if j != i and dist[i, j] <= kdist[i]]
        )

    lrd = np.zeros(n)
    for i in range(n):
        reach = [max(kdist[j], dist[i, j]) for j in neighbors[i]]
        lrd[i] = 1.0 / max(sum(reach) / len(reach), 1e-12)

    lof = np.zeros(n)
    for i in range(n):
        lof[i] = sum(lrd[j] for j in neighbors[i]) / len(neighbors[i]) / lrd[i]
    return lof


def brute_query_lof(X_train: np.ndarray, query: np.ndarray, k: int) -> float:
    """LOF of one out-of-sample point against a reference cloud."""
    X_train = np.asarray(X_train, dtype=float)
    n = X_train.shape[0]
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            dist[i, j] = math.dist(X_train[i], X_train[j])
    kdist = np.zeros(n)
    lrd = np.zeros(n)
    for i in range(n):
        others = sorted(d for j, d in enumerate(dist[i]) if j != i)
        kdist[i] = others[k - 1]
    for i in range(n):
        nbrs = [j for j in range(n) if j != i and dist[i, j] <= kdist[i]]
        reach = [max(kdist[j], dist[i, j]) for j in nbrs]
        lrd[i] = 1.0 / max(sum(reach) / len(reach), 1e-12)

    dq = np.array([math.dist(query, X_train[j]) for j in range(n)])
    kd_q = sorted(dq)[k - 1]
    nbrs_q = [j for j in range(n) if dq[j] <= kd_q]
    reach_q = [max(kdist[j], dq[j]) for j in nbrs_q]
    lrd_q = 1.0 / max(sum(reach_q) / len(reach_q), 1e-12)
    return sum(lrd[j] for j in nbrs_q) / len(nbrs_q) / lrd_q


def brute_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Pairwise concordance with ties counted one half."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def logistic_oracle(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """High-precision non-penalized logistic fit (no intercept) via BFGS."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]

    def loss(beta):
        z = X @ beta
        return float(np.mean(np.logaddexp(0.0, -np.where(y == 1, z, -z))))

    def grad(beta):
        p = 1.0 / (1.0 + np.exp(-(X @ beta)))
        return X.T @ (p - y) / n

    res = minimize(loss, np.zeros(X.shape[1]), jac=grad, method="BFGS",
                   options={"gtol": 1e-12, "maxiter": 1000})
    return res.x


def enet_objective_oracle(beta, X, y, lam, alpha) -> float:
    """Plain re-statement of the penalized objective."""
    z = X @ beta
    risk = float(np.mean(np.logaddexp(0.0, -np.where(y == 1, z, -z))))
    pen = lam * ((1 - alpha) * float(np.sum(beta**2))
                 + alpha * float(np.sum(np.abs(beta))))
    return risk + pen


def mahalanobis_oracle(X: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Mahalanobis distances via numpy.linalg.solve, no Cholesky."""
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    cov = np.cov(X, rowvar=False, ddof=1)
    out = []
    for p in np.atleast_2d(points):
        d = p - mu
        out.append(math.sqrt(float(d @ np.linalg.solve(cov, d))))
    return np.array(out)
