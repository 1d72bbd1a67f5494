"""Elastic-net regularized logistic regression.

Objective: cross-entropy risk + lambda * [(1 - alpha) * sum(beta^2)
+ alpha * sum(|beta|)].  Note the ridge part carries NO 1/2 factor, so
lambda values are not transferable to conventions that include one.

Inputs must be centered and scaled (the recipe contract); there is no
intercept. The solver is cyclic coordinate descent on a per-coordinate
quadratic majorization of the risk with soft-thresholding, which makes the
penalized objective non-increasing across every coordinate update.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8  # relative objective-change stop
    max_iter: int = 10_000  # outer sweeps
    kkt_tol: float = 1e-6


@dataclass
class FittedClassifier:
    coefficients: np.ndarray  # standardized scale, no intercept
    lam: float
    alpha: float
    converged: bool
    final_objective: float
    objective_history: list[float] = field(default_factory=list)
    recipe_ref: str = ""
    feature_names: list[str] = field(default_factory=list)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _risk_from_z(z: np.ndarray, y: np.ndarray) -> float:
    signed = np.where(y == 1, -z, z)
    # log(1 + exp(t)) = max(t, 0) + log1p(exp(-|t|))
    return float(np.mean(np.maximum(signed, 0.0) + np.log1p(np.exp(-np.abs(signed)))))


def empirical_risk(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy, stabilized so extreme linear predictors
    stay finite: loss_i = log(1 + exp(-s_i * z_i)) with s_i = +/-1."""
    return _risk_from_z(X @ beta, y)


def _penalty(beta: np.ndarray, lam: float, alpha: float) -> float:
    return lam * ((1.0 - alpha) * float(beta @ beta)
                  + alpha * float(np.abs(beta).sum()))


def objective(beta: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float,
              alpha: float) -> float:
    return empirical_risk(beta, X, y) + _penalty(beta, lam, alpha)


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def fit(X: np.ndarray, y: np.ndarray, lam: float, alpha: float,
        config: SolverConfig = SolverConfig(),
        warm_start: np.ndarray | None = None) -> FittedClassifier:
    """Minimize the penalized objective by cyclic coordinate descent."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("non-finite values in inputs")
    if lam < 0 or not 0.0 <= alpha <= 1.0:
        raise ValueError(f"need lam >= 0 and alpha in [0, 1], got {lam}, {alpha}")
    n, p = X.shape

    # per-coordinate curvature bound: sigma'(z) <= 1/4
    lipschitz = (X * X).sum(axis=0) / (4.0 * n)
    lipschitz = np.maximum(lipschitz, 1e-12)

    beta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=float)
    z = X @ beta
    obj = objective(beta, X, y, lam, alpha)
    history = [obj]
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)

    converged = False
    for sweep in range(config.max_iter):
        for j in range(p):
            sig = _sigmoid(z)
            grad_j = float(X[:, j] @ (sig - y)) / n
            bj = beta[j]
            # Newton curvature converges much faster than the 1/4 bound on
            # correlated designs, but is not a global majorizer; accept its
            # step only when the objective does not increase, else fall back
            # to the majorization step, which provably never increases it.
            hess_j = max(float((X[:, j] ** 2) @ (sig * (1.0 - sig))) / n, 1e-12)
            trial = _soft_threshold(hess_j * bj - grad_j, l1) / (hess_j + 2.0 * l2)
            if trial != bj:
                z_trial = z + X[:, j] * (trial - bj)
                delta_pen = (l2 * (trial * trial - bj * bj)
                             + l1 * (abs(trial) - abs(bj)))
                if _risk_from_z(z_trial, y) + delta_pen <= _risk_from_z(z, y) + 1e-15:
                    z = z_trial
                    beta[j] = trial
                    continue
            num = lipschitz[j] * bj - grad_j
            new = _soft_threshold(num, l1) / (lipschitz[j] + 2.0 * l2)
            if new != bj:
                z += X[:, j] * (new - bj)
                beta[j] = new
        new_obj = objective(beta, X, y, lam, alpha)
        history.append(new_obj)
        rel_change = abs(obj - new_obj) / max(abs(obj), 1.0)
        obj = new_obj
        if rel_change < config.tol:
            residual = _kkt_residual(beta, X, y, lam, alpha)
            if residual <= config.kkt_tol:
                converged = True
                break
    if not converged:
        residual = _kkt_residual(beta, X, y, lam, alpha)
        if residual <= config.kkt_tol:
            converged = True
        else:
            logger.warning(
                "solver did not converge (lam=%g, alpha=%g, kkt=%.3g)",
                lam, alpha, residual,
            )
    return FittedClassifier(
        coefficients=beta,
        lam=lam,
        alpha=alpha,
        converged=converged,
        final_objective=obj,
        objective_history=history,
    )


def _kkt_residual(beta: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float,
                  alpha: float) -> float:
    n = X.shape[0]
    grad = X.T @ (_sigmoid(X @ beta) - y) / n
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    residual = 0.0
    for j in range(beta.size):
        if beta[j] != 0.0:
            r = abs(grad[j] + 2.0 * l2 * beta[j] + l1 * np.sign(beta[j]))
        else:
            r = max(abs(grad[j]) - l1, 0.0)
        residual = max(residual, r)
    return residual


def kkt_check(model: FittedClassifier, X: np.ndarray, y: np.ndarray) -> float:
    """Max violation of the first-order optimality conditions."""
    return _kkt_residual(model.coefficients, np.asarray(X, dtype=float),
                         np.asarray(y, dtype=float), model.lam, model.alpha)


def predict_proba(model: FittedClassifier, x: np.ndarray) -> np.ndarray:
    """Claim probability sigma(x . beta) for one point or a matrix of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != model.coefficients.size:
        raise ValueError(
            f"dimension mismatch: point has {pts.shape[1]}, model has "
            f"{model.coefficients.size}"
        )
    probs = _sigmoid(pts @ model.coefficients)
    return float(probs[0]) if single else probs


def newton_logistic(X: np.ndarray, y: np.ndarray, max_iter: int = 100,
                    tol: float = 1e-10, max_norm: float = 30.0) -> np.ndarray:
    """Non-penalized logistic fit (no intercept) by damped Newton-Raphson.

    Used by the detector-tuning loop, where the model is a plain logistic
    regression. Separation is handled by capping the coefficient norm, which
    leaves predicted rankings intact.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    beta = np.zeros(p)
    risk = empirical_risk(beta, X, y)
    for _ in range(max_iter):
        pi = _sigmoid(X @ beta)
        grad = X.T @ (pi - y) / n
        w = np.maximum(pi * (1.0 - pi), 1e-10)
        hess = (X * w[:, None]).T @ X / n
        hess[np.diag_indices_from(hess)] += 1e-10
        step = np.linalg.solve(hess, grad)
        # backtracking keeps the risk monotone on ill-conditioned designs
        t = 1.0
        for _ in range(30):
            cand = beta - t * step
            cand_risk = empirical_risk(cand, X, y)
            if cand_risk <= risk:
                break
            t /= 2.0
        beta, prev_risk, risk = cand, risk, cand_risk
        norm = np.linalg.norm(beta)
        if norm > max_norm:
            beta *= max_norm / norm
            risk = empirical_risk(beta, X, y)
            break
        if abs(prev_risk - risk) < tol:
            break
    return beta


def write_coefficient_csv(model: FittedClassifier, path: str | Path) -> None:
    """Export `feature,coefficient`, zeros included."""
    names = model.feature_names or [f"x{j}" for j in range(model.coefficients.size)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["feature", "coefficient"])
        for name, coef in zip(names, model.coefficients):
            w.writerow([name, repr(float(coef))])
