"""Isolation forest: ensemble of random binary partition trees.

Trees are grown on subsamples drawn without replacement, with a height limit
of ceil(log2(b)); a leaf holding m > 1 points contributes its depth plus
c(m), the expected extra path length, when scored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_EULER_GAMMA = 0.5772156649

_FOREST_FORMAT_VERSION = 1


def c_factor(n: int) -> float:
    """Expected unsuccessful-search path length in a binary search tree.

    Uses the logarithmic estimate of the harmonic number.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    harmonic = np.log(n - 1) + _EULER_GAMMA
    return 2.0 * harmonic - 2.0 * (n - 1) / n


def _leaf_adjustment(m: int) -> float:
    return c_factor(m) if m >= 2 else 0.0


@dataclass
class _Node:
    # internal: split_var/split_value set, left/right children present
    # leaf: size set, children None
    split_var: int | None = None
    split_value: float | None = None
    left: "_Node | None" = None
    right: "_Node | None" = None
    size: int = 0


@dataclass(frozen=True)
class IsolationForestModel:
    trees: list[_Node]
    sample_size: int
    num_trees: int
    num_features: int
    seed: int


def _grow(X: np.ndarray, idx: np.ndarray, depth: int, limit: int,
          rng: np.random.Generator) -> _Node:
    if depth >= limit or idx.size <= 1:
        return _Node(size=int(idx.size))
    sub = X[idx]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    splittable = np.flatnonzero(hi > lo)
    if splittable.size == 0:  # all duplicates
        return _Node(size=int(idx.size))
    var = int(rng.choice(splittable))
    value = float(rng.uniform(lo[var], hi[var]))
    mask = sub[:, var] < value
    left_idx = idx[mask]
    right_idx = idx[~mask]
    if left_idx.size == 0 or right_idx.size == 0:
        # uniform() can return an endpoint; retry as a leaf-free degenerate split
        return _Node(size=int(idx.size))
    return _Node(
        split_var=var,
        split_value=value,
        left=_grow(X, left_idx, depth + 1, limit, rng),
        right=_grow(X, right_idx, depth + 1, limit, rng),
    )


def iforest_fit(matrix: np.ndarray, num_trees: int = 100, sample_size: int = 256,
                seed: int = 0) -> IsolationForestModel:
    """Build `num_trees` isolation trees on subsamples of `sample_size` rows."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    n = X.shape[0]
    if not 2 <= sample_size <= n:
        raise ValueError(f"sample_size must be in [2, {n}], got {sample_size}")
    if num_trees < 1:
        raise ValueError(f"num_trees must be >= 1, got {num_trees}")
    rng = np.random.default_rng(seed)
    limit = int(np.ceil(np.log2(sample_size)))
    trees = []
    for _ in range(num_trees):
        idx = rng.choice(n, size=sample_size, replace=False)
        trees.append(_grow(X, idx, 0, limit, rng))
    return IsolationForestModel(
        trees=trees,
        sample_size=sample_size,
        num_trees=num_trees,
        num_features=X.shape[1],
        seed=seed,
    )


def _path_lengths(node: _Node, X: np.ndarray, rows: np.ndarray, depth: int,
                  out: np.ndarray) -> None:
    if node.split_var is None:
        out[rows] = depth + _leaf_adjustment(node.size)
        return
    mask = X[rows, node.split_var] < node.split_value
    left_rows = rows[mask]
    right_rows = rows[~mask]
    if left_rows.size:
        _path_lengths(node.left, X, left_rows, depth + 1, out)
    if right_rows.size:
        _path_lengths(node.right, X, right_rows, depth + 1, out)


def iforest_score(model: IsolationForestModel, x: np.ndarray) -> np.ndarray:
    """Anomaly score in (0, 1): 2 ** (-mean_path_length / c(sample_size)).

    Accepts a single p-vector or an m x p matrix.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != model.num_features:
        raise ValueError(
            f"dimension mismatch: point has {pts.shape[1]}, model has "
            f"{model.num_features}"
        )
    total = np.zeros(pts.shape[0])
    rows = np.arange(pts.shape[0])
    depths = np.empty(pts.shape[0])
    for tree in model.trees:
        _path_lengths(tree, pts, rows, 0, depths)
        total += depths
    mean_path = total / model.num_trees
    scores = np.exp2(-mean_path / c_factor(model.sample_size))
    return float(scores[0]) if single else scores


def _node_to_dict(node: _Node) -> dict:
    if node.split_var is None:
        return {"size": node.size}
    return {
        "var": node.split_var,
        "value": node.split_value,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict) -> _Node:
    if "size" in d:
        return _Node(size=d["size"])
    return _Node(
        split_var=d["var"],
        split_value=d["value"],
        left=_node_from_dict(d["left"]),
        right=_node_from_dict(d["right"]),
    )


def save_forest(model: IsolationForestModel, path: str | Path) -> None:
    """Serialize a forest to versioned JSON."""
    payload = {
        "format_version": _FOREST_FORMAT_VERSION,
        "sample_size": model.sample_size,
        "num_trees": model.num_trees,
        "num_features": model.num_features,
        "seed": model.seed,
        "trees": [_node_to_dict(t) for t in model.trees],
    }
    Path(path).write_text(json.dumps(payload))


def load_forest(path: str | Path) -> IsolationForestModel:
    """Load a forest saved by :func:`save_forest`."""
    payload = json.loads(Path(path).read_text())
    version = payload.get("format_version")
    if version != _FOREST_FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version {version!r}")
    return IsolationForestModel(
        trees=[_node_from_dict(t) for t in payload["trees"]],
        sample_size=payload["sample_size"],
        num_trees=payload["num_trees"],
        num_features=payload["num_features"],
        seed=payload["seed"],
    )
