"""Local outlier factor with exact neighbor search and tie expansion.

The neighborhood of a point is every other point at distance <= its
k-distance, so exact ties grow the set beyond k members. Duplicate-heavy
data can drive the mean reachability distance to zero; the density is
capped at 1e12 instead of diverging.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

_LRD_FLOOR = 1e-12
_CHUNK = 2048


def lof_scores(matrix: np.ndarray, k: int) -> np.ndarray:
    """LOF score for every row of `matrix` (Euclidean metric).

    Exact O(n^2) computation, chunked to bound memory.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, n-1] = [1, {n - 1}], got {k}")

    # pass 1: k-distance of every point
    kdist = np.empty(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        D = cdist(X[lo:hi], X)
        for i in range(lo, hi):
            row = np.delete(D[i - lo], i)
            kdist[i] = np.partition(row, k - 1)[k - 1]

    # pass 2: local reachability density
    lrd = np.empty(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        D = cdist(X[lo:hi], X)
        for i in range(lo, hi):
            d = D[i - lo].copy()
            d[i] = np.inf  # a point is never its own neighbor
            nbrs = np.flatnonzero(d <= kdist[i])
            rd = np.maximum(kdist[nbrs], d[nbrs])
            lrd[i] = 1.0 / max(rd.mean(), _LRD_FLOOR)

    # pass 3: ratio of neighbors' mean density to own density
    lof = np.empty(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        D = cdist(X[lo:hi], X)
        for i in range(lo, hi):
            d = D[i - lo].copy()
            d[i] = np.inf
            nbrs = np.flatnonzero(d <= kdist[i])
            lof[i] = lrd[nbrs].mean() / lrd[i]
    return lof
