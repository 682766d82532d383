"""Input checks shared by the estimator and the command line."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .topology import DEFAULT_ALPHA, LocalNetwork


def check_network(X, alpha: float = DEFAULT_ALPHA) -> LocalNetwork:
    """Accept a :class:`LocalNetwork` or an ``(n, 2)`` array of peripheral
    positions with the relay at the origin."""
    if isinstance(X, LocalNetwork):
        return X
    pts = check_array(X, dtype=float, ensure_min_samples=1)
    if pts.shape[1] != 2:
        raise ValueError(f"peripheral positions must have two columns, got {pts.shape[1]}")
    return LocalNetwork(pts, alpha=alpha)


def check_demands(C, n_flows: int) -> np.ndarray:
    """Demands as a 2-D integer array with one row per traffic pattern.

    A single 1-D vector is promoted to one row.
    """
    arr = np.asarray(C)
    if arr.ndim == 1:
        arr = arr[None, :]
    arr = check_array(arr, dtype=None, ensure_min_features=0)
    if arr.shape[1] != n_flows:
        raise ValueError(f"demand rows must have one entry per potential flow ({n_flows}), "
                         f"got {arr.shape[1]}")
    if np.any(arr < 0) or np.any(arr != np.round(arr)):
        raise ValueError("demands must be non-negative integers")
    return arr.astype(np.int64)
