from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist


def gaussian_kernel(s_i: ArrayLike, s_j: ArrayLike, tau: float) -> float:
    """k(s_i, s_j) = exp(-||s_i - s_j||^2 / tau^2)."""
    if tau <= 0:
        raise ValueError(f"kernel width must be positive, got {tau}")
    d = np.asarray(s_i, dtype=float) - np.asarray(s_j, dtype=float)
    return float(np.exp(-np.dot(d, d) / (tau * tau)))


def squared_distances(A: ArrayLike, B: ArrayLike) -> np.ndarray:
    a = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_2d(np.asarray(B, dtype=float))
    return cdist(a, b, "sqeuclidean")


def gaussian_gram(A: ArrayLike, B: ArrayLike, tau: float) -> np.ndarray:
    """Matrix of gaussian_kernel over the rows of A and B."""
    if tau <= 0:
        raise ValueError(f"kernel width must be positive, got {tau}")
    return np.exp(-squared_distances(A, B) / (tau * tau))


def scale_inputs(X: ArrayLike, scale: Sequence[float] | np.ndarray | None) -> np.ndarray:
    x = np.asarray(X, dtype=float)
    if scale is None:
        return x
    return x / np.asarray(scale, dtype=float)
