from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike

from gp_skrl.errors import EmptyDictionaryError, ShapeMismatchError
from gp_skrl.kernels.dictionary import Dictionary
from gp_skrl.kernels.gaussian import scale_inputs, squared_distances
from gp_skrl.schemas.config import KernelConfig


class FeatureMap:
    """Width-major multikernel features: all n_K entries for widths[0], then widths[1], ..."""

    def __init__(self, dictionary: Dictionary, widths: Sequence[float]) -> None:
        if len(dictionary) == 0:
            raise EmptyDictionaryError("multikernel features need a non-empty dictionary")
        if not widths or any(w <= 0 for w in widths):
            raise ValueError(f"feature widths must be non-empty and positive, got {list(widths)}")
        self.dictionary = dictionary
        self.widths = np.asarray(widths, dtype=float)
        self._inv_sq = 1.0 / (self.widths * self.widths)

    @property
    def n_kernels(self) -> int:
        return len(self.dictionary)

    @property
    def dim(self) -> int:
        return len(self.widths) * len(self.dictionary)

    def __call__(self, X: ArrayLike) -> np.ndarray:
        """Feature rows for a batch (M, d) or a single point (d,); always returns (M, n_F)."""
        x = np.atleast_2d(np.asarray(X, dtype=float))
        if x.shape[1] != self.dictionary.dim:
            raise ShapeMismatchError(f"expected inputs of dimension {self.dictionary.dim}, got {x.shape[1]}")
        d2 = squared_distances(scale_inputs(x, self.dictionary.scale), self.dictionary.scaled_elements)
        blocks = [np.exp(-d2 * c) for c in self._inv_sq]
        return np.concatenate(blocks, axis=1)


def multikernel_feature(x: ArrayLike, dictionary: Dictionary, cfg: KernelConfig) -> np.ndarray:
    """Feature vector of length len(widths) * n_K for one error state."""
    return FeatureMap(dictionary, cfg.widths)(x)[0]
