"""ALD-sparsified kernel dictionaries with an incrementally maintained Gram inverse."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from pathlib import Path

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from gp_skrl.errors import IllConditionedError
from gp_skrl.kernels.gaussian import gaussian_gram, scale_inputs
from gp_skrl.schemas.config import KernelConfig

GRAM_JITTER = 1e-10
FORMAT_VERSION = 1


class Dictionary:
    """Ordered dictionary elements c_1..c_n with cached (K_DD + jitter I)^-1 under one kernel width."""

    def __init__(self, dim: int, tau: float, delta_max: float, scale: ArrayLike | None = None) -> None:
        if tau <= 0 or delta_max <= 0:
            raise ValueError(f"tau and delta_max must be positive, got tau={tau}, delta_max={delta_max}")
        self.dim = dim
        self.tau = float(tau)
        self.delta_max = float(delta_max)
        self.scale = None if scale is None else np.asarray(scale, dtype=float)
        self._elements = np.empty((0, dim))
        self._scaled = np.empty((0, dim))
        self._gram = np.empty((0, 0))
        self._gram_inv = np.empty((0, 0))

    @classmethod
    def for_config(cls, dim: int, cfg: KernelConfig) -> Dictionary:
        return cls(dim, cfg.dict_width, cfg.ald_threshold, cfg.input_scale)

    def __len__(self) -> int:
        return len(self._elements)

    @property
    def elements(self) -> np.ndarray:
        return self._elements

    @property
    def scaled_elements(self) -> np.ndarray:
        return self._scaled

    @property
    def gram(self) -> np.ndarray:
        return self._gram

    @property
    def gram_inv(self) -> np.ndarray:
        return self._gram_inv

    def kernel_vector(self, z: ArrayLike) -> np.ndarray:
        zs = scale_inputs(np.asarray(z, dtype=float).reshape(1, -1), self.scale)
        return gaussian_gram(self._scaled, zs, self.tau)[:, 0]

    def ald(self, z: ArrayLike) -> tuple[float, np.ndarray]:
        """Projection residual of z's feature image onto the span of the elements."""
        if len(self) == 0:
            return 1.0, np.empty(0)
        k = self.kernel_vector(z)
        coeffs = self._gram_inv @ k
        delta = 1.0 - float(k @ coeffs)
        return max(delta, 0.0), coeffs

    def add(self, z: ArrayLike) -> None:
        """Append z, updating the Gram inverse by the block-inverse formula."""
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.shape != (self.dim,):
            raise ValueError(f"dictionary element must have dimension {self.dim}, got {z.shape}")
        zs = scale_inputs(z, self.scale)
        n = len(self)
        if n == 0:
            self._gram = np.array([[1.0 + GRAM_JITTER]])
            self._gram_inv = np.array([[1.0 / (1.0 + GRAM_JITTER)]])
        else:
            k = gaussian_gram(self._scaled, zs[None, :], self.tau)[:, 0]
            a = self._gram_inv @ k
            schur = 1.0 + GRAM_JITTER - float(k @ a)
            if schur <= 0.0:
                raise IllConditionedError(f"Schur complement {schur:.3e} is not positive; element is dependent")
            inv = np.empty((n + 1, n + 1))
            inv[:n, :n] = self._gram_inv + np.outer(a, a) / schur
            inv[:n, n] = -a / schur
            inv[n, :n] = -a / schur
            inv[n, n] = 1.0 / schur
            gram = np.empty((n + 1, n + 1))
            gram[:n, :n] = self._gram
            gram[:n, n] = k
            gram[n, :n] = k
            gram[n, n] = 1.0 + GRAM_JITTER
            self._gram, self._gram_inv = gram, inv
        self._elements = np.vstack([self._elements, z])
        self._scaled = np.vstack([self._scaled, zs])

    def consider(self, z: ArrayLike) -> bool:
        """Add z iff its ALD residual exceeds delta_max; the first sample always seeds the dictionary."""
        if len(self) == 0:
            self.add(z)
            return True
        delta, _ = self.ald(z)
        if delta > self.delta_max:
            self.add(z)
            return True
        return False

    def inverse_error(self) -> float:
        """||K K^-1 - I||_inf of the cached inverse."""
        if len(self) == 0:
            return 0.0
        return float(np.max(np.abs(self._gram @ self._gram_inv - np.eye(len(self)))))

    def to_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        """Everything needed for a bit-exact reload, keyed for ``np.savez``."""
        return {
            f"{prefix}version": np.array(FORMAT_VERSION),
            f"{prefix}elements": self._elements,
            f"{prefix}scaled": self._scaled,
            f"{prefix}scale": np.empty(0) if self.scale is None else self.scale,
            f"{prefix}tau": np.array(self.tau),
            f"{prefix}delta_max": np.array(self.delta_max),
            f"{prefix}gram": self._gram,
            f"{prefix}gram_inv": self._gram_inv,
        }

    @classmethod
    def from_arrays(cls, data: Mapping[str, np.ndarray], prefix: str = "") -> Dictionary:
        version = int(data[f"{prefix}version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported dictionary format version {version}, expected {FORMAT_VERSION}")
        elements = np.asarray(data[f"{prefix}elements"])
        scale = np.asarray(data[f"{prefix}scale"])
        out = cls(
            elements.shape[1],
            float(data[f"{prefix}tau"]),
            float(data[f"{prefix}delta_max"]),
            None if scale.size == 0 else scale,
        )
        out._elements = elements
        out._scaled = np.asarray(data[f"{prefix}scaled"])
        out._gram = np.asarray(data[f"{prefix}gram"])
        out._gram_inv = np.asarray(data[f"{prefix}gram_inv"])
        return out

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            np.savez(fh, **self.to_arrays())
        return path

    @classmethod
    def load(cls, path: str | Path) -> Dictionary:
        with np.load(Path(path)) as data:
            return cls.from_arrays(data)


def ald_distance(z_t: ArrayLike, dictionary: Dictionary) -> tuple[float, np.ndarray]:
    """delta_t = k(z,z) - k' K^-1 k with coeffs K^-1 k; 1 for an empty dictionary."""
    return dictionary.ald(z_t)


def sparsify(samples: Iterable[ArrayLike] | np.ndarray, cfg: KernelConfig, *, dim: int | None = None) -> Dictionary:
    """One pass over samples in order, admitting those whose ALD residual exceeds the threshold."""
    data = np.asarray(samples if isinstance(samples, np.ndarray) else list(samples), dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1 if dim is None else dim)
    dictionary = Dictionary.for_config(dim or data.shape[1], cfg)
    for z in data:
        dictionary.consider(z)
    logger.debug("sparsified {} samples into {} dictionary elements", len(data), len(dictionary))
    return dictionary
