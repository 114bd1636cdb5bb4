"""Barrier-shaped stage cost."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike

from gp_skrl.schemas.config import CostConfig

_POS = slice(4, 6)


def barrier(x: ArrayLike) -> np.ndarray | float:
    """exp(-||(e_X, e_Y)||); 1 on the reference, decaying with position error."""
    e = np.asarray(x, dtype=float)
    value = np.exp(-np.linalg.norm(e[..., _POS], axis=-1))
    return float(value) if np.ndim(value) == 0 else value


def smoothed_barrier(x: ArrayLike, eps: float = 1e-6) -> np.ndarray | float:
    """exp(-sqrt(e_X^2 + e_Y^2 + eps^2))."""
    e = np.asarray(x, dtype=float)
    norm = np.sqrt(np.sum(e[..., _POS] ** 2, axis=-1) + eps * eps)
    value = np.exp(-norm)
    return float(value) if np.ndim(value) == 0 else value


def barrier_gradient(x: ArrayLike, eps: float = 1e-6) -> np.ndarray:
    """Gradient of the smoothed barrier as a 6-vector (non-zero only in the position entries)."""
    e = np.asarray(x, dtype=float)
    psi = e[..., _POS]
    norm = np.sqrt(np.sum(psi * psi, axis=-1, keepdims=True) + eps * eps)
    grad = np.zeros_like(e)
    grad[..., _POS] = -np.exp(-norm) * psi / norm
    return grad


def stage_cost(x: ArrayLike, u: ArrayLike, cfg: CostConfig) -> np.ndarray | float:
    """x'Qx + u'Ru + mu * barrier(x)."""
    e = np.asarray(x, dtype=float)
    c = np.asarray(u, dtype=float)
    value = (
        np.sum(np.asarray(cfg.q_diag) * e * e, axis=-1)
        + np.sum(np.asarray(cfg.r_diag) * c * c, axis=-1)
        + cfg.mu * np.asarray(barrier(e))
    )
    return float(value) if np.ndim(value) == 0 else value
