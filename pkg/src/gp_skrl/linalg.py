"""Cholesky factorisation with a fixed jitter escalation."""

from __future__ import annotations

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cholesky

from gp_skrl.errors import IllConditionedError

JITTERS = (1e-10, 1e-6)


def jittered_cholesky(matrix: np.ndarray, *, jitters: tuple[float, ...] = JITTERS, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor of ``matrix + jitter*I``, escalating jitter once before failing."""
    n = matrix.shape[0]
    eye = np.eye(n)
    for i, jitter in enumerate(jitters):
        try:
            factor = cholesky(matrix + jitter * eye, lower=True, check_finite=True)
        except (LinAlgError, ValueError):
            continue
        if i > 0:
            logger.warning("{} needed jitter {:.0e} for a stable Cholesky factor", what, jitter)
        return factor
    raise IllConditionedError(f"{what} ({n}x{n}) is not positive definite even with jitter {jitters[-1]:.0e}")
