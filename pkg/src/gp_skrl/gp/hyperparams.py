"""Marginal likelihood and hyperparameter fitting."""

from __future__ import annotations

import math

import numpy as np
from loguru import logger
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize_scalar

from gp_skrl.errors import EmptyDataError, GPSKRLError
from gp_skrl.gp.regression import GPHyperparams, GPTrainingSet, fitc_factors, se_kernel
from gp_skrl.linalg import jittered_cholesky
from gp_skrl.schemas.config import GPOptions

_LOG_2PI = math.log(2.0 * math.pi)
_SEARCH_HALF_WIDTH = 3.0


def marginal_log_likelihood(
    Z: np.ndarray, y: np.ndarray, hp: tuple[float, float, float], inducing: np.ndarray | None = None
) -> float:
    """log p(y | Z, hp) for one output; FITC approximation when an inducing set is given."""
    n = len(y)
    if inducing is None:
        sf2, ell, sn2 = hp
        L = jittered_cholesky(se_kernel(Z, Z, sf2, ell) + sn2 * np.eye(n), what="GP covariance")
        alpha = cho_solve((L, True), y)
        return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * _LOG_2PI)
    _, V, lam, LM = fitc_factors(Z, inducing, hp)
    r = solve_triangular(LM, V @ (y / lam), lower=True)
    quad = float(y @ (y / lam) - r @ r)
    logdet = float(np.sum(np.log(lam)) + 2.0 * np.sum(np.log(np.diag(LM))))
    return -0.5 * quad - 0.5 * logdet - 0.5 * n * _LOG_2PI


def _optimize_output(
    Z: np.ndarray, y: np.ndarray, start: tuple[float, float, float], sweeps: int, inducing: np.ndarray | None
) -> tuple[tuple[float, float, float], float, float]:
    """Coordinate-wise bounded search over log(hp); a coordinate only moves when the likelihood improves."""
    theta = np.log(np.asarray(start, dtype=float))

    def mll(t: np.ndarray) -> float:
        try:
            return marginal_log_likelihood(Z, y, tuple(np.exp(t)), inducing)
        except (GPSKRLError, FloatingPointError):
            return -np.inf

    initial = best = mll(theta)
    for _ in range(sweeps):
        before = best
        for i in range(len(theta)):
            centre = theta[i]

            def objective(v: float, i: int = i) -> float:
                trial = theta.copy()
                trial[i] = v
                value = mll(trial)
                return -value if np.isfinite(value) else 1e300

            res = minimize_scalar(
                objective,
                bounds=(centre - _SEARCH_HALF_WIDTH, centre + _SEARCH_HALF_WIDTH),
                method="bounded",
                options={"xatol": 1e-4},
            )
            if np.isfinite(res.fun) and -res.fun > best:
                theta[i] = res.x
                best = -res.fun
        if best <= before:
            break
    return tuple(float(v) for v in np.exp(theta)), initial, best


def fit_hyperparams(
    training: GPTrainingSet,
    options: GPOptions,
    *,
    n_outputs: int | None = None,
    inducing: np.ndarray | None = None,
) -> GPHyperparams:
    """Configured values in fixed mode; per-output likelihood search in optimize mode."""
    n_y = n_outputs or training.targets.shape[1]
    initial = GPHyperparams.uniform(n_y, options.signal_std, options.lengthscale, options.noise_variance)
    if options.mode == "fixed":
        return initial
    if len(training) < 2:
        raise EmptyDataError(f"optimize mode needs at least 2 training points, got {len(training)}")

    Z = training.inputs[:, options.input_indices]
    sf2, ell, sn2 = [], [], []
    for a in range(n_y):
        hp, start_mll, end_mll = _optimize_output(
            Z, training.targets[:, a], initial.dim(a), options.max_sweeps, inducing
        )
        if end_mll <= start_mll:
            logger.warning("hyperparameter search for output {} did not improve the likelihood ({:.4g})", a, start_mll)
        else:
            logger.debug("output {}: log-likelihood {:.4g} -> {:.4g}, hp={}", a, start_mll, end_mll, hp)
        sf2.append(hp[0])
        ell.append(hp[1])
        sn2.append(hp[2])
    return GPHyperparams(signal_variance=sf2, lengthscale=ell, noise_variance=sn2)
