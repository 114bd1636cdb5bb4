"""Residual targets, learned Jacobians and the GP-compensated one-step model."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from gp_skrl.dynamics.bicycle import STATE_DIM, clamp_speed, discrete_step_nominal, nominal_jacobians
from gp_skrl.errors import RankDeficientError, ShapeMismatchError
from gp_skrl.gp.hyperparams import fit_hyperparams
from gp_skrl.gp.regression import GPModel, GPTrainingSet, channel_matrix
from gp_skrl.kernels.dictionary import sparsify
from gp_skrl.schemas.config import GPOptions, KernelConfig
from gp_skrl.schemas.vehicle import VehicleParams

NominalStep = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _pinv_full_rank(B_d: np.ndarray) -> np.ndarray:
    if np.linalg.matrix_rank(B_d) < B_d.shape[1]:
        raise RankDeficientError(f"B_d {B_d.shape} does not have full column rank")
    return np.linalg.pinv(B_d)


def residual_target(
    x_k: ArrayLike,
    u_k: ArrayLike,
    x_next: ArrayLike,
    nominal_step: NominalStep,
    B_d: np.ndarray | None = None,
) -> np.ndarray:
    """Least-squares projection of x_next - f_nom(x_k, u_k) onto the columns of B_d.

    Broadcasts over leading axes: rows of x_k, u_k and x_next give rows of targets.
    """
    B = np.eye(STATE_DIM) if B_d is None else np.asarray(B_d, dtype=float)
    pinv = _pinv_full_rank(B)
    x = np.asarray(x_k, dtype=float)
    u = np.asarray(u_k, dtype=float)
    residual = np.asarray(x_next, dtype=float) - nominal_step(x, u)
    return residual @ pinv.T


@dataclass(frozen=True, eq=False)
class LearnedJacobians:
    """A_d (..., 6, 6) and B_d_ctl (..., 6, 2) of the linearised training model."""

    A_d: np.ndarray
    B_d_ctl: np.ndarray

    def __post_init__(self) -> None:
        if self.A_d.shape[-2:] != (6, 6) or self.B_d_ctl.shape[-2:] != (6, 2):
            raise ShapeMismatchError(f"expected (...,6,6) and (...,6,2), got {self.A_d.shape} and {self.B_d_ctl.shape}")


def learned_jacobians(
    x_k: ArrayLike, u_k: ArrayLike, A_nom: np.ndarray, B_nom: np.ndarray, model: GPModel | None
) -> LearnedJacobians:
    """Nominal Jacobians plus B_d times the GP mean Jacobian (the nominal ones exactly for an empty model)."""
    A = np.asarray(A_nom, dtype=float)
    B = np.asarray(B_nom, dtype=float)
    if model is None or model.is_empty:
        return LearnedJacobians(A.copy(), B.copy())
    x = np.asarray(x_k, dtype=float).reshape(-1, 6)
    u = np.asarray(u_k, dtype=float).reshape(-1, 2)
    n = max(len(x), len(u))
    z = np.concatenate([np.broadcast_to(x, (n, 6)), np.broadcast_to(u, (n, 2))], axis=1)
    jac = model.mean_jacobian(z, clamp=True)  # (N, n_y, 8)
    inj = np.einsum("ij,njk->nik", model.B_d, jac)
    dA = inj[:, :, :6]
    dB = inj[:, :, 6:]
    if A.ndim == 2:
        return LearnedJacobians(A + dA[0], B + dB[0])
    return LearnedJacobians(A + dA.reshape(A.shape), B + dB.reshape(B.shape))


class LearnedDynamics:
    """f_nom(x, u) + B_d m(z) on the Euler grid; the residual is already a per-step quantity."""

    def __init__(self, params: VehicleParams, sample_time: float, model: GPModel | None = None) -> None:
        self.params = params
        self.sample_time = float(sample_time)
        self.model = model

    @property
    def has_model(self) -> bool:
        return self.model is not None and not self.model.is_empty

    def nominal_step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return discrete_step_nominal(x, u, self.params, self.sample_time)

    def residual(self, x: ArrayLike, u: ArrayLike) -> np.ndarray:
        """B_d m(z) with rows matching the query rows."""
        xx = np.atleast_2d(np.asarray(x, dtype=float))
        uu = np.broadcast_to(np.atleast_2d(np.asarray(u, dtype=float)), (xx.shape[0], 2))
        if not self.has_model:
            return np.zeros_like(xx)
        mean = self.model.predict_mean(np.concatenate([xx, uu], axis=1), clamp=True)
        return mean @ self.model.B_d.T

    def step(self, x: ArrayLike, u: ArrayLike) -> np.ndarray:
        xx = np.asarray(x, dtype=float)
        uu = np.asarray(u, dtype=float)
        nxt = self.nominal_step(xx, uu)
        if self.has_model:
            nxt = nxt + self.residual(xx, uu).reshape(nxt.shape)
            nxt, _ = clamp_speed(nxt)
        return nxt

    predict_next = step

    def jacobians(self, x: ArrayLike, u: ArrayLike) -> LearnedJacobians:
        """Learned (A_d, B_d) per row of x, u."""
        A_nom, B_nom = nominal_jacobians(x, u, self.params, self.sample_time)
        return learned_jacobians(x, u, A_nom, B_nom, self.model)


def inducing_set(training: GPTrainingSet, options: GPOptions, rng: np.random.Generator) -> np.ndarray | None:
    """Inducing inputs (in the selected GP input space) for the configured sparsification."""
    Z = training.inputs[:, options.input_indices]
    if options.sparse == "full":
        return None
    if options.sparse == "random":
        count = max(1, int(round(options.inducing_fraction * len(Z))))
        rows = np.sort(rng.choice(len(Z), size=count, replace=False))
        return Z[rows]
    width = math.sqrt(2.0) * options.lengthscale
    cfg = KernelConfig(widths=[width], dict_width=width, ald_threshold=options.ald_threshold)
    return sparsify(Z, cfg).elements


def fit_gp_model(training: GPTrainingSet, options: GPOptions, rng: np.random.Generator | None = None) -> GPModel:
    """Choose inducing inputs, fit hyperparameters and precompute the posterior of every output."""
    rng = rng if rng is not None else np.random.default_rng(0)
    n_outputs = channel_matrix(options.channel).shape[1]
    inducing = inducing_set(training, options, rng)
    hp = fit_hyperparams(training, options, n_outputs=n_outputs, inducing=inducing)
    model = GPModel(hp, input_indices=options.input_indices, channel=options.channel).fit(training, inducing)
    logger.info(
        "fitted {} GP on {} points ({} inducing)",
        model.kind,
        len(training),
        len(training) if inducing is None else len(inducing),
    )
    return model


def held_out_residual_rms(model: GPModel, held_out: GPTrainingSet) -> float:
    """RMS of target minus posterior mean over a held-out set; the model's estimation error."""
    pred = model.predict_mean(held_out.inputs)
    return float(np.sqrt(np.mean((held_out.targets - pred) ** 2)))
