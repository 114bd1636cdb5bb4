"""Full and FITC sparse GP regression over dynamics residuals."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, Field, PositiveFloat, model_validator
from scipy.linalg import cho_solve, solve_triangular

from gp_skrl.errors import EmptyDataError, ShapeMismatchError
from gp_skrl.kernels.gaussian import gaussian_gram
from gp_skrl.linalg import jittered_cholesky

FORMAT_VERSION = 1
Z_DIM = 8  # [x (6), u (2)]


class GPHyperparams(BaseModel):
    """Per-output-dimension squared-exponential hyperparameters."""

    signal_variance: list[PositiveFloat] = Field(description="sigma_f^2 per output dimension")
    lengthscale: list[PositiveFloat] = Field(description="Isotropic lengthscale per output dimension")
    noise_variance: list[PositiveFloat] = Field(description="Observation noise variance per output dimension")

    @model_validator(mode="after")
    def _same_length(self) -> GPHyperparams:
        n = len(self.signal_variance)
        if n == 0 or len(self.lengthscale) != n or len(self.noise_variance) != n:
            raise ValueError("hyperparameter lists must be non-empty and of equal length")
        return self

    @classmethod
    def uniform(cls, n_outputs: int, signal_std: float, lengthscale: float, noise_variance: float) -> GPHyperparams:
        return cls(
            signal_variance=[signal_std**2] * n_outputs,
            lengthscale=[lengthscale] * n_outputs,
            noise_variance=[noise_variance] * n_outputs,
        )

    @property
    def n_outputs(self) -> int:
        return len(self.signal_variance)

    def dim(self, a: int) -> tuple[float, float, float]:
        return self.signal_variance[a], self.lengthscale[a], self.noise_variance[a]


@dataclass(frozen=True, eq=False)
class GPTrainingSet:
    """Inputs z = [x, u] (n, 8) and residual targets (n, n_y)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.inputs.shape[1] != Z_DIM:
            raise ShapeMismatchError(f"GP inputs must be (n, {Z_DIM}), got {self.inputs.shape}")
        if self.targets.ndim != 2 or self.targets.shape[0] != self.inputs.shape[0]:
            raise ShapeMismatchError(
                f"targets must be (n, n_y) with n={self.inputs.shape[0]}, got {self.targets.shape}"
            )
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise ValueError("GP training rows must be finite")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, rows: ArrayLike) -> GPTrainingSet:
        idx = np.asarray(rows)
        return GPTrainingSet(self.inputs[idx], self.targets[idx])

    @classmethod
    def concatenate(cls, parts: list[GPTrainingSet]) -> GPTrainingSet:
        if not parts:
            raise EmptyDataError("no GP training sets to concatenate")
        return cls(np.vstack([p.inputs for p in parts]), np.vstack([p.targets for p in parts]))


def se_kernel(A: np.ndarray, B: np.ndarray, signal_variance: float, lengthscale: float) -> np.ndarray:
    """sigma_f^2 exp(-||a - b||^2 / (2 l^2))."""
    return signal_variance * gaussian_gram(A, B, math.sqrt(2.0) * lengthscale)


@dataclass(frozen=True, eq=False)
class _OutputCache:
    """Everything one output dimension needs at prediction time."""

    centers: np.ndarray
    weights: np.ndarray
    chol: np.ndarray
    chol_m: np.ndarray | None = None

    def variance(self, k_star: np.ndarray, signal_variance: float) -> np.ndarray:
        a = solve_triangular(self.chol, k_star, lower=True)
        var = signal_variance - np.sum(a * a, axis=0)
        if self.chol_m is not None:
            b = solve_triangular(self.chol_m, a, lower=True)
            var = var + np.sum(b * b, axis=0)
        return np.maximum(var, 0.0)


def _fit_full(Z: np.ndarray, y: np.ndarray, hp: tuple[float, float, float]) -> _OutputCache:
    sf2, ell, sn2 = hp
    K = se_kernel(Z, Z, sf2, ell) + sn2 * np.eye(len(Z))
    L = jittered_cholesky(K, what="GP covariance")
    alpha = cho_solve((L, True), y)
    return _OutputCache(centers=Z, weights=alpha, chol=L)


def fitc_factors(
    Z: np.ndarray, U: np.ndarray, hp: tuple[float, float, float]
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """L_u, V = L_u^-1 K_uz, diagonal Lambda and L_M = chol(I + V Lambda^-1 V')."""
    sf2, ell, sn2 = hp
    Lu = jittered_cholesky(se_kernel(U, U, sf2, ell), what="inducing covariance")
    V = solve_triangular(Lu, se_kernel(U, Z, sf2, ell), lower=True)
    lam = np.maximum(sf2 - np.sum(V * V, axis=0), 0.0) + sn2
    Vs = V / np.sqrt(lam)
    LM = jittered_cholesky(np.eye(len(U)) + Vs @ Vs.T, what="FITC inner matrix")
    return Lu, V, lam, LM


def _fit_fitc(Z: np.ndarray, U: np.ndarray, y: np.ndarray, hp: tuple[float, float, float]) -> _OutputCache:
    Lu, V, lam, LM = fitc_factors(Z, U, hp)
    t = cho_solve((LM, True), V @ (y / lam))
    w = solve_triangular(Lu.T, t, lower=False)
    return _OutputCache(centers=U, weights=w, chol=Lu, chol_m=LM)


def channel_matrix(channel: str) -> np.ndarray:
    """Residual injection B_d: identity on all six states or the (v_y, omega) selector."""
    if channel == "full":
        return np.eye(6)
    if channel == "lateral":
        B = np.zeros((6, 2))
        B[1, 0] = 1.0
        B[3, 1] = 1.0
        return B
    raise ValueError(f"Unknown residual channel: {channel!r}. Available: ['full', 'lateral']")


class GPModel:
    """Independent GPs per residual dimension over selected entries of z = [x, u]."""

    def __init__(
        self,
        hyperparams: GPHyperparams,
        *,
        input_indices: ArrayLike = (0, 1, 3, 6, 7),
        channel: str = "full",
    ) -> None:
        self.hyperparams = hyperparams
        self.input_indices = np.asarray(input_indices, dtype=int)
        self.channel = channel
        self.B_d = channel_matrix(channel)
        if hyperparams.n_outputs != self.B_d.shape[1]:
            raise ShapeMismatchError(
                f"{hyperparams.n_outputs} hyperparameter sets for a {self.B_d.shape[1]}-column residual channel"
            )
        self.training: GPTrainingSet | None = None
        self.inducing: np.ndarray | None = None
        self._caches: list[_OutputCache] = []
        self._lower: np.ndarray | None = None
        self._upper: np.ndarray | None = None

    @property
    def n_outputs(self) -> int:
        return self.B_d.shape[1]

    @property
    def is_empty(self) -> bool:
        return not self._caches

    @property
    def kind(self) -> str:
        if self.is_empty:
            return "empty"
        return "full" if self.inducing is None else "fitc"

    def select(self, z: ArrayLike) -> np.ndarray:
        zz = np.atleast_2d(np.asarray(z, dtype=float))
        if zz.shape[1] != Z_DIM:
            raise ShapeMismatchError(f"queries must be [x, u] rows of length {Z_DIM}, got {zz.shape[1]}")
        return zz[:, self.input_indices]

    def fit(self, training: GPTrainingSet, inducing: np.ndarray | None = None) -> GPModel:
        """Precompute every query-independent matrix; inducing rows are in the selected input space."""
        if len(training) == 0:
            raise EmptyDataError("cannot fit a GP to an empty training set")
        if training.targets.shape[1] != self.n_outputs:
            raise ShapeMismatchError(f"expected {self.n_outputs} target columns, got {training.targets.shape[1]}")
        Z = training.inputs[:, self.input_indices]
        if inducing is not None and (inducing.ndim != 2 or inducing.shape[1] != Z.shape[1] or len(inducing) == 0):
            raise ShapeMismatchError(f"inducing set must be non-empty (m, {Z.shape[1]}), got {inducing.shape}")
        caches = []
        for a in range(self.n_outputs):
            y = training.targets[:, a]
            hp = self.hyperparams.dim(a)
            caches.append(_fit_full(Z, y, hp) if inducing is None else _fit_fitc(Z, inducing, y, hp))
        self.training = training
        self.inducing = inducing
        self._caches = caches
        self._lower = Z.min(axis=0)
        self._upper = Z.max(axis=0)
        return self

    def clamp(self, zsel: np.ndarray) -> np.ndarray:
        """Project selected inputs onto the bounding box of the training inputs."""
        if self._lower is None:
            return zsel
        return np.clip(zsel, self._lower, self._upper)

    def predict(self, z: ArrayLike, *, clamp: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance, each (N, n_y); cross-output covariances are never formed."""
        zs = self.select(z)
        if clamp:
            zs = self.clamp(zs)
        n = zs.shape[0]
        mean = np.zeros((n, self.n_outputs))
        var = np.tile(np.asarray(self.hyperparams.signal_variance), (n, 1))
        for a, cache in enumerate(self._caches):
            sf2, ell, _ = self.hyperparams.dim(a)
            k_star = se_kernel(cache.centers, zs, sf2, ell)
            mean[:, a] = cache.weights @ k_star
            var[:, a] = cache.variance(k_star, sf2)
        return mean, var

    def predict_mean(self, z: ArrayLike, *, clamp: bool = False) -> np.ndarray:
        zs = self.select(z)
        if clamp:
            zs = self.clamp(zs)
        mean = np.zeros((zs.shape[0], self.n_outputs))
        for a, cache in enumerate(self._caches):
            sf2, ell, _ = self.hyperparams.dim(a)
            mean[:, a] = se_kernel(zs, cache.centers, sf2, ell) @ cache.weights
        return mean

    def mean_jacobian(self, z: ArrayLike, *, clamp: bool = False) -> np.ndarray:
        """d mean / d z for full z = [x, u]: (N, n_y, 8); zero outside the selected inputs.

        With ``clamp`` this is the derivative of the clamped predictor: coordinates held at a face of the
        training box get a zero column.
        """
        zs = self.select(z)
        held = np.zeros(zs.shape, dtype=bool)
        if clamp:
            clamped = self.clamp(zs)
            held = clamped != zs
            zs = clamped
        n = zs.shape[0]
        jac = np.zeros((n, self.n_outputs, Z_DIM))
        for a, cache in enumerate(self._caches):
            sf2, ell, _ = self.hyperparams.dim(a)
            kw = se_kernel(zs, cache.centers, sf2, ell) * cache.weights
            grad = (kw @ cache.centers - kw.sum(axis=1)[:, None] * zs) / (ell * ell)
            grad[held] = 0.0
            jac[:, a, self.input_indices] = grad
        return jac

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays: dict[str, np.ndarray] = {
            "version": np.array(FORMAT_VERSION),
            "input_indices": self.input_indices,
            "meta": np.array(json.dumps({"channel": self.channel, "hyperparams": self.hyperparams.model_dump()})),
        }
        if self.training is not None:
            arrays["train_inputs"] = self.training.inputs
            arrays["train_targets"] = self.training.targets
            arrays["lower"] = self._lower
            arrays["upper"] = self._upper
        if self.inducing is not None:
            arrays["inducing"] = self.inducing
        for a, cache in enumerate(self._caches):
            arrays[f"centers_{a}"] = cache.centers
            arrays[f"weights_{a}"] = cache.weights
            arrays[f"chol_{a}"] = cache.chol
            if cache.chol_m is not None:
                arrays[f"chol_m_{a}"] = cache.chol_m
        with path.open("wb") as fh:
            np.savez(fh, **arrays)
        return path

    @classmethod
    def load(cls, path: str | Path) -> GPModel:
        with np.load(Path(path)) as data:
            if int(data["version"]) != FORMAT_VERSION:
                raise ValueError(f"unsupported GP model format version {int(data['version'])}")
            meta = json.loads(str(data["meta"]))
            model = cls(
                GPHyperparams.model_validate(meta["hyperparams"]),
                input_indices=data["input_indices"],
                channel=meta["channel"],
            )
            if "train_inputs" in data.files:
                model.training = GPTrainingSet(data["train_inputs"], data["train_targets"])
                model._lower = data["lower"]
                model._upper = data["upper"]
            model.inducing = data["inducing"] if "inducing" in data.files else None
            caches = []
            for a in range(model.n_outputs):
                if f"centers_{a}" not in data.files:
                    break
                caches.append(
                    _OutputCache(
                        centers=data[f"centers_{a}"],
                        weights=data[f"weights_{a}"],
                        chol=data[f"chol_{a}"],
                        chol_m=data[f"chol_m_{a}"] if f"chol_m_{a}" in data.files else None,
                    )
                )
            model._caches = caches
        return model


def full_gp_posterior(z_star: ArrayLike, model: GPModel) -> tuple[np.ndarray, np.ndarray]:
    """Exact GP posterior mean and variance at one query z = [x, u]."""
    if model.kind != "full":
        raise ValueError(f"full_gp_posterior needs a model fitted without inducing points, got {model.kind!r}")
    mean, var = model.predict(z_star)
    return mean[0], var[0]


def fitc_posterior(z_star: ArrayLike, model: GPModel) -> tuple[np.ndarray, np.ndarray]:
    """FITC posterior mean and variance at one query z = [x, u]."""
    if model.kind != "fitc":
        raise ValueError(f"fitc_posterior needs a model fitted with an inducing set, got {model.kind!r}")
    mean, var = model.predict(z_star)
    return mean[0], var[0]


def gp_mean_jacobian(z_star: ArrayLike, model: GPModel) -> tuple[np.ndarray, np.ndarray]:
    """(d mean / d x (n_y, 6), d mean / d u (n_y, 2)) at one query z = [x, u]."""
    jac = model.mean_jacobian(z_star)[0]
    return jac[:, :6], jac[:, 6:]
