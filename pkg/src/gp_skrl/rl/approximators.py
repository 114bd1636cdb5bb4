"""Kernel actor/critic approximators, their targets, and deployable policies."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from gp_skrl.dynamics.bicycle import clamp_control, clip_error_to_box
from gp_skrl.errors import ShapeMismatchError
from gp_skrl.kernels.dictionary import Dictionary
from gp_skrl.kernels.features import FeatureMap
from gp_skrl.schemas.config import CostConfig, KernelConfig
from gp_skrl.schemas.vehicle import ControlBounds, SamplingBox

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class ActorCriticWeights:
    """W_a (n_F, 2) and W_c (n_F, 6)."""

    W_a: np.ndarray
    W_c: np.ndarray

    def __post_init__(self) -> None:
        n_f = self.W_a.shape[0]
        if self.W_a.shape != (n_f, 2) or self.W_c.shape != (n_f, 6):
            raise ShapeMismatchError(f"weights must be (n_F, 2) and (n_F, 6), got {self.W_a.shape} and {self.W_c.shape}")
        if not (np.all(np.isfinite(self.W_a)) and np.all(np.isfinite(self.W_c))):
            raise ValueError("actor/critic weights must be finite")

    @classmethod
    def zeros(cls, n_features: int) -> ActorCriticWeights:
        return cls(np.zeros((n_features, 2)), np.zeros((n_features, 6)))

    @property
    def n_features(self) -> int:
        return self.W_a.shape[0]

    def deltas(self, other: ActorCriticWeights) -> tuple[float, float]:
        """Squared Frobenius norms of the actor and critic differences."""
        return float(np.sum((self.W_a - other.W_a) ** 2)), float(np.sum((self.W_c - other.W_c) ** 2))


def _features(x: ArrayLike, dictionary: Dictionary, cfg: KernelConfig | Sequence[float], weights: ActorCriticWeights) -> np.ndarray:
    widths = cfg.widths if isinstance(cfg, KernelConfig) else cfg
    phi = FeatureMap(dictionary, widths)(x)
    if phi.shape[1] != weights.n_features:
        raise ShapeMismatchError(f"{phi.shape[1]} features but weights have {weights.n_features} rows")
    return phi


def actor_eval(
    x: ArrayLike, weights: ActorCriticWeights, dictionary: Dictionary, cfg: KernelConfig | Sequence[float]
) -> np.ndarray:
    """u = W_a' K(x); (2,) for one error state, (M, 2) for a batch. Unclamped."""
    out = _features(x, dictionary, cfg, weights) @ weights.W_a
    return out[0] if np.ndim(x) == 1 else out


def critic_eval(
    x: ArrayLike, weights: ActorCriticWeights, dictionary: Dictionary, cfg: KernelConfig | Sequence[float]
) -> np.ndarray:
    """lambda = W_c' K(x); (6,) for one error state, (M, 6) for a batch."""
    out = _features(x, dictionary, cfg, weights) @ weights.W_c
    return out[0] if np.ndim(x) == 1 else out


def target_action(lambda_next: ArrayLike, B_dk: ArrayLike, cfg: CostConfig) -> np.ndarray:
    """-1/2 gamma R^-1 B' lambda_next, batched over leading axes."""
    lam = np.asarray(lambda_next, dtype=float)
    B = np.asarray(B_dk, dtype=float)
    bt_lam = np.einsum("...ij,...i->...j", B, lam)
    return -0.5 * cfg.gamma * bt_lam / np.asarray(cfg.r_diag)


def target_costate(
    x_k: ArrayLike, barrier_grad: ArrayLike, A_dk: ArrayLike, lambda_next: ArrayLike, cfg: CostConfig
) -> np.ndarray:
    """2Qx + mu dB/dx + gamma A' lambda_next, batched over leading axes."""
    x = np.asarray(x_k, dtype=float)
    A = np.asarray(A_dk, dtype=float)
    lam = np.asarray(lambda_next, dtype=float)
    out = 2.0 * np.asarray(cfg.q_diag) * x + cfg.gamma * np.einsum("...ij,...i->...j", A, lam)
    if cfg.mu != 0.0:
        out = out + cfg.mu * np.asarray(barrier_grad, dtype=float)
    return out


class KernelPolicy:
    """A trained actor bound to its dictionary, feature widths, error box and control bounds."""

    def __init__(
        self,
        dictionary: Dictionary,
        widths: Sequence[float],
        weights: ActorCriticWeights,
        *,
        box: SamplingBox | None = None,
        bounds: ControlBounds | None = None,
        provenance: dict[str, Any] | None = None,
    ) -> None:
        self.dictionary = dictionary
        self.widths = [float(w) for w in widths]
        self.weights = weights
        self.box = box or SamplingBox()
        self.bounds = bounds or ControlBounds()
        self.provenance = dict(provenance or {})
        self.features = FeatureMap(dictionary, self.widths)
        if self.features.dim != weights.n_features:
            raise ShapeMismatchError(f"{self.features.dim} features but weights have {weights.n_features} rows")
        self._W_a = weights.W_a

    @property
    def mu(self) -> float:
        return float(self.provenance.get("cost", {}).get("mu", 0.0))

    def action(self, e: ArrayLike, *, clip: bool = True) -> np.ndarray:
        """Clamped control for an error state (or rows of error states)."""
        err = clip_error_to_box(e, self.box) if clip else np.asarray(e, dtype=float)
        u = self.features(err) @ self._W_a
        u = clamp_control(u, self.bounds)
        return u[0] if np.ndim(e) == 1 else u

    def costate(self, e: ArrayLike) -> np.ndarray:
        out = self.features(e) @ self.weights.W_c
        return out[0] if np.ndim(e) == 1 else out

    def save(self, path: str | Path) -> Path:
        """Single npz holding weights, dictionary and JSON provenance."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {
            "widths": self.widths,
            "box": self.box.model_dump(mode="json"),
            "bounds": self.bounds.model_dump(mode="json"),
            "provenance": self.provenance,
        }
        with path.open("wb") as fh:
            np.savez(
                fh,
                version=np.array(FORMAT_VERSION),
                W_a=self.weights.W_a,
                W_c=self.weights.W_c,
                meta=np.array(json.dumps(meta, sort_keys=True)),
                **self.dictionary.to_arrays(prefix="dict_"),
            )
        return path

    @classmethod
    def load(cls, path: str | Path) -> KernelPolicy:
        with np.load(Path(path)) as data:
            if int(data["version"]) != FORMAT_VERSION:
                raise ValueError(f"unsupported policy format version {int(data['version'])}")
            meta = json.loads(str(data["meta"]))
            weights = ActorCriticWeights(data["W_a"], data["W_c"])
            dictionary = Dictionary.from_arrays(data, prefix="dict_")
        return cls(
            dictionary,
            meta["widths"],
            weights,
            box=SamplingBox.model_validate(meta["box"]),
            bounds=ControlBounds.model_validate(meta["bounds"]),
            provenance=meta["provenance"],
        )
