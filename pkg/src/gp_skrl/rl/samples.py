"""Error-state sample sets with per-sample linearised dynamics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from loguru import logger

from gp_skrl.dynamics.bicycle import clamp_speed
from gp_skrl.errors import ShapeMismatchError
from gp_skrl.gp.residuals import LearnedDynamics
from gp_skrl.schemas.vehicle import ControlBounds, SamplingBox


@dataclass(frozen=True, eq=False)
class RLSampleSet:
    """M error states X (M, 6) with learned Jacobians A (M, 6, 6) and B (M, 6, 2).

    Sets built on a learned residual keep their linearisation points and model, so the Jacobians can be
    re-evaluated at the controls of the current actor; nominal and LTI sets stay frozen.
    """

    X: np.ndarray
    A: np.ndarray
    B: np.ndarray
    states: np.ndarray | None = None
    dynamics: LearnedDynamics | None = None
    bounds: ControlBounds | None = None

    def __post_init__(self) -> None:
        m = self.X.shape[0]
        if self.X.shape != (m, 6) or self.A.shape != (m, 6, 6) or self.B.shape != (m, 6, 2):
            raise ShapeMismatchError(
                f"sample set shapes disagree: X {self.X.shape}, A {self.A.shape}, B {self.B.shape}"
            )
        if self.states is not None and self.states.shape != (m, 6):
            raise ShapeMismatchError(f"linearisation points must be ({m}, 6), got {self.states.shape}")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def refreshes(self) -> bool:
        """Whether (A, B) depend on the control through the GP residual."""
        return self.states is not None and self.dynamics is not None and self.dynamics.has_model

    def relinearized(self, u: np.ndarray) -> RLSampleSet:
        """Jacobians at the stored linearisation points and the controls u (M, 2), clipped to the bounds."""
        if not self.refreshes:
            return self
        bounds = self.bounds or ControlBounds()
        u = np.clip(np.asarray(u, dtype=float), bounds.lower, bounds.upper)
        jac = self.dynamics.jacobians(self.states, u)
        return RLSampleSet(self.X, jac.A_d, jac.B_d_ctl, self.states, self.dynamics, self.bounds)

    @classmethod
    def lti(cls, X: np.ndarray, A: np.ndarray, B: np.ndarray) -> RLSampleSet:
        """Every sample shares one frozen (A, B)."""
        m = len(X)
        return cls(np.asarray(X, dtype=float), np.broadcast_to(A, (m, 6, 6)), np.broadcast_to(B, (m, 6, 2)))


def sample_error_box(rng: np.random.Generator, box: SamplingBox, n_samples: int) -> np.ndarray:
    """Uniform error states inside the symmetric box."""
    h = np.asarray(box.half_widths)
    return rng.uniform(-h, h, size=(n_samples, 6))


def build_sample_set(
    X: np.ndarray,
    dynamics: LearnedDynamics,
    v_ref: float,
    *,
    linearization: Literal["sample", "reference"] = "sample",
    bounds: ControlBounds | None = None,
) -> RLSampleSet:
    """Linearise the model around the straight reference x_r = (v_ref, 0, 0, 0, 0, 0) at zero control.

    ``sample`` evaluates the Jacobians at x_r + e for each sample and, with a learned residual, lets policy
    iteration refresh them at the actor's controls; ``reference`` uses x_r itself and stays frozen.
    """
    X = np.asarray(X, dtype=float)
    x_r = np.array([v_ref, 0.0, 0.0, 0.0, 0.0, 0.0])
    if linearization == "sample":
        states, clamped = clamp_speed(x_r + X)
        if clamped:
            logger.warning("some linearisation points were below the speed floor and were lifted")
    elif linearization == "reference":
        states = np.broadcast_to(x_r, X.shape)
    else:
        raise ValueError(f"Unknown linearization: {linearization!r}. Available: ['sample', 'reference']")
    jac = dynamics.jacobians(states, np.zeros(2))
    logger.debug("linearised {} samples ({} model)", len(X), "learned" if dynamics.has_model else "nominal")
    if linearization == "reference":
        return RLSampleSet(X, jac.A_d, jac.B_d_ctl)
    return RLSampleSet(X, jac.A_d, jac.B_d_ctl, np.asarray(states), dynamics, bounds)
