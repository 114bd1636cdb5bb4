"""True plant: exact-parameter bicycle model with additive process noise."""

from __future__ import annotations

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from gp_skrl.dynamics.bicycle import clamp_speed, continuous_dynamics
from gp_skrl.schemas.scenarios import Scenario
from gp_skrl.schemas.vehicle import VehicleParams

_RESIDUAL_ROWS = (1, 3)


def process_noise(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """One draw of w_k on all states, or on (v_y, omega) only for the residual channel."""
    var = np.asarray(scenario.noise_variance, dtype=float)
    if scenario.noise_channel == "residual":
        mask = np.zeros(6)
        mask[list(_RESIDUAL_ROWS)] = 1.0
        var = var * mask
    return rng.standard_normal(6) * np.sqrt(var)


def step_true_plant(
    x: ArrayLike,
    u: ArrayLike,
    scenario: Scenario,
    rng: np.random.Generator,
    *,
    params: VehicleParams | None = None,
) -> np.ndarray:
    """Euler step of the exact dynamics plus noise; v_x is lifted to the speed floor if needed."""
    s = np.asarray(x, dtype=float)
    p = params or scenario.exact_params
    nxt = s + scenario.sample_time * continuous_dynamics(s, u, p)
    if any(v > 0 for v in scenario.noise_variance):
        nxt = nxt + process_noise(scenario, rng)
    nxt, clamped = clamp_speed(nxt)
    if clamped:
        logger.warning("plant speed fell below the floor and was clamped")
    return nxt
