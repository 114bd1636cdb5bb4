"""Exploration runs and residual training sets built from logged trajectories."""

from __future__ import annotations

import numpy as np
from loguru import logger

from gp_skrl.control.excitation import ExcitationController
from gp_skrl.dynamics.bicycle import discrete_step_nominal
from gp_skrl.dynamics.reference import build_reference
from gp_skrl.errors import EmptyDataError
from gp_skrl.gp.regression import GPTrainingSet, channel_matrix
from gp_skrl.gp.residuals import residual_target
from gp_skrl.schemas.config import RunConfig
from gp_skrl.schemas.scenarios import Scenario
from gp_skrl.schemas.vehicle import VehicleParams
from gp_skrl.sim.closed_loop import TrajectoryLog, simulate


def collect_gp_data(
    log: TrajectoryLog, nominal_params: VehicleParams, sample_time: float, channel: str = "full"
) -> GPTrainingSet:
    """z_k = [x_k, u_k] and the projected residual of x_{k+1} for every consecutive pair of logged steps."""
    if len(log) < 2:
        raise EmptyDataError(f"log of {log.scenario!r} has {len(log)} step(s); at least 2 are needed for residuals")
    x_k = log.states[:-1]
    u_k = log.controls[:-1]
    x_next = log.states[1:]
    targets = residual_target(
        x_k,
        u_k,
        x_next,
        lambda x, u: discrete_step_nominal(x, u, nominal_params, sample_time),
        channel_matrix(channel),
    )
    return GPTrainingSet(np.hstack([x_k, u_k]), np.atleast_2d(targets))


def exploration_run(scenario: Scenario, cfg: RunConfig, *, seed: int | None = None) -> TrajectoryLog:
    """Scripted multi-sine drive along the global path, ignoring obstacles."""
    path = build_reference(scenario.path, scenario.v_max)
    controller = ExcitationController(
        path, cfg.excitation, bounds=cfg.bounds, search_window=cfg.planner.search_window
    )
    log = simulate(scenario, controller, seed=cfg.seed if seed is None else seed, path=path)
    logger.info("exploration run on {}: {} steps, {}", scenario.name, len(log), log.termination)
    return log


def collect(scenario: Scenario, cfg: RunConfig, *, seed: int | None = None) -> tuple[TrajectoryLog, GPTrainingSet]:
    log = exploration_run(scenario, cfg, seed=seed)
    return log, collect_gp_data(log, scenario.nominal_params, scenario.sample_time, cfg.gp.channel)
