"""Tracking and efficiency metrics of a logged run."""

from __future__ import annotations

import numpy as np

from gp_skrl.errors import EmptyDataError
from gp_skrl.schemas.config import MetricWeights
from gp_skrl.schemas.results import MetricsReport
from gp_skrl.sim.closed_loop import TrajectoryLog


def path_length(states: np.ndarray) -> float:
    """Sum of distances between consecutive logged positions."""
    if len(states) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(states[:, 4:6], axis=0), axis=1)))


def compute_metrics(log: TrajectoryLog, weights: MetricWeights | None = None) -> MetricsReport:
    """Per-step averages of the squared path-frame errors and the weighted control effort.

    J = Q1 * J_Lon + Q2 * J_Lat + Q3 * J_Heading + J_Con.
    """
    if len(log) == 0:
        raise EmptyDataError(f"log of {log.scenario!r} has no steps")
    w = weights or MetricWeights()
    e = log.errors
    j_lon = float(np.mean(e[:, 4] ** 2))
    j_lat = float(np.mean(e[:, 5] ** 2))
    j_heading = float(np.mean(e[:, 2] ** 2))
    j_con = float(np.mean(log.controls**2 @ np.asarray(w.r_diag)))
    return MetricsReport(
        J=w.q_lon * j_lon + w.q_lat * j_lat + w.q_heading * j_heading + j_con,
        J_Lat=j_lat,
        J_Lon=j_lon,
        J_Heading=j_heading,
        J_Con=j_con,
        length=path_length(log.states),
        completion_time=float(log.time[-1]),
        mean_solve_time=float(np.mean(log.solve_times)),
        collision=log.collided,
        min_clearance=log.min_clearance,
        termination=log.termination,
        steps=len(log),
    )


def mean_abs_lateral_error(log: TrajectoryLog) -> float:
    if len(log) == 0:
        raise EmptyDataError(f"log of {log.scenario!r} has no steps")
    return float(np.mean(np.abs(log.lateral_errors)))
