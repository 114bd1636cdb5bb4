"""Scripted multi-sine exploration for data collection."""

from __future__ import annotations

import math

import numpy as np

from gp_skrl.control.base import ControlDecision, Controller
from gp_skrl.dynamics.bicycle import clamp_control, tracking_error
from gp_skrl.dynamics.reference import ReferencePath
from gp_skrl.planner.planner import nearest_reference
from gp_skrl.schemas.config import ExcitationConfig
from gp_skrl.schemas.vehicle import ControlBounds


class ExcitationController(Controller):
    """Sum-of-sines steering and acceleration on top of a weak heading, lateral and speed hold."""

    def __init__(
        self,
        path: ReferencePath,
        cfg: ExcitationConfig | None = None,
        *,
        bounds: ControlBounds | None = None,
        search_window: int | None = 200,
    ) -> None:
        self.path = path
        self.cfg = cfg or ExcitationConfig()
        self.bounds = bounds or ControlBounds()
        self.search_window = search_window
        self._index = 0

    def reset(self) -> None:
        self._index = 0

    def _tones(self, amplitude: float, frequencies: list[float], t: float, phase: float) -> float:
        return amplitude * sum(math.sin(2.0 * math.pi * f * t + phase * (k + 1)) for k, f in enumerate(frequencies))

    def control(self, state: np.ndarray, time: float) -> ControlDecision:
        ref, self._index = nearest_reference(
            state[4:6], self.path, start=self._index, window=self.search_window, monotone=True
        )
        e = tracking_error(state, ref.vector)
        cfg = self.cfg
        steer = -cfg.heading_gain * e[2] - cfg.lateral_gain * e[5]
        steer += self._tones(cfg.steer_amplitude, cfg.steer_frequencies, time, 0.7)
        accel = -cfg.speed_gain * e[0] + self._tones(cfg.accel_amplitude, cfg.accel_frequencies, time, 1.3)
        u = clamp_control(np.array([accel, steer]), self.bounds)
        return ControlDecision(control=u, reference=ref, progress=ref.s)
