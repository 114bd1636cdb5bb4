from __future__ import annotations

import numpy as np

from gp_skrl.control.base import ControlDecision, Controller
from gp_skrl.planner.planner import SafetyPlanner


class PolicyController(Controller):
    """Learned-policy control through the safety planner.

    A planner without obstacles never leaves the global path, which gives plain tracking with pi0.
    """

    def __init__(self, planner: SafetyPlanner) -> None:
        self.planner = planner

    def reset(self) -> None:
        self.planner.reset()

    def control(self, state: np.ndarray, time: float) -> ControlDecision:
        decision = self.planner.step(state, time)
        return ControlDecision(
            control=decision.control,
            reference=decision.reference,
            progress=self.planner.progress,
            mode=decision.mode,
            rho=decision.rho,
        )
