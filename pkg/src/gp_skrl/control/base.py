from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from gp_skrl.dynamics.reference import ReferenceState


@dataclass
class ControlDecision:
    """What a controller chose at one step and which reference it tracked."""

    control: np.ndarray
    reference: ReferenceState
    progress: float
    mode: str = "global"
    rho: int = 0


class Controller(ABC):
    """Abstract base class for closed-loop controllers (scripted or learned)."""

    @abstractmethod
    def control(self, state: np.ndarray, time: float) -> ControlDecision:
        """Return the control to apply at ``time`` for the measured ``state``."""
        ...

    def reset(self) -> None:
        """Forget per-run state before a new simulation."""
