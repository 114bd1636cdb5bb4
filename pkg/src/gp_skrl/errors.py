"""Exception hierarchy shared by every gp_skrl module."""

from __future__ import annotations

from typing import Any


class GPSKRLError(Exception):
    """Base class for all library errors."""


class ConfigError(GPSKRLError, ValueError):
    """Configuration or override could not be parsed or validated."""


class SingularSpeedError(GPSKRLError, ArithmeticError):
    """Longitudinal speed below the floor the bicycle model divides by."""

    def __init__(self, v_x: float, v_min: float) -> None:
        super().__init__(f"v_x={v_x:.6g} is below the speed floor v_min={v_min:.6g}; clamp before evaluating")
        self.v_x = v_x
        self.v_min = v_min


class DegenerateSpecError(GPSKRLError, ValueError):
    """Reference path specification cannot produce a path."""


class DegenerateShapeError(GPSKRLError, ValueError):
    """Obstacle geometry is not a non-degenerate convex shape."""


class EmptyPathError(GPSKRLError, ValueError):
    """A desired path with no points was queried."""


class EmptyDictionaryError(GPSKRLError, ValueError):
    """Features were requested from a dictionary with no elements."""


class ShapeMismatchError(GPSKRLError, ValueError):
    """Array shapes disagree with the bound dictionary or model."""


class RankDeficientError(GPSKRLError, ValueError):
    """Residual-injection matrix does not have full column rank."""


class EmptyDataError(GPSKRLError, ValueError):
    """A stage produced or received no usable samples."""


class IllConditionedError(GPSKRLError, ArithmeticError):
    """Cholesky factorisation failed even after jitter escalation."""


class MissingPolicyError(GPSKRLError, LookupError):
    """The planner needs a policy that was not loaded."""


class MissingArtifactError(GPSKRLError, FileNotFoundError):
    """An upstream artifact is not present in the store."""


class ArtifactConflictError(GPSKRLError):
    """An address already holds an artifact with different content."""


class NoConvergenceError(GPSKRLError, RuntimeError):
    """Policy iteration hit its iteration cap without meeting the thresholds."""

    def __init__(self, message: str, result: Any = None, trace_path: str | None = None) -> None:
        super().__init__(message)
        self.result = result
        self.trace_path = trace_path
