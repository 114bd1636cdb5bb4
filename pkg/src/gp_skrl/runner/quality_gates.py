"""Safety gate enforcement for closed-loop metric reports."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

from gp_skrl.schemas.results import MetricsReport


@dataclass
class QualityGate:
    """A single gate: an aggregate over runs that must reach a threshold."""

    metric: str
    threshold: float
    description: str = ""


@dataclass
class QualityGateResult:
    """Result of evaluating a single quality gate."""

    gate: QualityGate
    actual_value: float
    passed: bool


@dataclass
class QualityGateReport:
    """Overall quality gate evaluation report."""

    gate_results: list[QualityGateResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(gr.passed for gr in self.gate_results)

    def failed(self) -> list[QualityGateResult]:
        return [gr for gr in self.gate_results if not gr.passed]


DEFAULT_GATES = [
    QualityGate(
        metric="collision_free_rate",
        threshold=1.0,
        description="No run may overlap an obstacle",
    ),
    QualityGate(
        metric="min_clearance",
        threshold=0.0,
        description="Smallest footprint-obstacle distance over all runs >= 0 m",
    ),
    QualityGate(
        metric="goal_rate",
        threshold=1.0,
        description="Every run must end inside the goal ball",
    ),
]


def _collision_free_rate(reports: list[MetricsReport]) -> float:
    return sum(1 for r in reports if not r.collision) / len(reports)


def _min_clearance(reports: list[MetricsReport]) -> float:
    values = [r.min_clearance for r in reports if r.min_clearance is not None]
    return min(values) if values else float("inf")


def _goal_rate(reports: list[MetricsReport]) -> float:
    return sum(1 for r in reports if r.termination == "goal") / len(reports)


_AGGREGATES: dict[str, Callable[[list[MetricsReport]], float]] = {
    "collision_free_rate": _collision_free_rate,
    "min_clearance": _min_clearance,
    "goal_rate": _goal_rate,
}


class QualityGateEvaluator:
    """Evaluates metric reports against safety gates."""

    def __init__(self, gates: list[QualityGate] | None = None) -> None:
        self._gates = gates if gates is not None else list(DEFAULT_GATES)
        unknown = [g.metric for g in self._gates if g.metric not in _AGGREGATES]
        if unknown:
            raise ValueError(f"Unknown gate metric(s): {unknown}. Available: {sorted(_AGGREGATES)}")

    def evaluate(self, reports: list[MetricsReport]) -> QualityGateReport:
        """Evaluate every gate over all reports; an empty list passes vacuously."""
        gate_results = []
        for gate in self._gates:
            actual = _AGGREGATES[gate.metric](reports) if reports else 1.0
            gate_results.append(QualityGateResult(gate=gate, actual_value=actual, passed=actual >= gate.threshold))
        return QualityGateReport(gate_results=gate_results)
