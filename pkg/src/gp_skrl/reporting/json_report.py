"""Machine-readable JSON report generation."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import TYPE_CHECKING

from gp_skrl.runner.quality_gates import QualityGateReport
from gp_skrl.schemas.results import MetricsReport

if TYPE_CHECKING:
    from gp_skrl.sim.experiments import EvaluationRun

SUMMARY_FIELDS = ["J", "J_Lat", "J_Lon", "J_Heading", "J_Con", "length", "completion_time", "mean_solve_time"]


def _finite(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return round(value, 6)


def aggregate_metrics(reports: list[MetricsReport]) -> dict[str, float | None]:
    """Mean of every numeric metric over the runs."""
    if not reports:
        return {name: None for name in SUMMARY_FIELDS}
    return {name: _finite(sum(getattr(r, name) for r in reports) / len(reports)) for name in SUMMARY_FIELDS}


def generate_json_report(
    scenario: str,
    runs: list[EvaluationRun],
    gate_report: QualityGateReport,
    output_path: str | Path = "output/eval_report.json",
) -> Path:
    """Generate a JSON evaluation report."""
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    reports = [r.metrics for r in runs]

    report = {
        "summary": {
            "scenario": scenario,
            "total_runs": len(runs),
            "goal_reached": sum(1 for m in reports if m.termination == "goal"),
            "collisions": sum(1 for m in reports if m.collision),
            "quality_gates_passed": gate_report.all_passed,
            "mean": aggregate_metrics(reports),
        },
        "quality_gates": [
            {
                "metric": gr.gate.metric,
                "threshold": gr.gate.threshold,
                "actual": _finite(gr.actual_value),
                "passed": gr.passed,
                "description": gr.gate.description,
            }
            for gr in gate_report.gate_results
        ],
        "runs": [
            {
                "seed": run.seed,
                "termination": run.metrics.termination,
                "steps": run.metrics.steps,
                "collision": run.metrics.collision,
                "min_clearance": _finite(run.metrics.min_clearance),
                "metrics": {name: _finite(getattr(run.metrics, name)) for name in SUMMARY_FIELDS},
            }
            for run in runs
        ],
    }

    path.write_text(json.dumps(report, indent=2))
    return path
