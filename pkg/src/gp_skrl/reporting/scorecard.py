"""Human-readable terminal scorecards."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

from gp_skrl.runner.quality_gates import QualityGateReport
from gp_skrl.schemas.results import AdaptationReport, MetricsReport, ModelLearningReport, SparseGPRow

if TYPE_CHECKING:
    from gp_skrl.sim.experiments import EvaluationRun

_COLUMNS = [
    ("J", "J", "{:>9.3f}"),
    ("J_Lat", "J_Lat", "{:>8.4f}"),
    ("J_Lon", "J_Lon", "{:>8.4f}"),
    ("J_Head", "J_Heading", "{:>8.4f}"),
    ("J_Con", "J_Con", "{:>8.4f}"),
    ("Length", "length", "{:>8.2f}"),
    ("CT", "completion_time", "{:>7.2f}"),
    ("S.T.[ms]", "mean_solve_time", "{:>9.3f}"),
]


def _cells(metrics: MetricsReport) -> str:
    parts = []
    for _, name, fmt in _COLUMNS:
        value = getattr(metrics, name)
        parts.append(fmt.format(value * 1e3 if name == "mean_solve_time" else value))
    return " ".join(parts)


def _header() -> str:
    widths = [len(fmt.format(0.0)) for _, _, fmt in _COLUMNS]
    return " ".join(label.rjust(w) for (label, _, _), w in zip(_COLUMNS, widths))


def print_scorecard(scenario: str, runs: list[EvaluationRun], gate_report: QualityGateReport) -> None:
    """Print a metrics table with one row per run, then the safety gates."""
    print()
    print("=" * 70)
    print("  GP-SKRL CLOSED-LOOP EVALUATION")
    print("=" * 70)
    print()
    print(f"  Scenario: {scenario}  |  Runs: {len(runs)}")
    print()
    print("-" * 70)
    print(f"  {'seed':>4} {_header()}  end")
    for run in runs:
        print(f"  {run.seed:>4} {_cells(run.metrics)}  {run.metrics.termination}")
        if run.metrics.min_clearance is not None:
            marker = "[-]" if run.metrics.collision else "[+]"
            print(f"       {marker} min clearance {run.metrics.min_clearance:.3f} m")
    print()

    print("-" * 70)
    print("  SAFETY GATES")
    print("-" * 70)
    for gr in gate_report.gate_results:
        status = "PASS" if gr.passed else "FAIL"
        marker = "[+]" if gr.passed else "[-]"
        print(f"  {marker} {gr.gate.metric}")
        print(f"      Threshold: {gr.gate.threshold:.2f}  |  Actual: {gr.actual_value:.4f}  |  {status}")

    print()
    print("-" * 70)
    overall = "PASS" if gate_report.all_passed else "FAIL"
    print(f"  OVERALL: {overall}")
    print("=" * 70)
    print()


def print_adaptation(report: AdaptationReport) -> None:
    print()
    print("=" * 70)
    print("  ONLINE ADAPTATION")
    print("=" * 70)
    print(f"  {'stage':>5} {'half':>4} {'from[m]':>8} {'to[m]':>8} {'|e_lat|[m]':>11} {'steps':>6}")
    for row in report.rows:
        err = "n/a" if math.isnan(row.mean_abs_lateral_error) else f"{row.mean_abs_lateral_error:.4f}"
        print(f"  {row.stage:>5} {row.half:>4} {row.start:>8.1f} {row.end:>8.1f} {err:>11} {row.steps:>6}")
    print("-" * 70)
    for pos, dt in zip(report.update_positions, report.update_times):
        print(f"  update at {pos:7.1f} m took {dt:.3f} s")
    if report.failed_updates:
        print(f"  [-] {report.failed_updates} update(s) failed; the previous policy stayed active")
    print("=" * 70)
    print()


def print_model_learning(report: ModelLearningReport) -> None:
    print()
    print("=" * 70)
    print("  MODEL LEARNING: MEAN |e_lat| [m]")
    print("=" * 70)
    print(f"  {'seed':>4} {'nominal':>10} {'learned':>10}")
    for seed, a, b in zip(report.seeds, report.mean_without_model, report.mean_with_model):
        marker = "[+]" if b < a else "[-]"
        print(f"  {seed:>4} {a:>10.4f} {b:>10.4f}  {marker}")
    print("=" * 70)
    print()


def print_sparse_gp(rows: list[SparseGPRow]) -> None:
    print()
    print("=" * 70)
    print("  SPARSE GP: TRAINING TIME AND ONE-STEP APE")
    print("=" * 70)
    print(f"  {'n':>6} {'m_ald':>6} {'m_fitc':>6} {'t_ald[s]':>9} {'t_fitc[s]':>9} {'APE vy':>17} {'APE w':>17}")
    for r in rows:
        print(
            f"  {r.n_points:>6} {r.ald_inducing:>6} {r.fitc_inducing:>6} {r.ald_time:>9.3f} {r.fitc_time:>9.3f}"
            f" {r.ald_ape_vy:>8.2e}/{r.fitc_ape_vy:<8.2e} {r.ald_ape_omega:>8.2e}/{r.fitc_ape_omega:<8.2e}"
        )
    print("=" * 70)
    print()
