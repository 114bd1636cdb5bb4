from gp_skrl.sim.adaptation import OnlineAdapter, half_stage_errors, run_online_adaptation, stage_spans
from gp_skrl.sim.closed_loop import (
    StepRecord,
    TrajectoryLog,
    build_planner,
    initial_state,
    obstacle_margin,
    run_scenario,
    simulate,
    termination_status,
)
from gp_skrl.sim.collect import collect, collect_gp_data, exploration_run
from gp_skrl.sim.experiments import (
    EvaluationRun,
    compare_model_learning,
    compare_sparse_gp,
    evaluate_batch,
    synthetic_residuals,
)
from gp_skrl.sim.metrics import compute_metrics, mean_abs_lateral_error, path_length
from gp_skrl.sim.plant import process_noise, step_true_plant

__all__ = [
    "EvaluationRun",
    "OnlineAdapter",
    "StepRecord",
    "TrajectoryLog",
    "build_planner",
    "collect",
    "collect_gp_data",
    "compare_model_learning",
    "compare_sparse_gp",
    "compute_metrics",
    "evaluate_batch",
    "exploration_run",
    "half_stage_errors",
    "initial_state",
    "mean_abs_lateral_error",
    "obstacle_margin",
    "path_length",
    "process_noise",
    "run_online_adaptation",
    "run_scenario",
    "simulate",
    "stage_spans",
    "step_true_plant",
    "synthetic_residuals",
    "termination_status",
]
