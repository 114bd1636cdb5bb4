"""Paired and batched experiments: model-learning benefit, sparse GP efficiency, multi-seed evaluation."""

from __future__ import annotations

import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from loguru import logger

from gp_skrl.dynamics.bicycle import discrete_step_nominal
from gp_skrl.gp.regression import GPModel, GPTrainingSet, channel_matrix
from gp_skrl.gp.residuals import fit_gp_model, residual_target
from gp_skrl.rl.approximators import KernelPolicy
from gp_skrl.rl.policies import train_control_policy
from gp_skrl.rng import stream
from gp_skrl.schemas.config import GPOptions, RunConfig
from gp_skrl.schemas.results import ArcErrorRow, MetricsReport, ModelLearningReport, SparseGPRow
from gp_skrl.schemas.scenarios import Scenario
from gp_skrl.schemas.vehicle import EXACT_PARAMS, NOMINAL_PARAMS, VehicleParams
from gp_skrl.sim.closed_loop import TrajectoryLog, run_scenario
from gp_skrl.sim.collect import collect
from gp_skrl.sim.metrics import compute_metrics, mean_abs_lateral_error


def arc_errors(without: TrajectoryLog, with_model: TrajectoryLog, bin_length: float) -> list[ArcErrorRow]:
    """Mean |e_lat| of both runs inside consecutive arc-length bins."""
    end = float(max(without.progress.max(), with_model.progress.max()))
    n_bins = max(1, math.ceil(end / bin_length))
    rows = []
    for i in range(n_bins):
        lo, hi = i * bin_length, (i + 1) * bin_length
        means = []
        for log in (without, with_model):
            mask = (log.progress >= lo) & (log.progress < hi)
            means.append(float(np.abs(log.lateral_errors[mask]).mean()) if mask.any() else float("nan"))
        rows.append(ArcErrorRow(start=lo, end=hi, without_model=means[0], with_model=means[1]))
    return rows


def compare_model_learning(
    scenario: Scenario,
    cfg: RunConfig,
    *,
    seeds: Sequence[int] = (0, 1, 2),
    bin_length: float = 50.0,
    max_iters: int | None = None,
) -> ModelLearningReport:
    """Track the same path with the nominal-model policy and with a GP-compensated one, seed by seed.

    Each seed collects its own exploration data and fits its own GP; the nominal policy is shared.
    """
    nominal_pi0 = train_control_policy(cfg, scenario, None, max_iters=max_iters)
    report = ModelLearningReport(seeds=list(seeds), mean_without_model=[], mean_with_model=[])
    for n, seed in enumerate(seeds):
        _, data = collect(scenario, cfg, seed=seed)
        model = fit_gp_model(data, cfg.gp, stream(seed, "gp-inducing"))
        learned_pi0 = train_control_policy(cfg, scenario, model, max_iters=max_iters)
        without = run_scenario(scenario, nominal_pi0, None, cfg.planner, None, seed=seed)
        with_model = run_scenario(scenario, learned_pi0, None, cfg.planner, model, seed=seed)
        report.mean_without_model.append(mean_abs_lateral_error(without))
        report.mean_with_model.append(mean_abs_lateral_error(with_model))
        logger.info(
            "seed {}: mean |e_lat| {:.4f} m without the model, {:.4f} m with it",
            seed,
            report.mean_without_model[-1],
            report.mean_with_model[-1],
        )
        if n == 0:
            report.arcs = arc_errors(without, with_model, bin_length)
    return report


def synthetic_residuals(
    n: int,
    rng: np.random.Generator,
    *,
    exact: VehicleParams = EXACT_PARAMS,
    nominal: VehicleParams = NOMINAL_PARAMS,
    sample_time: float = 0.05,
    noise_std: float = 1e-3,
) -> GPTrainingSet:
    """Random driving states and controls labelled with the (v_y, omega) residual of the nominal Euler step."""
    x = np.zeros((n, 6))
    x[:, 0] = rng.uniform(5.0, 15.0, n)
    x[:, 1] = rng.uniform(-1.0, 1.0, n)
    x[:, 2] = rng.uniform(-math.pi, math.pi, n)
    x[:, 3] = rng.uniform(-1.0, 1.0, n)
    u = np.column_stack([rng.uniform(-1.0, 1.0, n), rng.uniform(-math.pi / 6, math.pi / 6, n)])
    x_next = discrete_step_nominal(x, u, exact, sample_time)
    targets = residual_target(
        x, u, x_next, lambda xx, uu: discrete_step_nominal(xx, uu, nominal, sample_time), channel_matrix("lateral")
    )
    targets = targets + noise_std * rng.standard_normal(targets.shape)
    return GPTrainingSet(np.hstack([x, u]), targets)


def _timed_fit(data: GPTrainingSet, options: GPOptions, rng: np.random.Generator) -> tuple[GPModel, float]:
    start = time.perf_counter()
    model = fit_gp_model(data, options, rng)
    return model, time.perf_counter() - start


def compare_sparse_gp(
    sizes: Sequence[int] = (1000, 3000, 9000),
    *,
    options: GPOptions | None = None,
    fitc_fraction: float = 0.1,
    n_test: int = 1000,
    seed: int = 0,
) -> list[SparseGPRow]:
    """Training time (inducing selection plus fit) and held-out one-step APE of the ALD and FITC variants."""
    base = (options or GPOptions()).model_copy(update={"channel": "lateral", "mode": "fixed"})
    ald_options = base.model_copy(update={"sparse": "ald"})
    fitc_options = base.model_copy(update={"sparse": "random", "inducing_fraction": fitc_fraction})
    test = synthetic_residuals(n_test, stream(seed, "sparse-gp-test"))
    rows = []
    for n in sizes:
        data = synthetic_residuals(n, stream(seed, f"sparse-gp-train-{n}"))
        ald, ald_time = _timed_fit(data, ald_options, stream(seed, "ald"))
        fitc, fitc_time = _timed_fit(data, fitc_options, stream(seed, "fitc"))
        ald_err = np.abs(ald.predict_mean(test.inputs) - test.targets).mean(axis=0)
        fitc_err = np.abs(fitc.predict_mean(test.inputs) - test.targets).mean(axis=0)
        rows.append(
            SparseGPRow(
                n_points=n,
                ald_inducing=len(ald.inducing),
                fitc_inducing=len(fitc.inducing),
                ald_time=ald_time,
                fitc_time=fitc_time,
                ald_ape_vy=float(ald_err[0]),
                fitc_ape_vy=float(fitc_err[0]),
                ald_ape_omega=float(ald_err[1]),
                fitc_ape_omega=float(fitc_err[1]),
            )
        )
        logger.info(
            "n={}: ALD {} inducing in {:.3f}s, FITC {} inducing in {:.3f}s",
            n,
            len(ald.inducing),
            ald_time,
            len(fitc.inducing),
            fitc_time,
        )
    return rows


@dataclass(frozen=True, eq=False)
class EvaluationRun:
    seed: int
    log: TrajectoryLog
    metrics: MetricsReport


def evaluate_batch(
    scenario: Scenario,
    pi0: KernelPolicy | None,
    pi1: KernelPolicy | None,
    cfg: RunConfig,
    model: GPModel | None = None,
    *,
    seeds: Sequence[int] = (0,),
    max_workers: int = 1,
) -> list[EvaluationRun]:
    """One closed-loop run per seed. Every run builds its own planner and obstacles; results keep seed order."""

    def one(seed: int) -> EvaluationRun:
        log = run_scenario(scenario, pi0, pi1, cfg.planner, model, seed=seed)
        return EvaluationRun(seed, log, compute_metrics(log, cfg.metrics))

    if max_workers <= 1 or len(seeds) <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, seeds))
