"""Online adaptation: refit the residual GP and the control policy while driving a staged plant."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from gp_skrl.control.policy import PolicyController
from gp_skrl.dynamics.bicycle import discrete_step_nominal
from gp_skrl.dynamics.reference import build_reference
from gp_skrl.errors import GPSKRLError
from gp_skrl.gp.regression import GPModel, GPTrainingSet, channel_matrix
from gp_skrl.gp.residuals import LearnedDynamics, fit_gp_model, inducing_set, residual_target
from gp_skrl.planner.planner import SafetyPlanner
from gp_skrl.rl.approximators import KernelPolicy
from gp_skrl.rl.policies import sample_states
from gp_skrl.rl.samples import build_sample_set
from gp_skrl.rl.trainer import policy_iteration
from gp_skrl.rng import stream
from gp_skrl.schemas.config import RunConfig
from gp_skrl.schemas.results import AdaptationReport, StageErrorRow
from gp_skrl.schemas.scenarios import AdaptationSchedule, Scenario
from gp_skrl.sim.closed_loop import StepRecord, TrajectoryLog, build_planner, simulate


def stage_spans(schedule: AdaptationSchedule, total_length: float) -> list[tuple[float, float, float]]:
    """(start, trigger, end) of every stage; a stage without a trigger splits at its midpoint."""
    ends = [*schedule.boundaries[1:], total_length]
    spans = []
    for start, end in zip(schedule.boundaries, ends):
        inside = [t for t in schedule.triggers if start <= t < end]
        spans.append((start, inside[0] if inside else 0.5 * (start + end), end))
    return spans


def half_stage_errors(log: TrajectoryLog, spans: list[tuple[float, float, float]]) -> list[StageErrorRow]:
    rows = []
    lateral = np.abs(log.lateral_errors)
    for stage, (start, trigger, end) in enumerate(spans):
        for half, (lo, hi) in enumerate(((start, trigger), (trigger, end))):
            mask = (log.progress >= lo) & (log.progress < hi)
            if stage == len(spans) - 1 and half == 1:
                mask |= log.progress >= hi
            steps = int(np.count_nonzero(mask))
            rows.append(
                StageErrorRow(
                    stage=stage,
                    half=half,
                    start=lo,
                    end=hi,
                    mean_abs_lateral_error=float(lateral[mask].mean()) if steps else float("nan"),
                    steps=steps,
                )
            )
    return rows


@dataclass
class _Buffer:
    x: list[np.ndarray] = field(default_factory=list)
    u: list[np.ndarray] = field(default_factory=list)
    x_next: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.x)

    def clear(self) -> None:
        self.x.clear()
        self.u.clear()
        self.x_next.clear()

    def add(self, record: StepRecord) -> None:
        self.x.append(record.state.copy())
        self.u.append(record.control.copy())
        self.x_next.append(record.next_state.copy())


class OnlineAdapter:
    """Step hook that buffers plant transitions per stage and updates pi0 at each trigger position."""

    def __init__(
        self,
        scenario: Scenario,
        pi0: KernelPolicy,
        states: np.ndarray,
        model: GPModel | None,
        cfg: RunConfig,
        controller: PolicyController,
        *,
        seed: int = 0,
    ) -> None:
        if scenario.adaptation is None:
            raise ValueError(f"scenario {scenario.name!r} has no adaptation schedule")
        self.scenario = scenario
        self.schedule = scenario.adaptation
        self.initial_pi0 = pi0
        self.states = np.asarray(states, dtype=float)
        self.initial_model = model
        self.cfg = cfg
        self.controller = controller
        self.seed = seed
        self.buffer = _Buffer()
        self.stage = 0
        self.pending = sorted(self.schedule.triggers)
        self.report = AdaptationReport()

    @property
    def planner(self) -> SafetyPlanner:
        return self.controller.planner

    def __call__(self, record: StepRecord) -> None:
        stage = self.schedule.stage_of(record.progress)
        if stage != self.stage:
            self._enter_stage(stage, record.progress)
        self.buffer.add(record)
        while self.pending and record.progress >= self.pending[0]:
            trigger = self.pending.pop(0)
            self._update(trigger, record.progress)

    def _enter_stage(self, stage: int, position: float) -> None:
        logger.info("entering adaptation stage {} at s={:.1f} m", stage, position)
        self.stage = stage
        if self.cfg.adaptation.reset_each_stage:
            self.buffer.clear()
            self.planner.pi0 = self.initial_pi0
            self.planner.dynamics = LearnedDynamics(
                self.scenario.nominal_params, self.scenario.sample_time, self.initial_model
            )

    def _buffered_data(self) -> GPTrainingSet:
        x = np.asarray(self.buffer.x)
        u = np.asarray(self.buffer.u)
        nominal = self.scenario.nominal_params
        ts = self.scenario.sample_time
        targets = residual_target(
            x,
            u,
            np.asarray(self.buffer.x_next),
            lambda xx, uu: discrete_step_nominal(xx, uu, nominal, ts),
            channel_matrix(self.cfg.gp.channel),
        )
        return GPTrainingSet(np.hstack([x, u]), targets)

    def _refit_model(self, data: GPTrainingSet) -> GPModel:
        options = self.cfg.gp
        rng = stream(self.seed, f"adapt-gp-{len(self.report.update_times)}")
        if self.initial_model is None or options.refit_hyperparams_online:
            return fit_gp_model(data, options, rng)
        # keep the hyperparameters, recompute the posterior weights only
        inducing = inducing_set(data, options, rng)
        return GPModel(
            self.initial_model.hyperparams,
            input_indices=self.initial_model.input_indices,
            channel=self.initial_model.channel,
        ).fit(data, inducing)

    def _update(self, trigger: float, position: float) -> None:
        start = time.perf_counter()
        try:
            if len(self.buffer) < 2:
                raise GPSKRLError(f"only {len(self.buffer)} buffered transitions at the trigger")
            data = self._buffered_data()
            model = self._refit_model(data)
            dynamics = LearnedDynamics(self.scenario.nominal_params, self.scenario.sample_time, model)
            samples = build_sample_set(
                self.states,
                dynamics,
                self.scenario.v_max,
                linearization=self.cfg.training.linearization,
                bounds=self.cfg.bounds,
            )
            control_cost = self.cfg.cost.model_copy(update={"mu": 0.0})
            current: KernelPolicy = self.planner.pi0
            result = policy_iteration(
                samples,
                current.features,
                control_cost,
                self.cfg.training,
                initial=current.weights,
                max_iters=self.cfg.adaptation.max_iters,
                label=f"adaptive update at {trigger:g} m",
            )
        except (GPSKRLError, ArithmeticError, ValueError) as exc:
            self.report.failed_updates += 1
            logger.warning("policy update at s={:.1f} m failed ({}); keeping the previous policy", position, exc)
            return
        self.planner.pi0 = KernelPolicy(
            current.dictionary,
            current.widths,
            result.weights,
            box=current.box,
            bounds=current.bounds,
            provenance={**current.provenance, "label": "pi0-adapted", "trigger": trigger},
        )
        self.planner.dynamics = dynamics
        elapsed = time.perf_counter() - start
        self.report.update_times.append(elapsed)
        self.report.update_positions.append(position)
        logger.info(
            "policy updated at s={:.1f} m from {} transitions in {:.2f}s ({} iterations)",
            position,
            len(data),
            elapsed,
            result.iterations,
        )


def run_online_adaptation(
    scenario: Scenario,
    pi0: KernelPolicy,
    model: GPModel | None,
    cfg: RunConfig,
    *,
    seed: int = 0,
    states: np.ndarray | None = None,
) -> tuple[TrajectoryLog, AdaptationReport]:
    """Drive the staged plant with pi0, updating it from each stage's own data at the trigger positions.

    ``states`` are the error states the updates re-linearise at; by default the training samples of ``cfg``.
    """
    if scenario.adaptation is None:
        raise ValueError(f"scenario {scenario.name!r} has no adaptation schedule")
    path = build_reference(scenario.path, scenario.v_max)
    planner = build_planner(scenario, pi0, None, cfg.planner, model, path=path, use_obstacles=False)
    controller = PolicyController(planner)
    X = sample_states(cfg) if states is None else states
    adapter = OnlineAdapter(scenario, pi0, X, model, cfg, controller, seed=seed)
    log = simulate(scenario, controller, seed=seed, footprint_width=cfg.planner.footprint_width, path=path, hook=adapter)
    report = adapter.report
    report.rows = half_stage_errors(log, stage_spans(scenario.adaptation, path.total_length))
    for row in report.rows:
        logger.info(
            "stage {} half {}: mean |e_lat| = {:.4f} m over {} steps",
            row.stage,
            row.half,
            row.mean_abs_lateral_error,
            row.steps,
        )
    return log, report
