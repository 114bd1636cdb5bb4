"""Closed-loop simulation of a controller against the true plant."""

from __future__ import annotations

import csv
import json
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from gp_skrl.control.base import ControlDecision, Controller
from gp_skrl.control.policy import PolicyController
from gp_skrl.dynamics.bicycle import tracking_error
from gp_skrl.dynamics.reference import ReferencePath, build_reference
from gp_skrl.gp.regression import GPModel
from gp_skrl.gp.residuals import LearnedDynamics
from gp_skrl.planner.obstacles import Obstacle, build_obstacles, default_margin
from gp_skrl.planner.planner import SafetyPlanner, min_clearance
from gp_skrl.rl.approximators import KernelPolicy
from gp_skrl.rng import stream
from gp_skrl.schemas.config import PlannerConfig
from gp_skrl.schemas.scenarios import Scenario
from gp_skrl.sim.plant import step_true_plant

STATE_COLUMNS = ["v_x", "v_y", "phi", "omega", "X", "Y"]
CONTROL_COLUMNS = ["a_x", "delta_f"]
REFERENCE_COLUMNS = [f"ref_{c}" for c in STATE_COLUMNS]
ERROR_COLUMNS = ["e_vx", "e_vy", "e_phi", "e_omega", "e_lon", "e_lat"]
LOG_COLUMNS = [
    "step",
    "time",
    *STATE_COLUMNS,
    *CONTROL_COLUMNS,
    *REFERENCE_COLUMNS,
    "ref_index",
    *ERROR_COLUMNS,
    "mode",
    "rho",
    "progress",
    "clearance",
]

TERMINATIONS = ("goal", "collision", "timeout", "overshoot")


@dataclass(eq=False)
class TrajectoryLog:
    """Per-step record of one run on a uniform T_s grid. Errors are in the path frame."""

    scenario: str
    seed: int
    sample_time: float
    time: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    references: np.ndarray
    ref_index: np.ndarray
    errors: np.ndarray
    modes: list[str]
    rho: np.ndarray
    progress: np.ndarray
    clearance: np.ndarray
    solve_times: np.ndarray
    termination: str = "timeout"
    final_state: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.time)

    @property
    def collided(self) -> bool:
        return bool(np.any(self.clearance < 0.0))

    @property
    def min_clearance(self) -> float | None:
        finite = self.clearance[~np.isnan(self.clearance)]
        return float(finite.min()) if finite.size else None

    @property
    def lateral_errors(self) -> np.ndarray:
        return self.errors[:, 5]

    def slice(self, rows: np.ndarray | slice) -> TrajectoryLog:
        """Sub-log over the selected rows; the termination is kept only if the last row is included."""
        idx = np.arange(len(self))[rows]
        keeps_end = idx.size > 0 and idx[-1] == len(self) - 1
        return TrajectoryLog(
            scenario=self.scenario,
            seed=self.seed,
            sample_time=self.sample_time,
            time=self.time[idx],
            states=self.states[idx],
            controls=self.controls[idx],
            references=self.references[idx],
            ref_index=self.ref_index[idx],
            errors=self.errors[idx],
            modes=[self.modes[i] for i in idx],
            rho=self.rho[idx],
            progress=self.progress[idx],
            clearance=self.clearance[idx],
            solve_times=self.solve_times[idx],
            termination=self.termination if keeps_end else "timeout",
            final_state=self.final_state if keeps_end else None,
        )

    def save(self, directory: str | Path) -> dict[str, Path]:
        """trajectory.csv and log.json are deterministic; timing.csv holds wall-clock solve times."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"trajectory": out / "trajectory.csv", "meta": out / "log.json", "timing": out / "timing.csv"}
        with paths["trajectory"].open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_COLUMNS)
            for k in range(len(self)):
                writer.writerow(
                    [
                        k,
                        repr(float(self.time[k])),
                        *(repr(float(v)) for v in self.states[k]),
                        *(repr(float(v)) for v in self.controls[k]),
                        *(repr(float(v)) for v in self.references[k]),
                        int(self.ref_index[k]),
                        *(repr(float(v)) for v in self.errors[k]),
                        self.modes[k],
                        int(self.rho[k]),
                        repr(float(self.progress[k])),
                        repr(float(self.clearance[k])),
                    ]
                )
        meta = {
            "scenario": self.scenario,
            "seed": self.seed,
            "sample_time": self.sample_time,
            "termination": self.termination,
            "steps": len(self),
            "final_state": None if self.final_state is None else [float(v) for v in self.final_state],
        }
        paths["meta"].write_text(json.dumps(meta, indent=2))
        with paths["timing"].open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "solve_time"])
            for k, dt in enumerate(self.solve_times):
                writer.writerow([k, repr(float(dt))])
        return paths

    @classmethod
    def load(cls, directory: str | Path) -> TrajectoryLog:
        src = Path(directory)
        meta = json.loads((src / "log.json").read_text())
        with (src / "trajectory.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))

        def columns(names: list[str]) -> np.ndarray:
            return np.array([[float(r[n]) for n in names] for r in rows], dtype=float).reshape(len(rows), len(names))

        timing = src / "timing.csv"
        if timing.exists():
            with timing.open(newline="") as fh:
                solve = np.array([float(r["solve_time"]) for r in csv.DictReader(fh)])
        else:
            solve = np.zeros(len(rows))
        final = meta.get("final_state")
        return cls(
            scenario=meta["scenario"],
            seed=int(meta["seed"]),
            sample_time=float(meta["sample_time"]),
            time=columns(["time"])[:, 0],
            states=columns(STATE_COLUMNS),
            controls=columns(CONTROL_COLUMNS),
            references=columns(REFERENCE_COLUMNS),
            ref_index=np.array([int(r["ref_index"]) for r in rows], dtype=int),
            errors=columns(ERROR_COLUMNS),
            modes=[r["mode"] for r in rows],
            rho=np.array([int(r["rho"]) for r in rows], dtype=int),
            progress=columns(["progress"])[:, 0],
            clearance=columns(["clearance"])[:, 0],
            solve_times=solve,
            termination=meta["termination"],
            final_state=None if final is None else np.asarray(final, dtype=float),
        )


@dataclass(frozen=True, eq=False)
class StepRecord:
    """What the step hook sees after the plant has moved."""

    step: int
    time: float
    state: np.ndarray
    control: np.ndarray
    next_state: np.ndarray
    progress: float
    decision: ControlDecision


StepHook = Callable[[StepRecord], None]


_FIELDS = (
    "time",
    "states",
    "controls",
    "references",
    "ref_index",
    "errors",
    "modes",
    "rho",
    "progress",
    "clearance",
    "solve_times",
)


@dataclass
class _Recorder:
    rows: dict[str, list] = field(default_factory=lambda: {k: [] for k in _FIELDS})

    def add(self, **values) -> None:
        for key, value in values.items():
            self.rows[key].append(value)


def initial_state(scenario: Scenario, path: ReferencePath) -> np.ndarray:
    """Rest-free start at V_max, aligned with the first path segment."""
    return np.array([scenario.v_max, 0.0, float(path.heading[0]), 0.0, scenario.start[0], scenario.start[1]])


def _overshot(x: np.ndarray, scenario: Scenario, path: ReferencePath) -> bool:
    end = path.points[-1]
    h = path.heading[-1]
    ahead = (x[4] - end[0]) * math.cos(h) + (x[5] - end[1]) * math.sin(h)
    return ahead > scenario.goal_radius


def termination_status(
    x: np.ndarray, progress: float, clearance: float | None, scenario: Scenario, path: ReferencePath
) -> str | None:
    if clearance is not None and clearance < 0.0:
        return "collision"
    half_done = progress >= 0.5 * path.total_length
    if half_done and math.dist((x[4], x[5]), scenario.goal) <= scenario.goal_radius:
        return "goal"
    if half_done and progress >= path.total_length - 1e-9 and _overshot(x, scenario, path):
        return "overshoot"
    return None


def simulate(
    scenario: Scenario,
    controller: Controller,
    *,
    seed: int = 0,
    obstacles: list[Obstacle] | None = None,
    footprint_width: float = 1.9,
    path: ReferencePath | None = None,
    hook: StepHook | None = None,
) -> TrajectoryLog:
    """Drive ``controller`` against the true plant until the goal, a collision, an overshoot or the time cap.

    Each step: obstacles observe the vehicle, the controller is timed, clearance is measured, the step is
    recorded, termination is checked and only then the plant advances with the stage's exact parameters.
    """
    path = path or build_reference(scenario.path, scenario.v_max)
    obstacles = obstacles or []
    ts = scenario.sample_time
    rng = stream(seed, "plant-noise")
    n_max = int(math.floor(scenario.duration / ts + 1e-9))
    controller.reset()
    for obs in obstacles:
        obs.reset()

    x = initial_state(scenario, path)
    rec = _Recorder()
    termination = "timeout"
    final_state: np.ndarray | None = None
    logger.info("simulating {} (seed={}, up to {} steps)", scenario.name, seed, n_max + 1)

    for k in range(n_max + 1):
        t = k * ts
        for obs in obstacles:
            obs.observe(t, float(x[4]))
        start = time.perf_counter()
        decision = controller.control(x, t)
        solve_time = time.perf_counter() - start
        u = np.asarray(decision.control, dtype=float)
        clearance = min_clearance(x, obstacles, t, scenario.exact_params, footprint_width)
        ref = decision.reference
        rec.add(
            time=t,
            states=x.copy(),
            controls=u.copy(),
            references=ref.vector,
            ref_index=ref.index,
            errors=tracking_error(x, ref.vector, path_frame=True),
            modes=decision.mode,
            rho=decision.rho,
            progress=decision.progress,
            clearance=float("nan") if clearance is None else clearance,
            solve_times=solve_time,
        )
        status = termination_status(x, decision.progress, clearance, scenario, path)
        if status is not None:
            termination = status
            final_state = x.copy()
            break
        x_next = step_true_plant(x, u, scenario, rng, params=scenario.exact_params_at(decision.progress))
        if hook is not None:
            hook(StepRecord(k, t, x, u, x_next, decision.progress, decision))
        x = x_next
    else:
        final_state = x.copy()

    rows = rec.rows
    log = TrajectoryLog(
        scenario=scenario.name,
        seed=seed,
        sample_time=ts,
        time=np.asarray(rows["time"], dtype=float),
        states=np.asarray(rows["states"], dtype=float).reshape(-1, 6),
        controls=np.asarray(rows["controls"], dtype=float).reshape(-1, 2),
        references=np.asarray(rows["references"], dtype=float).reshape(-1, 6),
        ref_index=np.asarray(rows["ref_index"], dtype=int),
        errors=np.asarray(rows["errors"], dtype=float).reshape(-1, 6),
        modes=list(rows["modes"]),
        rho=np.asarray(rows["rho"], dtype=int),
        progress=np.asarray(rows["progress"], dtype=float),
        clearance=np.asarray(rows["clearance"], dtype=float),
        solve_times=np.asarray(rows["solve_times"], dtype=float),
        termination=termination,
        final_state=final_state,
    )
    level = "WARNING" if termination == "collision" else "INFO"
    logger.log(level, "{} ended with {} after {} steps ({:.2f}s)", scenario.name, termination, len(log), log.time[-1])
    return log


def obstacle_margin(scenario: Scenario, cfg: PlannerConfig) -> float:
    """Scenario margin, else the planner's, else half the footprint width plus 0.3 m."""
    if scenario.dilation_margin is not None:
        return scenario.dilation_margin
    if cfg.dilation_margin is not None:
        return cfg.dilation_margin
    return default_margin(cfg.footprint_width)


def build_planner(
    scenario: Scenario,
    pi0: KernelPolicy | None,
    pi1: KernelPolicy | None,
    cfg: PlannerConfig | None = None,
    model: GPModel | None = None,
    *,
    path: ReferencePath | None = None,
    use_obstacles: bool = True,
) -> SafetyPlanner:
    """A fresh planner with its own obstacle objects, so concurrent runs never share state."""
    cfg = cfg or PlannerConfig()
    path = path or build_reference(scenario.path, scenario.v_max)
    obstacles = (
        build_obstacles(scenario.obstacles, obstacle_margin(scenario, cfg), ellipse_vertices=cfg.ellipse_vertices)
        if use_obstacles
        else []
    )
    return SafetyPlanner(
        global_path=path,
        pi0=pi0,
        pi1=pi1,
        dynamics=LearnedDynamics(scenario.nominal_params, scenario.sample_time, model),
        obstacles=obstacles,
        cfg=cfg,
        v_max=scenario.v_max,
        params=scenario.exact_params,
    )


def run_scenario(
    scenario: Scenario,
    pi0: KernelPolicy | None,
    pi1: KernelPolicy | None,
    cfg: PlannerConfig | None = None,
    model: GPModel | None = None,
    *,
    seed: int = 0,
    hook: StepHook | None = None,
    trace_path: str | Path | None = None,
) -> TrajectoryLog:
    """Deploy the dual policies through the safety planner. Collisions and timeouts end up on the log.

    With ``trace_path`` the planner's per-step mode trace is written there as CSV.
    """
    cfg = cfg or PlannerConfig()
    path = build_reference(scenario.path, scenario.v_max)
    planner = build_planner(scenario, pi0, pi1, cfg, model, path=path)
    log = simulate(
        scenario,
        PolicyController(planner),
        seed=seed,
        obstacles=planner.obstacles,
        footprint_width=cfg.footprint_width,
        path=path,
        hook=hook,
    )
    if trace_path is not None:
        planner.write_trace_csv(trace_path)
    return log
