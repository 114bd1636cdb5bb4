from __future__ import annotations

from pydantic import BaseModel, Field


class MetricsReport(BaseModel):
    """Tracking and efficiency metrics of one closed-loop run."""

    J: float = Field(description="Weighted average stage cost")
    J_Lat: float = Field(description="Mean squared lateral error")
    J_Lon: float = Field(description="Mean squared longitudinal error")
    J_Heading: float = Field(description="Mean squared heading error")
    J_Con: float = Field(description="Mean weighted control effort")
    length: float = Field(description="Driven path length (m)")
    completion_time: float = Field(description="Simulated time to termination (s)")
    mean_solve_time: float = Field(description="Average per-step control computation time (s)")
    collision: bool = Field(description="Whether the footprint ever overlapped an obstacle")
    min_clearance: float | None = Field(description="Smallest footprint-obstacle distance (m); None without obstacles")
    termination: str = Field(default="goal", description="goal, timeout, overshoot or collision")
    steps: int = Field(default=0, description="Number of logged steps")


class StageErrorRow(BaseModel):
    """Mean absolute lateral error over one half of an adaptation stage."""

    stage: int = Field(description="Stage index")
    half: int = Field(description="0 for the data-collection half, 1 for the half after the update")
    start: float = Field(description="Arc position where the half starts (m)")
    end: float = Field(description="Arc position where the half ends (m)")
    mean_abs_lateral_error: float = Field(description="Mean |e_lat| over the half (m)")
    steps: int = Field(description="Logged steps inside the half")


class AdaptationReport(BaseModel):
    """Per-stage errors and update timings of an online adaptation run."""

    rows: list[StageErrorRow] = Field(default_factory=list, description="Half-stage error rows")
    update_times: list[float] = Field(default_factory=list, description="Wall time of each policy update (s)")
    update_positions: list[float] = Field(default_factory=list, description="Arc position of each update (m)")
    failed_updates: int = Field(default=0, description="Updates that kept the previous policy")

    def halves(self, stage: int) -> tuple[float, float]:
        first = next(r for r in self.rows if r.stage == stage and r.half == 0)
        second = next(r for r in self.rows if r.stage == stage and r.half == 1)
        return first.mean_abs_lateral_error, second.mean_abs_lateral_error


class ArcErrorRow(BaseModel):
    """Mean absolute lateral error inside one arc-length bin, with and without the learned model."""

    start: float = Field(description="Bin start (m)")
    end: float = Field(description="Bin end (m)")
    without_model: float = Field(description="Mean |e_lat| with the nominal model only (m)")
    with_model: float = Field(description="Mean |e_lat| with GP compensation (m)")


class ModelLearningReport(BaseModel):
    """Paired with/without model-learning comparison."""

    seeds: list[int] = Field(description="Seeds of the paired runs")
    mean_without_model: list[float] = Field(description="Average |e_lat| per seed, nominal model")
    mean_with_model: list[float] = Field(description="Average |e_lat| per seed, learned model")
    arcs: list[ArcErrorRow] = Field(default_factory=list, description="Per-arc errors of the first seed")


class SparseGPRow(BaseModel):
    """Training time and one-step prediction error of the two sparse GP variants."""

    n_points: int = Field(description="Training set size")
    ald_inducing: int = Field(description="Inducing points chosen by ALD")
    fitc_inducing: int = Field(description="Inducing points of the FITC baseline")
    ald_time: float = Field(description="ALD-GP training wall time (s)")
    fitc_time: float = Field(description="FITC-GP training wall time (s)")
    ald_ape_vy: float = Field(description="ALD-GP mean absolute one-step error in v_y")
    fitc_ape_vy: float = Field(description="FITC-GP mean absolute one-step error in v_y")
    ald_ape_omega: float = Field(description="ALD-GP mean absolute one-step error in omega")
    fitc_ape_omega: float = Field(description="FITC-GP mean absolute one-step error in omega")
