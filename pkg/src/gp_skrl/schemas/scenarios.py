from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

from gp_skrl.schemas.vehicle import EXACT_PARAMS, VehicleParams

Point = tuple[float, float]


class PathSpec(BaseModel):
    """Global reference path description."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["straight", "racetrack", "waypoints"] = Field(description="Path generator")
    points: list[Point] = Field(
        default_factory=list, description="Endpoints (straight) or ordered waypoints (waypoints)"
    )
    spacing: PositiveFloat = Field(default=0.5, description="Resampling distance between path points (m)")
    total_length: PositiveFloat = Field(default=508.0, description="Racetrack arc length (m)")
    n_sides: PositiveInt = Field(default=6, description="Racetrack sides; 2 gives a stadium oval")
    corner_radius: PositiveFloat = Field(default=40.0, description="Racetrack corner radius (m)")
    origin: Point = Field(default=(0.0, 0.0), description="Racetrack start point")
    heading: float = Field(default=0.0, description="Racetrack initial heading (rad)")


class MotionSpec(BaseModel):
    """Waypoint schedule of a moving obstacle."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    waypoints: list[Point] = Field(min_length=2, description="Centre positions visited in order")
    speed: PositiveFloat = Field(description="Travel speed along the waypoints (m/s)")
    trigger_x: float | None = Field(
        default=None, description="Start moving once the ego vehicle's X exceeds this value; None moves from t=0"
    )


class ObstacleSpec(BaseModel):
    """Convex polygon (CCW vertices) or ellipse obstacle."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    obstacle_id: str = Field(description="Unique obstacle identifier")
    kind: Literal["polygon", "ellipse"] = Field(description="Shape kind")
    vertices: list[Point] = Field(default_factory=list, description="Polygon vertices, counter-clockwise")
    center: Point = Field(default=(0.0, 0.0), description="Ellipse centre")
    semi_axes: Point = Field(default=(1.0, 1.0), description="Ellipse semi-axes (a, b)")
    angle: float = Field(default=0.0, description="Ellipse rotation (rad)")
    motion: MotionSpec | None = Field(default=None, description="Movement schedule; None for static obstacles")

    @model_validator(mode="after")
    def _shape_fields(self) -> ObstacleSpec:
        if self.kind == "polygon" and len(self.vertices) < 3:
            raise ValueError(f"polygon obstacle {self.obstacle_id!r} needs at least 3 vertices")
        return self


class AdaptationSchedule(BaseModel):
    """Piecewise-constant plant parameters along the path with policy-update triggers."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    boundaries: list[float] = Field(description="Stage start positions along the path (m), first is 0")
    params: list[VehicleParams] = Field(description="Exact plant parameters of each stage")
    triggers: list[float] = Field(description="Arc positions where the policy is updated")

    @model_validator(mode="after")
    def _consistent(self) -> AdaptationSchedule:
        if len(self.boundaries) != len(self.params):
            raise ValueError("one parameter set is required per stage boundary")
        if any(b >= a for b, a in zip(self.boundaries, self.boundaries[1:])) or self.boundaries[0] != 0.0:
            raise ValueError(f"boundaries must start at 0 and be strictly increasing, got {self.boundaries}")
        return self

    def stage_of(self, s: float) -> int:
        idx = 0
        for i, b in enumerate(self.boundaries):
            if s >= b:
                idx = i
        return idx


class Scenario(BaseModel):
    """A closed-loop driving scenario."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(description="Unique scenario identifier")
    description: str = Field(default="", description="What the scenario exercises")
    start: Point = Field(description="Start position (m)")
    goal: Point = Field(description="Goal position (m)")
    path: PathSpec = Field(description="Global path")
    v_max: PositiveFloat = Field(default=10.0, description="Desired (maximum) speed (m/s)")
    sample_time: PositiveFloat = Field(default=0.05, description="Sampling interval T_s (s)")
    exact_params: VehicleParams = Field(default=EXACT_PARAMS, description="True plant parameters")
    nominal_params: VehicleParams = Field(default=EXACT_PARAMS, description="Parameters of the nominal model")
    noise_variance: tuple[float, float, float, float, float, float] = Field(
        default=(0.001 / 3,) * 6, description="Process-noise variances per state"
    )
    noise_channel: Literal["full", "residual"] = Field(
        default="full", description="Noise on all states or through the residual channel"
    )
    obstacles: list[ObstacleSpec] = Field(default_factory=list, description="Static and moving obstacles")
    duration_cap: float | None = Field(
        default=None, ge=0.0, description="Simulated time limit (s); None uses 3x straight distance / v_max"
    )
    goal_radius: PositiveFloat = Field(default=1.0, description="Goal ball radius (m)")
    dilation_margin: float | None = Field(
        default=None, ge=0.0, description="Scenario-level obstacle dilation; overrides the planner default"
    )
    require_safe: bool = Field(default=False, description="A collision in this scenario fails the run")
    adaptation: AdaptationSchedule | None = Field(default=None, description="Online adaptation schedule")
    reconstructed: bool = Field(
        default=False, description="Geometry is a reconstruction of a pictorial layout, not exact coordinates"
    )

    @model_validator(mode="after")
    def _noise_non_negative(self) -> Scenario:
        if any(v < 0 for v in self.noise_variance):
            raise ValueError(f"noise variances must be non-negative, got {self.noise_variance}")
        return self

    @property
    def duration(self) -> float:
        if self.duration_cap is not None:
            return self.duration_cap
        distance = math.dist(self.start, self.goal)
        if distance < self.goal_radius and self.path.kind == "racetrack":
            distance = self.path.total_length
        return 3.0 * distance / self.v_max

    def exact_params_at(self, s: float) -> VehicleParams:
        """Plant parameters at arc position s (stage-dependent when adapting)."""
        if self.adaptation is None:
            return self.exact_params
        return self.adaptation.params[self.adaptation.stage_of(s)]


class ScenarioCollection(BaseModel):
    """A named collection of related scenarios."""

    collection_id: str = Field(description="Unique collection identifier")
    name: str = Field(description="Human-readable collection name")
    description: str = Field(description="What this collection covers")
    scenarios: list[Scenario] = Field(default_factory=list, description="Scenarios in this collection")
