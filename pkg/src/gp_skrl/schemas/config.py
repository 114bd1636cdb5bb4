"""Run configuration: every tunable of the pipeline in one validated tree."""

from __future__ import annotations

import hashlib
import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator, model_validator

from gp_skrl.schemas.vehicle import ControlBounds, SamplingBox


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class KernelConfig(_Section):
    """Gaussian kernel widths and ALD threshold for the RL dictionary."""

    widths: list[PositiveFloat] = Field(
        default_factory=lambda: [0.7, 0.8, 0.9, 1.0], min_length=1, description="Multikernel feature widths"
    )
    dict_width: PositiveFloat = Field(default=0.9, description="Kernel width used by ALD sparsification")
    ald_threshold: PositiveFloat = Field(default=0.3, description="ALD admission threshold delta_max")
    input_scale: list[PositiveFloat] | None = Field(
        default=None,
        description="Per-coordinate divisor applied before kernel evaluation; None keeps raw coordinates",
    )


class GPOptions(_Section):
    """Residual GP settings."""

    signal_std: PositiveFloat = Field(default=5.0, description="Initial/fixed signal standard deviation sigma_f")
    lengthscale: PositiveFloat = Field(default=2.0, description="Initial/fixed isotropic lengthscale")
    noise_variance: PositiveFloat = Field(default=1e-3, description="Initial/fixed observation noise variance")
    mode: Literal["fixed", "optimize"] = Field(default="fixed", description="Hyperparameter handling")
    sparse: Literal["ald", "random", "full"] = Field(
        default="ald", description="Inducing set: ALD dictionary, random subset, or none (full GP)"
    )
    ald_threshold: PositiveFloat = Field(default=0.1, description="ALD threshold for the inducing dictionary")
    inducing_fraction: float = Field(
        default=0.1, gt=0.0, le=1.0, description="Fraction of training inputs kept by the random inducing set"
    )
    input_indices: list[int] = Field(
        default_factory=lambda: [0, 1, 3, 6, 7],
        min_length=1,
        description="Indices into [x, u] used as GP inputs (default v_x, v_y, omega, a_x, delta_f)",
    )
    channel: Literal["full", "lateral"] = Field(
        default="full", description="Residual injection: all six states or the (v_y, omega) pair"
    )
    max_sweeps: PositiveInt = Field(default=3, description="Coordinate sweeps in optimize mode")
    refit_hyperparams_online: bool = Field(
        default=False, description="Re-optimise hyperparameters during online adaptation updates"
    )

    @field_validator("input_indices")
    @classmethod
    def _indices_in_range(cls, value: list[int]) -> list[int]:
        if any(i < 0 or i > 7 for i in value) or len(set(value)) != len(value):
            raise ValueError(f"input_indices must be distinct integers in [0, 7], got {value}")
        return value


class CostConfig(_Section):
    """Stage cost x'Qx + u'Ru + mu*B(x) and discount."""

    q_diag: list[float] = Field(
        default_factory=lambda: [2.0, 0.0, 5.0, 0.0, 2.0, 2.0], min_length=6, max_length=6, description="diag(Q)"
    )
    r_diag: list[PositiveFloat] = Field(
        default_factory=lambda: [3.0, 3.0], min_length=2, max_length=2, description="diag(R)"
    )
    mu: float = Field(default=6.0, ge=0.0, description="Barrier weight")
    gamma: float = Field(default=0.95, gt=0.0, le=1.0, description="Discount factor")

    @field_validator("q_diag")
    @classmethod
    def _psd(cls, value: list[float]) -> list[float]:
        if any(q < 0 for q in value):
            raise ValueError(f"Q must be positive semi-definite, got diag {value}")
        return value


class TrainingConfig(_Section):
    """Batch policy-iteration settings."""

    rho_a: PositiveFloat = Field(default=1e-4, description="Actor ridge coefficient")
    rho_c: PositiveFloat = Field(default=1e-4, description="Critic ridge coefficient")
    sigma_a: PositiveFloat = Field(default=1e-6, description="Actor squared-delta threshold")
    sigma_c: PositiveFloat = Field(default=1e-6, description="Critic squared-delta threshold")
    max_iters: PositiveInt = Field(default=500, description="Iteration cap")
    barrier_eps: PositiveFloat = Field(default=1e-6, description="Barrier gradient smoothing epsilon_b")
    n_samples: PositiveInt = Field(default=3000, description="Error-state samples M")
    linearization: Literal["sample", "reference"] = Field(
        default="sample", description="Linearise at x_r + sample or at the reference itself"
    )


class PlannerConfig(_Section):
    """Safety-aware deployment settings."""

    horizon: PositiveInt = Field(default=20, description="Rollout horizon N_p (steps)")
    dilation_margin: float | None = Field(
        default=None, ge=0.0, description="Obstacle dilation (m); None uses vehicle half-width + 0.3"
    )
    footprint_width: PositiveFloat = Field(default=1.9, description="Vehicle footprint width (m)")
    monotone_index: bool = Field(default=True, description="Never move backward along the desired path")
    search_window: PositiveInt | None = Field(
        default=200, description="Forward index window of the nearest-point search; None scans the whole path"
    )
    contour_spacing: PositiveFloat = Field(default=0.5, description="Point spacing of contour paths (m)")
    exit_margin: PositiveFloat = Field(default=5.0, description="Distance past the obstacle where contours rejoin (m)")
    rollout_slack: float = Field(
        default=5.0, ge=0.0, description="Distance beyond the rollout reach within which static obstacles are checked (m)"
    )
    ellipse_vertices: PositiveInt = Field(default=24, description="Vertices of circumscribed ellipse polygons")
    path_frame_errors: bool = Field(default=True, description="Rotate position errors into the path frame")
    clip_errors: bool = Field(default=True, description="Clip error states to the sampling box before features")

    @field_validator("ellipse_vertices")
    @classmethod
    def _enough_vertices(cls, value: int) -> int:
        if value < 3:
            raise ValueError(f"ellipse_vertices must be at least 3, got {value}")
        return value


class ExcitationConfig(_Section):
    """Scripted multi-sine exploration for data collection."""

    steer_amplitude: PositiveFloat = Field(default=0.04, description="Per-tone steering amplitude (rad)")
    steer_frequencies: list[PositiveFloat] = Field(
        default_factory=lambda: [0.13, 0.41, 0.97], description="Steering tones (Hz)"
    )
    accel_amplitude: PositiveFloat = Field(default=0.3, description="Per-tone acceleration amplitude (m/s^2)")
    accel_frequencies: list[PositiveFloat] = Field(
        default_factory=lambda: [0.07, 0.29], description="Acceleration tones (Hz)"
    )
    heading_gain: float = Field(default=0.6, ge=0.0, description="Steering per rad of heading error")
    lateral_gain: float = Field(default=0.08, ge=0.0, description="Steering per m of lateral error")
    speed_gain: float = Field(default=0.5, ge=0.0, description="Acceleration per m/s of speed error")


class MetricWeights(_Section):
    """Weights of the aggregate tracking metric J."""

    q_lon: float = Field(default=2.0, ge=0.0, description="Longitudinal error weight")
    q_lat: float = Field(default=2.0, ge=0.0, description="Lateral error weight")
    q_heading: float = Field(default=5.0, ge=0.0, description="Heading error weight")
    r_diag: list[float] = Field(
        default_factory=lambda: [3.0, 3.0], min_length=2, max_length=2, description="Control weights"
    )


class AdaptationOptions(_Section):
    """Online adaptation behaviour."""

    reset_each_stage: bool = Field(
        default=True, description="Restart every stage from the initial policy with an empty buffer"
    )
    max_iters: PositiveInt = Field(default=300, description="Iteration cap of each warm-started update")


class RunConfig(_Section):
    """Root of the configuration tree."""

    stage: str | None = Field(default=None, description="Selected pipeline stage")
    scenario: str | None = Field(default=None, description="Scenario name or JSON path")
    output_dir: str | None = Field(default=None, description="Artifact store root")
    seed: int = Field(default=0, ge=0, description="Master RNG seed")
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    gp: GPOptions = Field(default_factory=GPOptions)
    cost: CostConfig = Field(default_factory=CostConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    excitation: ExcitationConfig = Field(default_factory=ExcitationConfig)
    metrics: MetricWeights = Field(default_factory=MetricWeights)
    adaptation: AdaptationOptions = Field(default_factory=AdaptationOptions)
    box: SamplingBox = Field(default_factory=SamplingBox)
    bounds: ControlBounds = Field(default_factory=ControlBounds)

    @model_validator(mode="after")
    def _scale_matches_state(self) -> RunConfig:
        scale = self.kernel.input_scale
        if scale is not None and len(scale) != 6:
            raise ValueError(f"kernel.input_scale must have 6 entries, got {len(scale)}")
        return self

    def rl_kernel(self) -> KernelConfig:
        """Kernel config with the sampling box as the default input scale."""
        if self.kernel.input_scale is not None:
            return self.kernel
        return self.kernel.model_copy(update={"input_scale": list(self.box.half_widths)})


def config_hash(*sections: BaseModel) -> str:
    """Stable digest of one or more config sections."""
    payload = [json.loads(s.model_dump_json()) for s in sections]
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
