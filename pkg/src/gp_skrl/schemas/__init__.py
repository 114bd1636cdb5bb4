from gp_skrl.schemas.config import (
    AdaptationOptions,
    CostConfig,
    ExcitationConfig,
    GPOptions,
    KernelConfig,
    MetricWeights,
    PlannerConfig,
    RunConfig,
    TrainingConfig,
    config_hash,
)
from gp_skrl.schemas.results import (
    AdaptationReport,
    ArcErrorRow,
    MetricsReport,
    ModelLearningReport,
    SparseGPRow,
    StageErrorRow,
)
from gp_skrl.schemas.scenarios import (
    AdaptationSchedule,
    MotionSpec,
    ObstacleSpec,
    PathSpec,
    Scenario,
    ScenarioCollection,
)
from gp_skrl.schemas.vehicle import EXACT_PARAMS, NOMINAL_PARAMS, ControlBounds, SamplingBox, VehicleParams

__all__ = [
    "AdaptationOptions",
    "AdaptationReport",
    "AdaptationSchedule",
    "ArcErrorRow",
    "ControlBounds",
    "CostConfig",
    "EXACT_PARAMS",
    "ExcitationConfig",
    "GPOptions",
    "KernelConfig",
    "MetricWeights",
    "MetricsReport",
    "ModelLearningReport",
    "MotionSpec",
    "NOMINAL_PARAMS",
    "ObstacleSpec",
    "PathSpec",
    "PlannerConfig",
    "RunConfig",
    "SamplingBox",
    "Scenario",
    "ScenarioCollection",
    "SparseGPRow",
    "StageErrorRow",
    "TrainingConfig",
    "VehicleParams",
    "config_hash",
]
