from gp_skrl.dynamics.bicycle import (
    V_MIN,
    ControlInput,
    ErrorState,
    VehicleState,
    clamp_control,
    clamp_speed,
    clip_error_to_box,
    continuous_dynamics,
    discrete_step_nominal,
    error_state,
    nominal_jacobians,
    path_frame_error,
    tracking_error,
    wrap_angle,
)
from gp_skrl.dynamics.reference import ReferencePath, ReferenceState, build_reference

__all__ = [
    "ControlInput",
    "ErrorState",
    "ReferencePath",
    "ReferenceState",
    "V_MIN",
    "VehicleState",
    "build_reference",
    "clamp_control",
    "clamp_speed",
    "clip_error_to_box",
    "continuous_dynamics",
    "discrete_step_nominal",
    "error_state",
    "nominal_jacobians",
    "path_frame_error",
    "tracking_error",
    "wrap_angle",
]
