from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator


class VehicleParams(BaseModel):
    """Bicycle-model parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m: PositiveFloat = Field(description="Mass (kg)")
    I_z: PositiveFloat = Field(description="Yaw moment of inertia (kg*m^2)")
    l_f: PositiveFloat = Field(description="CoG to front axle distance (m)")
    l_r: PositiveFloat = Field(description="CoG to rear axle distance (m)")
    C_af: PositiveFloat = Field(description="Front cornering stiffness (N/rad)")
    C_ar: PositiveFloat = Field(description="Rear cornering stiffness (N/rad)")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r

    def with_inertia(self, m: float, I_z: float) -> VehicleParams:
        return self.model_copy(update={"m": m, "I_z": I_z})


EXACT_PARAMS = VehicleParams(m=2257.0, I_z=3524.9, l_f=1.33, l_r=1.81, C_af=60790.0, C_ar=50400.0)
NOMINAL_PARAMS = EXACT_PARAMS.with_inertia(m=20000.0, I_z=20000.0)


class ControlBounds(BaseModel):
    """Box limits on [a_x, delta_f]."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    a_x: tuple[float, float] = Field(default=(-1.0, 1.0), description="Longitudinal acceleration limits (m/s^2)")
    delta_f: tuple[float, float] = Field(
        default=(-math.pi / 6, math.pi / 6), description="Front steering angle limits (rad)"
    )

    @model_validator(mode="after")
    def _ordered(self) -> ControlBounds:
        for name in ("a_x", "delta_f"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} bounds must satisfy lo < hi, got ({lo}, {hi})")
        return self

    @property
    def lower(self) -> tuple[float, float]:
        return (self.a_x[0], self.delta_f[0])

    @property
    def upper(self) -> tuple[float, float]:
        return (self.a_x[1], self.delta_f[1])


class SamplingBox(BaseModel):
    """Symmetric box of error states used for training samples and deployment clipping."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    half_widths: tuple[float, float, float, float, float, float] = Field(
        default=(6.0, 6.0, math.pi / 3, 6.0, 3.0, 3.0),
        description="Half-widths for (e_vx, e_vy, e_phi, e_omega, e_X, e_Y)",
    )

    @model_validator(mode="after")
    def _positive(self) -> SamplingBox:
        if any(h <= 0 for h in self.half_widths):
            raise ValueError(f"sampling box half-widths must be positive, got {self.half_widths}")
        return self
