"""Dynamic bicycle model, its Jacobians and error-state helpers.

All functions broadcast over leading axes: a state is ``(..., 6)`` ordered
``(v_x, v_y, phi, omega, X, Y)`` and a control is ``(..., 2)`` ordered
``(a_x, delta_f)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from gp_skrl.errors import SingularSpeedError
from gp_skrl.schemas.vehicle import ControlBounds, SamplingBox, VehicleParams

V_MIN = 0.1
STATE_DIM = 6
CONTROL_DIM = 2

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class VehicleState:
    v_x: float
    v_y: float
    phi: float
    omega: float
    X: float
    Y: float

    @property
    def vector(self) -> FloatArray:
        return np.array([self.v_x, self.v_y, self.phi, self.omega, self.X, self.Y])

    @classmethod
    def from_vector(cls, x: ArrayLike) -> VehicleState:
        v = np.asarray(x, dtype=float)
        return cls(*(float(c) for c in v))


@dataclass(frozen=True)
class ControlInput:
    a_x: float
    delta_f: float

    @property
    def vector(self) -> FloatArray:
        return np.array([self.a_x, self.delta_f])

    @classmethod
    def from_vector(cls, u: ArrayLike) -> ControlInput:
        v = np.asarray(u, dtype=float)
        return cls(float(v[0]), float(v[1]))


@dataclass(frozen=True)
class ErrorState:
    e_vx: float
    e_vy: float
    e_phi: float
    e_omega: float
    e_X: float
    e_Y: float

    @property
    def vector(self) -> FloatArray:
        return np.array([self.e_vx, self.e_vy, self.e_phi, self.e_omega, self.e_X, self.e_Y])

    @classmethod
    def from_vector(cls, e: ArrayLike) -> ErrorState:
        v = np.asarray(e, dtype=float)
        return cls(*(float(c) for c in v))


def as_array(value: ArrayLike | VehicleState | ControlInput | ErrorState) -> FloatArray:
    if isinstance(value, (VehicleState, ControlInput, ErrorState)):
        return value.vector
    return np.asarray(value, dtype=float)


def _check_speed(v_x: FloatArray) -> None:
    low = np.asarray(v_x) < V_MIN
    if np.any(low):
        raise SingularSpeedError(float(np.min(v_x)), V_MIN)


def continuous_dynamics(s: ArrayLike, u: ArrayLike, p: VehicleParams) -> FloatArray:
    """State derivative of the dynamic bicycle model."""
    x = as_array(s)
    c = as_array(u)
    vx, vy, phi, om = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    ax, delta = c[..., 0], c[..., 1]
    _check_speed(vx)

    front = (vy + p.l_f * om) / vx
    rear = (p.l_r * om - vy) / vx
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)

    dvx = vy * om + ax
    dvy = 2.0 * p.C_af * (delta - front) / p.m + 2.0 * p.C_ar * rear / p.m - vx * om
    domega = (2.0 / p.I_z) * (p.l_f * p.C_af * (delta - front) - p.l_r * p.C_ar * rear)
    dX = vx * cos_phi - vy * sin_phi
    dY = vx * sin_phi + vy * cos_phi
    return np.stack(np.broadcast_arrays(dvx, dvy, om, domega, dX, dY), axis=-1)


def continuous_jacobians(s: ArrayLike, u: ArrayLike, p: VehicleParams) -> tuple[FloatArray, FloatArray]:
    """Analytic d f / d x (..., 6, 6) and d f / d u (..., 6, 2)."""
    x = as_array(s)
    c = as_array(u)
    vx, vy, phi, om = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    _check_speed(vx)
    batch = np.broadcast_shapes(x.shape[:-1], c.shape[:-1])
    Jx = np.zeros(batch + (6, 6))
    Ju = np.zeros(batch + (6, 2))

    m, Iz, lf, lr, Caf, Car = p.m, p.I_z, p.l_f, p.l_r, p.C_af, p.C_ar
    vx2 = vx * vx
    cos_phi, sin_phi = np.cos(phi), np.sin(phi)

    # v_x row
    Jx[..., 0, 1] = om
    Jx[..., 0, 3] = vy
    Ju[..., 0, 0] = 1.0

    # v_y row
    Jx[..., 1, 0] = 2.0 * Caf * (vy + lf * om) / (m * vx2) - 2.0 * Car * (lr * om - vy) / (m * vx2) - om
    Jx[..., 1, 1] = -2.0 * (Caf + Car) / (m * vx)
    Jx[..., 1, 3] = (-2.0 * Caf * lf + 2.0 * Car * lr) / (m * vx) - vx
    Ju[..., 1, 1] = 2.0 * Caf / m

    # phi row
    Jx[..., 2, 3] = 1.0

    # omega row
    Jx[..., 3, 0] = (2.0 / Iz) * (lf * Caf * (vy + lf * om) + lr * Car * (lr * om - vy)) / vx2
    Jx[..., 3, 1] = (2.0 / Iz) * (-lf * Caf + lr * Car) / vx
    Jx[..., 3, 3] = -(2.0 / Iz) * (lf * lf * Caf + lr * lr * Car) / vx
    Ju[..., 3, 1] = 2.0 * lf * Caf / Iz

    # X, Y rows
    Jx[..., 4, 0] = cos_phi
    Jx[..., 4, 1] = -sin_phi
    Jx[..., 4, 2] = -vx * sin_phi - vy * cos_phi
    Jx[..., 5, 0] = sin_phi
    Jx[..., 5, 1] = cos_phi
    Jx[..., 5, 2] = vx * cos_phi - vy * sin_phi
    return Jx, Ju


def nominal_jacobians(s: ArrayLike, u: ArrayLike, p: VehicleParams, T_s: float) -> tuple[FloatArray, FloatArray]:
    """Euler-discretised Jacobians A = I + T_s df/dx, B = T_s df/du."""
    if T_s < 0:
        raise ValueError(f"T_s must be non-negative, got {T_s}")
    Jx, Ju = continuous_jacobians(s, u, p)
    return np.eye(STATE_DIM) + T_s * Jx, T_s * Ju


def clamp_speed(s: ArrayLike) -> tuple[FloatArray, bool]:
    """Lift v_x to the speed floor; the flag reports whether anything changed."""
    x = np.array(as_array(s), dtype=float)
    low = x[..., 0] < V_MIN
    clamped = bool(np.any(low))
    if clamped:
        x[..., 0] = np.where(low, V_MIN, x[..., 0])
    return x, clamped


def discrete_step_nominal(s: ArrayLike, u: ArrayLike, p: VehicleParams, T_s: float) -> FloatArray:
    """One explicit-Euler step; v_x of the result is clamped to the floor."""
    x = as_array(s)
    nxt = x + T_s * continuous_dynamics(x, u, p)
    nxt, _ = clamp_speed(nxt)
    return nxt


def wrap_angle(angle: ArrayLike) -> FloatArray:
    """Wrap to (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    wrapped = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def error_state(s: ArrayLike, r: ArrayLike) -> FloatArray:
    """Componentwise difference s - r."""
    return as_array(s) - as_array(r)


def tracking_error(s: ArrayLike, r: ArrayLike, *, path_frame: bool = True) -> FloatArray:
    """Error state with the heading wrapped and, optionally, (e_X, e_Y) rotated into the path frame.

    In the path frame column 4 is the along-path error and column 5 the lateral error.
    """
    ref = as_array(r)
    e = error_state(s, ref)
    e[..., 2] = wrap_angle(e[..., 2])
    if path_frame:
        e = path_frame_error(e, ref[..., 2])
    return e


def path_frame_error(e: ArrayLike, phi_r: ArrayLike) -> FloatArray:
    """Rotate (e_X, e_Y) by -phi_r."""
    out = np.array(as_array(e), dtype=float)
    c, s = np.cos(phi_r), np.sin(phi_r)
    ex, ey = out[..., 4].copy(), out[..., 5].copy()
    out[..., 4] = c * ex + s * ey
    out[..., 5] = -s * ex + c * ey
    return out


def clip_error_to_box(e: ArrayLike, box: SamplingBox) -> FloatArray:
    h = np.asarray(box.half_widths)
    return np.clip(as_array(e), -h, h)


def clamp_control(u: ArrayLike, bounds: ControlBounds) -> FloatArray:
    return np.clip(as_array(u), bounds.lower, bounds.upper)
