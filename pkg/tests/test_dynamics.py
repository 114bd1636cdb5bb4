"""Tests for the bicycle model, error states and reference paths."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gp_skrl.dynamics.bicycle import (
    V_MIN,
    ErrorState,
    VehicleState,
    clamp_control,
    clamp_speed,
    clip_error_to_box,
    continuous_dynamics,
    continuous_jacobians,
    discrete_step_nominal,
    error_state,
    nominal_jacobians,
    path_frame_error,
    tracking_error,
    wrap_angle,
)
from gp_skrl.dynamics.reference import build_reference, densify
from gp_skrl.errors import DegenerateSpecError, SingularSpeedError
from gp_skrl.schemas.scenarios import PathSpec
from gp_skrl.schemas.vehicle import EXACT_PARAMS, NOMINAL_PARAMS, ControlBounds, SamplingBox


def _random_points(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.column_stack(
        [
            rng.uniform(2.0, 20.0, n),
            rng.uniform(-2.0, 2.0, n),
            rng.uniform(-math.pi, math.pi, n),
            rng.uniform(-1.0, 1.0, n),
            rng.uniform(-50.0, 50.0, n),
            rng.uniform(-50.0, 50.0, n),
        ]
    )
    u = np.column_stack([rng.uniform(-1.0, 1.0, n), rng.uniform(-0.5, 0.5, n)])
    return x, u


class TestContinuousDynamics:
    def test_straight_driving_is_an_equilibrium_of_the_lateral_states(self):
        x = np.array([10.0, 0.0, 0.0, 0.0, 3.0, -2.0])
        dx = continuous_dynamics(x, np.zeros(2), EXACT_PARAMS)
        np.testing.assert_allclose(dx, [0.0, 0.0, 0.0, 0.0, 10.0, 0.0], atol=1e-12)

    def test_heading_rotates_the_velocity(self):
        x = np.array([10.0, 0.0, math.pi / 2, 0.0, 0.0, 0.0])
        dx = continuous_dynamics(x, np.zeros(2), EXACT_PARAMS)
        assert dx[4] == pytest.approx(0.0, abs=1e-12)
        assert dx[5] == pytest.approx(10.0)

    def test_batches_broadcast(self):
        rng = np.random.default_rng(0)
        x, u = _random_points(rng, 5)
        batch = continuous_dynamics(x, u, EXACT_PARAMS)
        for i in range(5):
            np.testing.assert_allclose(batch[i], continuous_dynamics(x[i], u[i], EXACT_PARAMS))

    def test_speed_below_floor_raises(self):
        with pytest.raises(SingularSpeedError, match="speed floor"):
            continuous_dynamics([0.01, 0.0, 0.0, 0.0, 0.0, 0.0], [0.0, 0.0], EXACT_PARAMS)

    def test_dataclass_inputs_are_accepted(self):
        s = VehicleState(10.0, 0.1, 0.2, 0.0, 1.0, 2.0)
        np.testing.assert_allclose(
            continuous_dynamics(s, [0.5, 0.1], EXACT_PARAMS), continuous_dynamics(s.vector, [0.5, 0.1], EXACT_PARAMS)
        )


class TestJacobians:
    @pytest.mark.parametrize("params", [EXACT_PARAMS, NOMINAL_PARAMS], ids=["exact", "nominal"])
    def test_match_central_differences(self, params):
        rng = np.random.default_rng(1)
        x, u = _random_points(rng, 50)
        h = 1e-5
        for xi, ui in zip(x, u):
            Jx, Ju = continuous_jacobians(xi, ui, params)
            fd_x = np.empty((6, 6))
            for j in range(6):
                d = np.zeros(6)
                d[j] = h
                fd_x[:, j] = (continuous_dynamics(xi + d, ui, params) - continuous_dynamics(xi - d, ui, params)) / (2 * h)
            fd_u = np.empty((6, 2))
            for j in range(2):
                d = np.zeros(2)
                d[j] = h
                fd_u[:, j] = (continuous_dynamics(xi, ui + d, params) - continuous_dynamics(xi, ui - d, params)) / (2 * h)
            np.testing.assert_allclose(Jx, fd_x, rtol=1e-4, atol=1e-6)
            np.testing.assert_allclose(Ju, fd_u, rtol=1e-4, atol=1e-6)

    def test_discrete_jacobians_are_euler(self):
        x = np.array([10.0, 0.2, 0.1, 0.05, 0.0, 0.0])
        u = np.array([0.1, 0.02])
        A, B = nominal_jacobians(x, u, EXACT_PARAMS, 0.05)
        Jx, Ju = continuous_jacobians(x, u, EXACT_PARAMS)
        np.testing.assert_allclose(A, np.eye(6) + 0.05 * Jx)
        np.testing.assert_allclose(B, 0.05 * Ju)

    def test_zero_sample_time_gives_identity(self):
        A, B = nominal_jacobians([10.0, 0, 0, 0, 0, 0], [0.0, 0.0], EXACT_PARAMS, 0.0)
        np.testing.assert_array_equal(A, np.eye(6))
        np.testing.assert_array_equal(B, np.zeros((6, 2)))

    def test_negative_sample_time_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            nominal_jacobians([10.0, 0, 0, 0, 0, 0], [0.0, 0.0], EXACT_PARAMS, -0.1)


class TestDiscreteStep:
    def test_euler_step(self):
        x = np.array([10.0, 0.1, 0.0, 0.02, 0.0, 0.0])
        u = np.array([0.5, 0.05])
        expected = x + 0.05 * continuous_dynamics(x, u, EXACT_PARAMS)
        np.testing.assert_allclose(discrete_step_nominal(x, u, EXACT_PARAMS, 0.05), expected)

    def test_clamps_speed_of_the_result(self):
        x = np.array([0.2, 0.0, 0.0, 0.0, 0.0, 0.0])
        nxt = discrete_step_nominal(x, [-10.0, 0.0], EXACT_PARAMS, 0.05)
        assert nxt[0] == V_MIN

    def test_clamp_speed_reports_change(self):
        x, changed = clamp_speed([0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        assert changed is True
        assert x[0] == V_MIN
        _, changed = clamp_speed([5.0, 1.0, 0.0, 0.0, 0.0, 0.0])
        assert changed is False


class TestErrorStates:
    def test_wrap_angle_range(self):
        angles = np.linspace(-20.0, 20.0, 401)
        wrapped = wrap_angle(angles)
        assert np.all(wrapped > -math.pi)
        assert np.all(wrapped <= math.pi)
        np.testing.assert_allclose(np.cos(wrapped), np.cos(angles), atol=1e-12)

    def test_wrap_minus_pi_maps_to_pi(self):
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)

    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=6, max_size=6),
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=6, max_size=6),
    )
    @settings(max_examples=50, deadline=None)
    def test_error_round_trip(self, s, r):
        e = error_state(s, r)
        np.testing.assert_allclose(e + np.asarray(r), np.asarray(s), atol=1e-9)

    def test_path_frame_on_heading_zero_is_identity(self):
        e = np.array([0.1, 0.2, 0.3, 0.4, 1.5, -2.5])
        np.testing.assert_allclose(path_frame_error(e, 0.0), e)

    def test_path_frame_splits_lateral_and_longitudinal(self):
        # reference heading north: a vehicle 2 m east of it is 2 m to the right
        s = [10.0, 0.0, math.pi / 2, 0.0, 2.0, 5.0]
        r = [10.0, 0.0, math.pi / 2, 0.0, 0.0, 4.0]
        e = tracking_error(s, r)
        assert e[4] == pytest.approx(1.0)
        assert e[5] == pytest.approx(-2.0)

    def test_tracking_error_wraps_heading(self):
        e = tracking_error([10, 0, 3.1, 0, 0, 0], [10, 0, -3.1, 0, 0, 0], path_frame=False)
        assert e[2] == pytest.approx(6.2 - 2 * math.pi)

    def test_error_state_dataclass(self):
        e = ErrorState.from_vector([1, 2, 3, 4, 5, 6])
        assert e.e_Y == 6.0
        np.testing.assert_array_equal(e.vector, [1, 2, 3, 4, 5, 6])

    def test_clip_to_box(self):
        box = SamplingBox()
        clipped = clip_error_to_box([100.0, -100.0, 5.0, 0.0, 1.0, -10.0], box)
        np.testing.assert_allclose(clipped, [6.0, -6.0, math.pi / 3, 0.0, 1.0, -3.0])

    def test_clamp_control(self):
        u = clamp_control([3.0, -2.0], ControlBounds())
        np.testing.assert_allclose(u, [1.0, -math.pi / 6])


class TestReferencePaths:
    def test_straight_path(self):
        path = build_reference(PathSpec(kind="straight", points=[(0, 0), (100, 0)]), 10.0)
        assert path.total_length == pytest.approx(100.0)
        assert len(path) == 201
        np.testing.assert_allclose(path.heading, 0.0)
        np.testing.assert_allclose(path.speed, 10.0)

    def test_straight_needs_two_distinct_points(self):
        with pytest.raises(DegenerateSpecError):
            build_reference(PathSpec(kind="straight", points=[(1, 1), (1, 1)]), 10.0)
        with pytest.raises(DegenerateSpecError):
            build_reference(PathSpec(kind="straight", points=[(0, 0), (1, 0), (2, 0)]), 10.0)

    def test_waypoints_keep_their_corners(self):
        path = build_reference(PathSpec(kind="waypoints", points=[(0, 0), (10, 0), (10, 10)], spacing=1.0), 5.0)
        assert path.total_length == pytest.approx(20.0)
        assert any(np.allclose(p, (10.0, 0.0)) for p in path.points)

    def test_densify_spacing(self):
        pts = densify(np.array([[0.0, 0.0], [3.0, 4.0]]), 0.7)
        assert np.max(np.linalg.norm(np.diff(pts, axis=0), axis=1)) <= 0.7 + 1e-12
        np.testing.assert_allclose(pts[-1], [3.0, 4.0])

    @pytest.mark.parametrize("n_sides", [2, 4, 6])
    def test_racetrack_is_closed_with_requested_length(self, n_sides):
        spec = PathSpec(kind="racetrack", total_length=508.0, n_sides=n_sides, corner_radius=35.0)
        path = build_reference(spec, 10.0)
        assert path.total_length == pytest.approx(508.0, abs=0.05)
        np.testing.assert_allclose(path.points[-1], path.points[0], atol=1e-6)

    def test_racetrack_shorter_than_its_corners(self):
        spec = PathSpec(kind="racetrack", total_length=100.0, n_sides=2, corner_radius=35.0)
        with pytest.raises(DegenerateSpecError, match="shorter than the corners"):
            build_reference(spec, 10.0)

    def test_index_at(self):
        path = build_reference(PathSpec(kind="straight", points=[(0, 0), (10, 0)]), 10.0)
        assert path.index_at(0.0) == 0
        assert path.index_at(2.5) == 5
        assert path.index_at(1e6) == len(path) - 1
