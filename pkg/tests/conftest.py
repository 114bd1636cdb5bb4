"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from gp_skrl.control.base import ControlDecision, Controller
from gp_skrl.dynamics.reference import ReferencePath, build_reference
from gp_skrl.kernels.dictionary import sparsify
from gp_skrl.planner.planner import nearest_reference
from gp_skrl.rl.approximators import ActorCriticWeights, KernelPolicy
from gp_skrl.runner.config import load_run_config
from gp_skrl.runner.store import ArtifactStore
from gp_skrl.schemas.config import KernelConfig, RunConfig
from gp_skrl.schemas.scenarios import ObstacleSpec, PathSpec, Scenario

QUIET = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


class HoldController(Controller):
    """Zero input; tracks the nearest path point only to report a reference."""

    def __init__(self, path: ReferencePath) -> None:
        self.path = path
        self.index = 0

    def reset(self) -> None:
        self.index = 0

    def control(self, state: np.ndarray, time: float) -> ControlDecision:
        ref, self.index = nearest_reference(state[4:6], self.path, start=self.index, window=200, monotone=True)
        return ControlDecision(control=np.zeros(2), reference=ref, progress=ref.s)


@pytest.fixture
def straight_scenario() -> Scenario:
    return Scenario(
        name="straight_test",
        start=(0.0, 0.0),
        goal=(100.0, 0.0),
        path=PathSpec(kind="straight", points=[(0.0, 0.0), (100.0, 0.0)]),
        noise_variance=QUIET,
    )


@pytest.fixture
def blocked_scenario() -> Scenario:
    return Scenario(
        name="blocked_test",
        start=(0.0, 0.0),
        goal=(120.0, 0.0),
        path=PathSpec(kind="straight", points=[(0.0, 0.0), (120.0, 0.0)]),
        noise_variance=QUIET,
        obstacles=[
            ObstacleSpec(
                obstacle_id="block",
                kind="polygon",
                vertices=[(50.0, -2.0), (56.0, -2.0), (56.0, 4.0), (50.0, 4.0)],
            )
        ],
        require_safe=True,
    )


@pytest.fixture
def hold_controller():
    def make(scenario: Scenario) -> HoldController:
        return HoldController(build_reference(scenario.path, scenario.v_max))

    return make


@pytest.fixture
def plumbing_cfg() -> RunConfig:
    """Few samples and thresholds that any first iteration meets: training finishes in one pass."""
    return load_run_config(
        overrides=[
            "training.n_samples=200",
            "training.sigma_a=1e12",
            "training.sigma_c=1e12",
            "adaptation.max_iters=2",
        ]
    )


@pytest.fixture
def small_cfg() -> RunConfig:
    return load_run_config(overrides=["training.n_samples=300", "training.max_iters=60"])


@pytest.fixture
def zero_policy() -> KernelPolicy:
    """Actor and critic weights of zero: u = 0 for every error state."""
    rng = np.random.default_rng(7)
    cfg = KernelConfig(input_scale=[6.0, 6.0, 1.0, 6.0, 3.0, 3.0])
    dictionary = sparsify(rng.uniform(-1.0, 1.0, size=(40, 6)), cfg)
    n_features = len(cfg.widths) * len(dictionary)
    return KernelPolicy(dictionary, cfg.widths, ActorCriticWeights.zeros(n_features), provenance={"label": "zero"})


@pytest.fixture
def store(tmp_path) -> ArtifactStore:
    return ArtifactStore(tmp_path / "store")
