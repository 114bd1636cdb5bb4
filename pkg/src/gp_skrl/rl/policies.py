"""From a run configuration to trained, deployable control and planning policies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from gp_skrl.gp.regression import GPModel
from gp_skrl.gp.residuals import LearnedDynamics
from gp_skrl.kernels.dictionary import Dictionary, sparsify
from gp_skrl.kernels.features import FeatureMap
from gp_skrl.rl.approximators import KernelPolicy
from gp_skrl.rl.samples import RLSampleSet, build_sample_set, sample_error_box
from gp_skrl.rl.trainer import DualPolicies, TrainingResult, policy_iteration, train_dual_policies
from gp_skrl.rng import stream
from gp_skrl.schemas.config import CostConfig, RunConfig
from gp_skrl.schemas.scenarios import Scenario


@dataclass(eq=False)
class TrainedPolicies:
    dictionary: Dictionary
    features: FeatureMap
    samples: RLSampleSet
    results: DualPolicies
    pi0: KernelPolicy
    pi1: KernelPolicy

    @property
    def converged(self) -> bool:
        return self.results.pi0.converged and self.results.pi1.converged


def make_policy(
    dictionary: Dictionary, cfg: RunConfig, result: TrainingResult, cost: CostConfig, *, label: str
) -> KernelPolicy:
    provenance = {
        "label": label,
        "cost": cost.model_dump(mode="json"),
        "training": cfg.training.model_dump(mode="json"),
        "kernel": cfg.rl_kernel().model_dump(mode="json"),
        "iterations": result.iterations,
        "converged": result.converged,
    }
    return KernelPolicy(
        dictionary, cfg.kernel.widths, result.weights, box=cfg.box, bounds=cfg.bounds, provenance=provenance
    )


def sample_states(cfg: RunConfig) -> np.ndarray:
    """The training error states for ``cfg.seed``; identical across calls."""
    return sample_error_box(stream(cfg.seed, "rl-samples"), cfg.box, cfg.training.n_samples)


def _training_problem(
    cfg: RunConfig, scenario: Scenario, model: GPModel | None
) -> tuple[Dictionary, FeatureMap, RLSampleSet]:
    X = sample_states(cfg)
    dictionary = sparsify(X, cfg.rl_kernel())
    features = FeatureMap(dictionary, cfg.kernel.widths)
    logger.info("RL dictionary: {} elements, {} features, {} samples", len(dictionary), features.dim, len(X))
    dynamics = LearnedDynamics(scenario.nominal_params, scenario.sample_time, model)
    samples = build_sample_set(
        X, dynamics, scenario.v_max, linearization=cfg.training.linearization, bounds=cfg.bounds
    )
    return dictionary, features, samples


def train_policies(
    cfg: RunConfig,
    scenario: Scenario,
    model: GPModel | None = None,
    *,
    max_iters: int | None = None,
) -> TrainedPolicies:
    """Sample error states, sparsify them, linearise the (learned) model and train pi0 and pi1."""
    dictionary, features, samples = _training_problem(cfg, scenario, model)
    results = train_dual_policies(samples, features, cfg.cost, cfg.training, max_iters=max_iters)
    control_cost = cfg.cost.model_copy(update={"mu": 0.0})
    return TrainedPolicies(
        dictionary=dictionary,
        features=features,
        samples=samples,
        results=results,
        pi0=make_policy(dictionary, cfg, results.pi0, control_cost, label="pi0"),
        pi1=make_policy(dictionary, cfg, results.pi1, cfg.cost, label="pi1"),
    )


def train_control_policy(
    cfg: RunConfig,
    scenario: Scenario,
    model: GPModel | None = None,
    *,
    max_iters: int | None = None,
) -> KernelPolicy:
    """pi0 alone, for runs without obstacles."""
    dictionary, features, samples = _training_problem(cfg, scenario, model)
    control_cost = cfg.cost.model_copy(update={"mu": 0.0})
    result = policy_iteration(samples, features, control_cost, cfg.training, max_iters=max_iters, label="control policy")
    return make_policy(dictionary, cfg, result, control_cost, label="pi0")
