"""Batch sparse-kernel actor-critic policy iteration."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from scipy.linalg import cho_solve

from gp_skrl.errors import EmptyDataError, NoConvergenceError
from gp_skrl.kernels.features import FeatureMap
from gp_skrl.linalg import jittered_cholesky
from gp_skrl.rl.approximators import ActorCriticWeights, target_action, target_costate
from gp_skrl.rl.cost import barrier_gradient
from gp_skrl.rl.samples import RLSampleSet
from gp_skrl.schemas.config import CostConfig, TrainingConfig

TRACE_FIELDS = ["iteration", "delta_actor", "delta_critic", "fit_residual", "target_drift", "wall_time"]


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    delta_actor: float
    delta_critic: float
    fit_residual: float
    target_drift: float
    wall_time: float


@dataclass
class TrainingResult:
    weights: ActorCriticWeights
    trace: list[TraceRow] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)


@dataclass(frozen=True)
class DualPolicies:
    """Control policy (mu = 0) and planning policy (mu > 0) over one dictionary and model."""

    pi0: TrainingResult
    pi1: TrainingResult


class RidgeSolver:
    """Cached Cholesky factor of Phi'Phi + rho I for repeated right-hand sides."""

    def __init__(self, phi: np.ndarray, rho: float) -> None:
        self.phi = phi
        gram = phi.T @ phi
        self._factor = jittered_cholesky(gram + rho * np.eye(gram.shape[0]), what="ridge normal matrix")

    def solve(self, targets: np.ndarray) -> np.ndarray:
        return cho_solve((self._factor, True), self.phi.T @ targets)


def ridge_solve(phi: np.ndarray, targets: np.ndarray, rho: float) -> np.ndarray:
    """W = (Phi'Phi + rho I)^-1 Phi' T."""
    return RidgeSolver(phi, rho).solve(targets)


@dataclass(frozen=True, eq=False)
class BatchTargets:
    actions: np.ndarray
    costates: np.ndarray


def batch_targets(
    samples: RLSampleSet,
    weights: ActorCriticWeights,
    features: FeatureMap,
    cost: CostConfig,
    training: TrainingConfig,
    *,
    phi: np.ndarray | None = None,
) -> BatchTargets:
    """Roll every sample one step under the current actor, then form target actions and costates.

    Sample sets on a learned residual are re-linearised at the actor's controls first.
    """
    phi = features(samples.X) if phi is None else phi
    u_hat = phi @ weights.W_a
    samples = samples.relinearized(u_hat)
    x_next = np.einsum("mij,mj->mi", samples.A, samples.X) + np.einsum("mij,mj->mi", samples.B, u_hat)
    lam_next = features(x_next) @ weights.W_c
    actions = target_action(lam_next, samples.B, cost)
    costates = target_costate(samples.X, barrier_gradient(samples.X, training.barrier_eps), samples.A, lam_next, cost)
    return BatchTargets(actions, costates)


def batch_update(
    samples: RLSampleSet,
    weights: ActorCriticWeights,
    features: FeatureMap,
    cost: CostConfig,
    training: TrainingConfig,
    *,
    phi: np.ndarray | None = None,
    solvers: tuple[RidgeSolver, RidgeSolver] | None = None,
) -> tuple[ActorCriticWeights, BatchTargets]:
    """One ridge refit of actor and critic against targets built from the current weights."""
    if len(samples) == 0:
        raise EmptyDataError("batch_update needs at least one sample")
    phi = features(samples.X) if phi is None else phi
    actor_solver, critic_solver = solvers or (RidgeSolver(phi, training.rho_a), RidgeSolver(phi, training.rho_c))
    targets = batch_targets(samples, weights, features, cost, training, phi=phi)
    new = ActorCriticWeights(actor_solver.solve(targets.actions), critic_solver.solve(targets.costates))
    return new, targets


def policy_iteration(
    samples: RLSampleSet,
    features: FeatureMap,
    cost: CostConfig,
    training: TrainingConfig,
    *,
    initial: ActorCriticWeights | None = None,
    max_iters: int | None = None,
    label: str = "policy",
) -> TrainingResult:
    """Iterate batch_update until both squared weight deltas fall below their thresholds.

    Non-convergence is reported on the result; use ``require_converged`` to turn it into an error.
    """
    if len(samples) == 0:
        raise EmptyDataError("policy iteration needs a non-empty sample set")
    if len(samples) < features.dim:
        logger.warning("{}: {} samples for {} features; the ridge term carries the fit", label, len(samples), features.dim)
    cap = max_iters or training.max_iters
    phi = features(samples.X)
    solvers = (RidgeSolver(phi, training.rho_a), RidgeSolver(phi, training.rho_c))
    weights = initial or ActorCriticWeights.zeros(features.dim)
    prev_costates: np.ndarray | None = None
    result = TrainingResult(weights=weights)
    start = time.perf_counter()

    for i in range(1, cap + 1):
        new, targets = batch_update(samples, weights, features, cost, training, phi=phi, solvers=solvers)
        d_actor, d_critic = new.deltas(weights)
        fit = float(np.mean(np.linalg.norm(phi @ new.W_c - targets.costates, axis=1)))
        drift = (
            float("nan")
            if prev_costates is None
            else float(np.mean(np.linalg.norm(targets.costates - prev_costates, axis=1)))
        )
        result.trace.append(TraceRow(i, d_actor, d_critic, fit, drift, time.perf_counter() - start))
        weights, prev_costates = new, targets.costates
        result.weights = weights
        logger.debug("{} iter {}: dW_a={:.3e} dW_c={:.3e} fit={:.3e}", label, i, d_actor, d_critic, fit)
        if d_actor <= training.sigma_a and d_critic <= training.sigma_c:
            result.converged = True
            break

    if result.converged:
        logger.info("{} converged after {} iterations", label, result.iterations)
    else:
        last = result.trace[-1]
        logger.warning(
            "{} hit the cap of {} iterations (dW_a={:.3e}, dW_c={:.3e})", label, cap, last.delta_actor, last.delta_critic
        )
    return result


def require_converged(result: TrainingResult, *, label: str = "policy", trace_path: str | None = None) -> TrainingResult:
    if not result.converged:
        raise NoConvergenceError(
            f"{label} did not converge within {result.iterations} iterations", result=result, trace_path=trace_path
        )
    return result


def train_dual_policies(
    samples: RLSampleSet,
    features: FeatureMap,
    cost: CostConfig,
    training: TrainingConfig,
    *,
    initial: DualPolicies | None = None,
    max_iters: int | None = None,
) -> DualPolicies:
    """pi0 with the barrier switched off, pi1 with the configured barrier weight."""
    control_cost = cost.model_copy(update={"mu": 0.0})
    pi0 = policy_iteration(
        samples,
        features,
        control_cost,
        training,
        initial=initial.pi0.weights if initial else None,
        max_iters=max_iters,
        label="control policy",
    )
    pi1 = policy_iteration(
        samples,
        features,
        cost,
        training,
        initial=initial.pi1.weights if initial else None,
        max_iters=max_iters,
        label="planning policy",
    )
    return DualPolicies(pi0=pi0, pi1=pi1)


def write_trace_csv(trace: list[TraceRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for row in trace:
            writer.writerow([row.iteration, *(repr(float(getattr(row, f))) for f in TRACE_FIELDS[1:])])
    return path
