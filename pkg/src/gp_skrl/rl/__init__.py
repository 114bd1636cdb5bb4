from gp_skrl.rl.approximators import (
    ActorCriticWeights,
    KernelPolicy,
    actor_eval,
    critic_eval,
    target_action,
    target_costate,
)
from gp_skrl.rl.cost import barrier, barrier_gradient, smoothed_barrier, stage_cost
from gp_skrl.rl.policies import TrainedPolicies, make_policy, sample_states, train_control_policy, train_policies
from gp_skrl.rl.samples import RLSampleSet, build_sample_set, sample_error_box
from gp_skrl.rl.trainer import (
    DualPolicies,
    TraceRow,
    TrainingResult,
    batch_update,
    policy_iteration,
    require_converged,
    ridge_solve,
    train_dual_policies,
    write_trace_csv,
)

__all__ = [
    "ActorCriticWeights",
    "DualPolicies",
    "KernelPolicy",
    "RLSampleSet",
    "TraceRow",
    "TrainedPolicies",
    "TrainingResult",
    "actor_eval",
    "barrier",
    "barrier_gradient",
    "batch_update",
    "build_sample_set",
    "critic_eval",
    "policy_iteration",
    "require_converged",
    "make_policy",
    "ridge_solve",
    "sample_error_box",
    "sample_states",
    "smoothed_barrier",
    "stage_cost",
    "target_action",
    "target_costate",
    "train_control_policy",
    "train_dual_policies",
    "train_policies",
    "write_trace_csv",
]
