from gp_skrl.gp.hyperparams import fit_hyperparams, marginal_log_likelihood
from gp_skrl.gp.regression import (
    GPHyperparams,
    GPModel,
    GPTrainingSet,
    channel_matrix,
    fitc_posterior,
    full_gp_posterior,
    gp_mean_jacobian,
    se_kernel,
)
from gp_skrl.gp.residuals import (
    LearnedDynamics,
    LearnedJacobians,
    fit_gp_model,
    held_out_residual_rms,
    inducing_set,
    learned_jacobians,
    residual_target,
)

__all__ = [
    "GPHyperparams",
    "GPModel",
    "GPTrainingSet",
    "LearnedDynamics",
    "LearnedJacobians",
    "channel_matrix",
    "fit_gp_model",
    "fit_hyperparams",
    "fitc_posterior",
    "full_gp_posterior",
    "gp_mean_jacobian",
    "held_out_residual_rms",
    "inducing_set",
    "learned_jacobians",
    "marginal_log_likelihood",
    "residual_target",
    "se_kernel",
]
