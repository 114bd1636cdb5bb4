from gp_skrl.kernels.dictionary import Dictionary, ald_distance, sparsify
from gp_skrl.kernels.features import FeatureMap, multikernel_feature
from gp_skrl.kernels.gaussian import gaussian_gram, gaussian_kernel, scale_inputs

__all__ = [
    "Dictionary",
    "FeatureMap",
    "ald_distance",
    "gaussian_gram",
    "gaussian_kernel",
    "multikernel_feature",
    "scale_inputs",
    "sparsify",
]
