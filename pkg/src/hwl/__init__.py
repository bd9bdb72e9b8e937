"""Two-weight dyadic Haar analysis at desk scale: operator norms between
weighted L2 spaces, testing conditions with best constants, and numeric
verification of the Bellman-function certificates."""

__version__ = "0.1.0"

from .dyadic import (
    DyadicIndex,
    DyadicModel,
    LeafFunction,
    Weight,
    AlphaCoefficients,
    averages,
    haar_function,
    haar_coefficients,
    disbalanced_haar,
    alpha_coefficients,
)
from .operators import (
    SignPattern,
    apply_T_sigma,
    apply_weighted_T_sigma,
    apply_T0,
    kernel_matrix,
    square_function,
    four_sum_decomposition,
    embedding_form,
    bilinear_T0_form,
)

__all__ = [
    "__version__",
    "DyadicIndex",
    "DyadicModel",
    "LeafFunction",
    "Weight",
    "AlphaCoefficients",
    "averages",
    "haar_function",
    "haar_coefficients",
    "disbalanced_haar",
    "alpha_coefficients",
    "SignPattern",
    "apply_T_sigma",
    "apply_weighted_T_sigma",
    "apply_T0",
    "kernel_matrix",
    "square_function",
    "four_sum_decomposition",
    "embedding_form",
    "bilinear_T0_form",
]
