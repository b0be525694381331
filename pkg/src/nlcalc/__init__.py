"""Discrete nonlocal vector calculus with general three-point kernels, and linear
state-based peridynamics built on it."""

from .discretization import (Grid, OnePointField, Subdomain, TwoPointField, build_uniform_grid, dot1, dot2,
                             inner_product_one_point, inner_product_two_point)
from .errors import ConfigurationError, DimensionError, SingularConfigurationError
from .kernels import (AlphaKernel, BetaKernel, GeneralKernel, LambdaAlphaKernel, alpha_embed, beta_embed,
                      check_divergence_kernel, lambda_alpha_embed, peridynamic_alpha)
from .peridyn import PeridynamicMaterial, SparseOperator, apply_L_direct, apply_L_kernel, apply_L_operator, assemble_C

__all__ = [
    "Grid", "OnePointField", "TwoPointField", "Subdomain", "build_uniform_grid", "dot1", "dot2",
    "inner_product_one_point", "inner_product_two_point",
    "ConfigurationError", "DimensionError", "SingularConfigurationError",
    "GeneralKernel", "AlphaKernel", "BetaKernel", "LambdaAlphaKernel", "alpha_embed", "beta_embed",
    "lambda_alpha_embed", "check_divergence_kernel", "peridynamic_alpha",
    "PeridynamicMaterial", "SparseOperator", "assemble_C", "apply_L_direct", "apply_L_kernel", "apply_L_operator",
]
