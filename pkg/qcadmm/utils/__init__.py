"""
Utility modules shared by the qcadmm services.
"""
from .linalg_utils import as_agent_matrix, min_norm_solve, soft_threshold, symmetric_eigenvalues
from .log_utils import configure_logging
from .parse_utils import parse_float_list, parse_int_list
from .prox_utils import accelerated_proximal_gradient, gradient_mapping_norm

__all__ = [
    "as_agent_matrix",
    "min_norm_solve",
    "soft_threshold",
    "symmetric_eigenvalues",
    "configure_logging",
    "parse_float_list",
    "parse_int_list",
    "accelerated_proximal_gradient",
    "gradient_mapping_norm",
]
