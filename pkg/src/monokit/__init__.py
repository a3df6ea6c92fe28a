"""Finite-dimensional toolkit for monotone sets in ``E x E*``.

Fitzpatrick functions, the P/F/G transforms, inf-convolutions with the
quadratic forms, quasidensity certificates and adjoints of monotone
linear subspaces.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetError, ContractError, DimensionError, MonokitError, SolverError, UnsupportedError,
)
from .spaces import DualPoint, PDPoint, Space, TransformValue  # noqa: E402
from .operators import FiniteGraph, LinearOp, PwaSubdiff, is_maximal_minty, is_monotone, resolve  # noqa: E402
from .transforms import (  # noqa: E402
    InfConvSpec, evaluate_transform, f_transform, fitzpatrick, fitzpatrick_conjugate, g_transform,
    gossez_membership, inf_convolution, p_transform,
)
from .quasidense import (  # noqa: E402
    equivalence_certificate, eqthm_report, quasidensity_gap, solve_surjectivity, suffthm_iterate,
)
from .adjoint import LinSubspace, adjoint_subspace, brezis_browder_check, double_adjoint  # noqa: E402

__all__ = [
    "__version__", "MonokitError", "ContractError", "DimensionError", "UnsupportedError", "SolverError",
    "BudgetError", "Space", "PDPoint", "DualPoint", "TransformValue", "FiniteGraph", "LinearOp",
    "PwaSubdiff", "is_monotone", "is_maximal_minty", "resolve", "fitzpatrick", "fitzpatrick_conjugate",
    "p_transform", "f_transform", "g_transform", "evaluate_transform", "gossez_membership",
    "InfConvSpec", "inf_convolution", "quasidensity_gap", "suffthm_iterate", "equivalence_certificate",
    "eqthm_report", "solve_surjectivity", "LinSubspace", "adjoint_subspace", "double_adjoint",
    "brezis_browder_check",
]
