"""Submodular function minimization through sparse Lovász subgradient maintenance."""

from .algorithms import (RunReport, approx_sfm, exact_sfm, mincut_sgd, multiplicative_approx,
                         sparse_approx_sfm, sparse_exact_sfm)
from .lovasz import (SparseVector, best_prefix_set, consistent_permutation, full_subgradient,
                     lovasz_value)
from .oracle import (ContractViolation, CountingOracle, CutFunction, DomainError, InstanceFormatError,
                     LowerBoundFunction, ModularFunction, TableFunction, load_instance,
                     lower_bound_instance, random_cut_instance, random_table_instance)

__all__ = [
    "RunReport", "approx_sfm", "exact_sfm", "mincut_sgd", "multiplicative_approx", "sparse_approx_sfm",
    "sparse_exact_sfm", "SparseVector", "best_prefix_set", "consistent_permutation", "full_subgradient",
    "lovasz_value", "ContractViolation", "CountingOracle", "CutFunction", "DomainError",
    "InstanceFormatError", "LowerBoundFunction", "ModularFunction", "TableFunction", "load_instance",
    "lower_bound_instance", "random_cut_instance", "random_table_instance",
]
