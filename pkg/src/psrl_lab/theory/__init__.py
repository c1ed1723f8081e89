"""Tabular oracles and numerical certification of the estimation bounds."""

from .checks import (
    IdentityLimitReport,
    NuisanceReport,
    SnappedQReport,
    SuiteResult,
    TheoremViolation,
    UpperBoundReport,
    identity_limit,
    nuisance_sensitivity,
    run_suite,
    snapped_q,
    verify_upper_bound,
)
from .mdp import StateEstimator, TabularMdp, random_grid_mdp
from .solve import (
    ValueTables,
    bellman_backup,
    optimal_values,
    policy_evaluation,
    policy_iteration,
    value_iteration,
)

__all__ = [
    "IdentityLimitReport",
    "NuisanceReport",
    "SnappedQReport",
    "StateEstimator",
    "SuiteResult",
    "TabularMdp",
    "TheoremViolation",
    "UpperBoundReport",
    "ValueTables",
    "bellman_backup",
    "identity_limit",
    "nuisance_sensitivity",
    "optimal_values",
    "policy_evaluation",
    "policy_iteration",
    "random_grid_mdp",
    "run_suite",
    "snapped_q",
    "value_iteration",
    "verify_upper_bound",
]
