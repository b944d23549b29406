"""Potential finite-horizon LQ games: classification, potential construction
and Nash equilibria by masked policy gradient."""

from .estimator import PotentialGameSolver
from .examples import make_cournot, make_formation, make_scalar_coupled, reference_cournot_params
from .game import (
    GameSpecError,
    InformationStructure,
    LQGame,
    PolicyError,
    PolicyProfile,
    agent_losses_at,
    closed_loop_maps,
    expected_agent_losses,
    monte_carlo_losses,
    simulate_trajectory,
    validate_game,
)
from .optimizer import (
    DescentConfig,
    DescentTrace,
    fd_gradient,
    potential_gradient,
    potential_value,
    run_policy_gradient,
    wolfe_line_search,
    zoutendijk_terms,
)
from .potential import (
    ConditionReport,
    StructuredLQProblem,
    build_potential_problem,
    check_c1_c2,
    check_identical_interest,
    jacobian_symmetry_check,
    pseudo_gradient,
)
from .verification import (
    NashReport,
    nash_stationarity_check,
    potential_identity_test,
    unilateral_deviation_test,
)

__all__ = [
    "ConditionReport",
    "DescentConfig",
    "DescentTrace",
    "GameSpecError",
    "InformationStructure",
    "LQGame",
    "NashReport",
    "PolicyError",
    "PolicyProfile",
    "PotentialGameSolver",
    "StructuredLQProblem",
    "agent_losses_at",
    "build_potential_problem",
    "check_c1_c2",
    "check_identical_interest",
    "closed_loop_maps",
    "expected_agent_losses",
    "fd_gradient",
    "jacobian_symmetry_check",
    "make_cournot",
    "make_formation",
    "make_scalar_coupled",
    "monte_carlo_losses",
    "nash_stationarity_check",
    "potential_gradient",
    "potential_identity_test",
    "potential_value",
    "pseudo_gradient",
    "reference_cournot_params",
    "run_policy_gradient",
    "simulate_trajectory",
    "unilateral_deviation_test",
    "validate_game",
    "wolfe_line_search",
    "zoutendijk_terms",
]

__version__ = "0.1.0"
