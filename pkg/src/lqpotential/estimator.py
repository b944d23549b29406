"""Estimator-style front end for computing Nash equilibria of potential LQ games."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .game import InformationStructure, policy_from_flat, simulate_trajectory
from .optimizer import DescentConfig, Status, potential_value, run_policy_gradient
from .potential import build_potential_problem
from .validation import check_game, check_lambdas, check_potential_game


class PotentialGameSolver(BaseEstimator):
    """Fit decoupled feedback gains by masked gradient descent on the potential.

    Parameters
    ----------
    lambdas : array-like of shape (n_agents,), default=None
        Per-agent step weights; ``None`` means all ones.
    c1, c2 : float
        Wolfe sufficient-decrease and curvature constants.
    grad_tol : float
        Stop once the potential gradient norm drops below this.
    max_iters, max_bisection : int
    initial_trial_step : float
    init : array-like of shape (horizon * state_dim,), default=None
        Starting gains; zeros when omitted.
    tol : float
        Tolerance of the C1/C2 agreement check run before descending.

    Attributes
    ----------
    problem_ : StructuredLQProblem
    gains_ : ndarray of shape (horizon * state_dim,)
    policy_ : PolicyProfile
    trace_ : DescentTrace
    status_ : Status
    n_iter_ : int
    potential_ : float
    """

    def __init__(
        self,
        lambdas=None,
        c1=1e-4,
        c2=0.9,
        grad_tol=1e-3,
        max_iters=50_000,
        max_bisection=100,
        initial_trial_step=1.0,
        init=None,
        tol=1e-9,
    ):
        self.lambdas = lambdas
        self.c1 = c1
        self.c2 = c2
        self.grad_tol = grad_tol
        self.max_iters = max_iters
        self.max_bisection = max_bisection
        self.initial_trial_step = initial_trial_step
        self.init = init
        self.tol = tol

    def fit(self, game, y=None):
        game = check_potential_game(check_game(game))
        self.game_ = game
        self.problem_ = build_potential_problem(game, self.tol)
        config = DescentConfig(
            lambdas=check_lambdas(self.lambdas, game.n_agents),
            c1=self.c1,
            c2=self.c2,
            grad_tol=self.grad_tol,
            max_iters=self.max_iters,
            max_bisection=self.max_bisection,
            initial_trial_step=self.initial_trial_step,
            initial_policy=None if self.init is None else np.asarray(self.init, dtype=float),
        )
        self.gains_, self.trace_ = run_policy_gradient(self.problem_, config)
        self.policy_ = policy_from_flat(game, InformationStructure.DECOUPLED_STATE_FEEDBACK, self.gains_)
        self.status_ = self.trace_.status
        self.n_iter_ = self.trace_.n_iter
        self.potential_ = self.trace_.potential[-1]
        return self

    @property
    def converged_(self):
        check_is_fitted(self, "status_")
        return self.status_ is Status.CONVERGED

    def predict(self, X, t=0):
        """Joint actions u_t = -K_t x for each row of ``X`` (states at time ``t``)."""
        check_is_fitted(self, "gains_")
        X = check_array(X)
        if X.shape[1] != self.problem_.state_dim:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.problem_.state_dim}")
        if not 0 <= t < self.problem_.horizon:
            raise ValueError(f"t must lie in [0, {self.problem_.horizon})")
        return -X @ self.problem_.embed(self.gains_)[t].T

    def rollout(self, x0):
        check_is_fitted(self, "policy_")
        return simulate_trajectory(self.game_, self.policy_, x0)

    def score(self, game=None, y=None):
        """Negative potential of the fitted gains (higher is better)."""
        check_is_fitted(self, "gains_")
        problem = self.problem_ if game is None else build_potential_problem(check_game(game), self.tol)
        return -potential_value(problem, self.gains_)
