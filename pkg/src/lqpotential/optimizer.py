"""Masked policy gradient on the potential with a Wolfe bisection line search."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _moments

__all__ = [
    "LineSearchError",
    "NotDescentDirection",
    "MaxBisectionExceeded",
    "Status",
    "DescentConfig",
    "DescentTrace",
    "potential_value",
    "potential_gradient",
    "potential_value_and_gradient",
    "fd_gradient",
    "wolfe_line_search",
    "run_policy_gradient",
    "zoutendijk_terms",
    "step_matrix",
]


class LineSearchError(RuntimeError):
    pass


class NotDescentDirection(LineSearchError):
    pass


class MaxBisectionExceeded(LineSearchError):
    pass


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_FAILED = "LineSearchFailed"


def _moments_of(problem, K):
    return _moments.propagate(
        problem.A, problem.B, K, np.zeros(K.shape[:2]), problem.init_mean, problem.init_cov
    )


def _value(problem, K, moments):
    means, covs = moments
    return float(
        _moments.quadratic_losses(
            means, covs, K, np.zeros(K.shape[:2]),
            problem.Q[None], problem.R[None], problem.M_bar[None], problem.d,
        )[0]
    )


def potential_value(problem, k):
    """Exact expected structured-control cost at compact gains ``k``."""
    K = problem.embed(k)
    return _value(problem, K, _moments_of(problem, K))


def potential_value_and_gradient(problem, k):
    K = problem.embed(k)
    moments = _moments_of(problem, K)
    G = _moments.feedback_gradient(
        problem.A, problem.B, K, problem.init_mean, problem.init_cov,
        problem.Q, problem.R, problem.M_bar, problem.d, moments=moments,
    )
    return _value(problem, K, moments), problem.compact(G)


def potential_gradient(problem, k):
    """Adjoint gradient of :func:`potential_value` restricted to the mask."""
    return potential_value_and_gradient(problem, k)[1]


def fd_gradient(problem, k, h_scale=1e-6):
    """Central-difference gradient with per-coordinate step h_scale*(1+|k_j|).

    ``problem`` may also be a plain callable ``f(k) -> float``.
    """
    f = problem if callable(problem) else (lambda x: potential_value(problem, x))
    k = np.atleast_1d(np.asarray(k, dtype=float))
    grad = np.empty_like(k)
    for j in range(k.size):
        h = h_scale * (1.0 + abs(k[j]))
        up, down = k.copy(), k.copy()
        up[j] += h
        down[j] -= h
        grad[j] = (f(up) - f(down)) / (2.0 * h)
    return grad


def _objective(problem):
    if callable(problem):
        return problem
    return lambda x: potential_value_and_gradient(problem, x)


def _bisection(fg, k, p, f0, g0, c1, c2, initial_trial, max_bisection):
    slope = float(g0 @ p)
    if not slope < 0:
        raise NotDescentDirection(f"directional derivative {slope:.3g} is not negative")
    lo, hi = 0.0, np.inf
    eta = float(initial_trial)
    for evals in range(1, max_bisection + 1):
        f_new, g_new = fg(k + eta * p)
        if not f_new <= f0 + c1 * eta * slope:
            hi = eta
            eta = 0.5 * (lo + hi)
        elif float(g_new @ p) < c2 * slope:
            lo = eta
            eta = 2.0 * eta if np.isinf(hi) else 0.5 * (lo + hi)
        else:
            return eta, evals, f_new, g_new
    raise MaxBisectionExceeded(f"no Wolfe step after {max_bisection} trials")


def wolfe_line_search(problem, k, p, c1=1e-4, c2=0.9, initial_trial=1.0, max_bisection=100):
    """Bisection search for a step satisfying both weak Wolfe conditions.

    ``problem`` is a :class:`StructuredLQProblem` or a callable returning
    ``(value, gradient)``. Returns ``(eta, evals)`` where ``evals`` counts
    trial evaluations.
    """
    if not 0 < c1 < c2 < 1:
        raise ValueError("need 0 < c1 < c2 < 1")
    fg = _objective(problem)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    f0, g0 = fg(k)
    eta, evals, _, _ = _bisection(fg, k, p, f0, np.asarray(g0), c1, c2, initial_trial, max_bisection)
    return eta, evals


@dataclass
class DescentConfig:
    lambdas: np.ndarray
    c1: float = 1e-4
    c2: float = 0.9
    grad_tol: float = 1e-3
    max_iters: int = 50_000
    max_bisection: int = 100
    initial_trial_step: float = 1.0
    initial_policy: np.ndarray | None = None

    def __post_init__(self):
        self.lambdas = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        if np.any(self.lambdas <= 0):
            raise ValueError("all step weights lambda must be positive")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        if self.grad_tol <= 0 or self.initial_trial_step <= 0:
            raise ValueError("grad_tol and initial_trial_step must be positive")
        if self.max_iters < 0 or self.max_bisection < 1:
            raise ValueError("max_iters must be >= 0 and max_bisection >= 1")


@dataclass
class DescentTrace:
    """Iterate history.

    ``potential``, ``grad_norm`` and ``zoutendijk`` have one entry per
    visited iterate k(0..m_final); ``eta`` and ``ls_evals`` one per step.
    """

    potential: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    zoutendijk: list = field(default_factory=list)
    eta: list = field(default_factory=list)
    ls_evals: list = field(default_factory=list)
    status: Status | None = None
    message: str = ""

    @property
    def n_iter(self):
        return len(self.eta)

    def rows(self):
        for m in range(self.n_iter):
            yield {
                "iter": m,
                "potential": self.potential[m],
                "grad_norm": self.grad_norm[m],
                "eta": self.eta[m],
                "ls_evals": self.ls_evals[m],
                "zoutendijk": self.zoutendijk[m],
            }

    def write_csv(self, path):
        """One row per accepted step, values taken at the iterate it left."""
        columns = ["iter", "potential", "grad_norm", "eta", "ls_evals", "zoutendijk"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in self.rows():
                writer.writerow([row["iter"], *(repr(float(row[c])) for c in columns[1:4]), row["ls_evals"], repr(float(row["zoutendijk"]))])

    def plot_data(self):
        return {
            "iters": list(range(len(self.potential))),
            "potential": [float(v) for v in self.potential],
            "grad_norm": [float(v) for v in self.grad_norm],
        }


def step_matrix(problem, lambdas):
    """Diagonal of the per-agent step weighting for compact gains."""
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if lambdas.shape != (problem.n_agents,):
        raise ValueError(f"need {problem.n_agents} step weights, got {lambdas.size}")
    return np.repeat(lambdas, [problem.horizon * m for m in problem.agent_state_dims])


def _zoutendijk(g, lam):
    scaled = lam * g
    norm = np.linalg.norm(scaled)
    return 0.0 if norm == 0 else float((g @ scaled / norm) ** 2)


def run_policy_gradient(problem, config):
    """Iterate k <- k - eta * Lambda * grad with Wolfe steps.

    Returns ``(k_final, trace)``. A failed line search ends the run with
    status ``LineSearchFailed``; the partial trace is still returned.
    """
    lam = step_matrix(problem, config.lambdas)
    if config.initial_policy is None:
        k = np.zeros(problem.n_params)
    else:
        k = np.asarray(config.initial_policy, dtype=float).copy()
        if k.shape != (problem.n_params,):
            raise ValueError(f"initial policy has shape {k.shape}, expected {(problem.n_params,)}")
    fg = _objective(problem)
    f, g = fg(k)
    trace = DescentTrace()
    while True:
        gnorm = float(np.linalg.norm(g))
        trace.potential.append(f)
        trace.grad_norm.append(gnorm)
        trace.zoutendijk.append(_zoutendijk(g, lam))
        if gnorm < config.grad_tol:
            trace.status = Status.CONVERGED
            break
        if trace.n_iter >= config.max_iters:
            trace.status = Status.MAX_ITERS
            break
        p = -lam * g
        try:
            eta, evals, f, g = _bisection(
                fg, k, p, f, g, config.c1, config.c2, config.initial_trial_step, config.max_bisection
            )
        except LineSearchError as exc:
            trace.status = Status.LINE_SEARCH_FAILED
            trace.message = str(exc)
            break
        k = k + eta * p
        trace.eta.append(eta)
        trace.ls_evals.append(evals)
    return k, trace


def zoutendijk_terms(trace):
    """Summands (g' Lambda g / ||Lambda g||)^2 recorded along the run."""
    if not trace.zoutendijk:
        raise ValueError("empty trace")
    return np.asarray(trace.zoutendijk, dtype=float)
