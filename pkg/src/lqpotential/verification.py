"""Certificates for candidate equilibria and potential functions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import (
    InformationStructure,
    PolicyProfile,
    check_policy,
    decision_dims,
    expected_agent_losses,
    random_policy,
)
from .optimizer import potential_value
from .potential import build_potential_problem, pseudo_gradient

__all__ = [
    "NashReport",
    "IdentityReport",
    "nash_stationarity_check",
    "unilateral_deviation_test",
    "certify_nash",
    "potential_identity_test",
]


@dataclass
class NashReport:
    """Stationarity and/or unilateral-deviation evidence for a candidate.

    Either part may be missing (``None``) when only one check was run.
    ``deviations`` holds ``(agent, trial, loss_change)`` tuples.
    """

    agent_grad_norms: list | None = None
    stationary: bool | None = None
    tol: float | None = None
    deviations: list = field(default_factory=list)
    deviation_verdict: bool | None = None
    radius: float | None = None
    slack: float | None = None
    worst_change: list | None = None

    @property
    def verdict(self):
        parts = [v for v in (self.stationary, self.deviation_verdict) if v is not None]
        return bool(parts) and all(parts)

    def merge(self, other):
        out = NashReport(**self.__dict__)
        for key, value in other.__dict__.items():
            if value is not None and value != []:
                setattr(out, key, value)
        return out

    def to_dict(self, include_deviations=False):
        out = {
            "verdict": self.verdict,
            "stationary": self.stationary,
            "agent_grad_norms": self.agent_grad_norms,
            "tol": self.tol,
            "deviation_verdict": self.deviation_verdict,
            "radius": self.radius,
            "slack": self.slack,
            "worst_loss_change": self.worst_change,
            "n_deviations": len(self.deviations),
        }
        if include_deviations:
            out["deviations"] = [
                {"agent": a, "trial": m, "loss_change": c} for a, m, c in self.deviations
            ]
        return out


def nash_stationarity_check(game, policy, tol=1e-3):
    """First-order test: every agent's own-decision gradient is below ``tol``."""
    check_policy(game, policy)
    grad = pseudo_gradient(game, policy)
    sizes = [game.horizon * q for q in decision_dims(game, policy.structure)]
    norms = [float(np.linalg.norm(part)) for part in np.split(grad, np.cumsum(sizes)[:-1])]
    return NashReport(agent_grad_norms=norms, stationary=all(v <= tol for v in norms), tol=tol)


def unilateral_deviation_test(game, policy, n_deviations=100, radius=0.1, seed=0, slack=1e-8):
    """Sample deviations of one agent at a time in an l-inf ball.

    A deviation "improves" when agent i's loss drops by more than
    ``slack * (1 + |J^i|)``. Agent i draws from ``default_rng([seed, i])``.
    """
    check_policy(game, policy)
    base = expected_agent_losses(game, policy)
    deviations = []
    worst = []
    for i in range(game.n_agents):
        rng = np.random.default_rng([seed, i])
        agent_worst = np.inf
        for m in range(n_deviations):
            decisions = list(policy.decisions)
            decisions[i] = decisions[i] + rng.uniform(-radius, radius, size=decisions[i].shape)
            change = float(expected_agent_losses(game, PolicyProfile(policy.structure, decisions))[i] - base[i])
            deviations.append((i, m, change))
            agent_worst = min(agent_worst, change)
        worst.append(float(agent_worst))
    ok = all(c >= -slack * (1.0 + abs(base[a])) for a, _, c in deviations)
    return NashReport(deviations=deviations, deviation_verdict=ok, radius=radius, slack=slack, worst_change=worst)


def certify_nash(game, policy, tol=1e-3, n_deviations=100, radius=0.1, seed=0, slack=1e-8):
    return nash_stationarity_check(game, policy, tol).merge(
        unilateral_deviation_test(game, policy, n_deviations, radius, seed, slack)
    )


@dataclass
class IdentityReport:
    passed: bool
    max_discrepancy: float
    n_trials: int
    tol: float
    discrepancies: list

    def to_dict(self):
        return {
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "n_trials": self.n_trials,
            "tol": self.tol,
        }


def potential_identity_test(game, problem=None, n_trials=20, seed=0, tol=1e-8):
    """Compare unilateral loss differences with potential differences.

    Each trial draws a decoupled-feedback profile, an agent and a
    replacement for that agent's gains (entries uniform in [-0.5, 0.5]) and
    records |dJ - dPi| / (1 + |dJ|).
    """
    structure = InformationStructure.DECOUPLED_STATE_FEEDBACK
    if problem is None:
        problem = build_potential_problem(game)
    rng = np.random.default_rng(seed)
    discrepancies = []
    for _ in range(n_trials):
        policy = random_policy(game, structure, rng)
        i = int(rng.integers(game.n_agents))
        decisions = list(policy.decisions)
        decisions[i] = rng.uniform(-0.5, 0.5, size=decisions[i].shape)
        deviated = PolicyProfile(structure, decisions)
        dJ = expected_agent_losses(game, policy)[i] - expected_agent_losses(game, deviated)[i]
        dPi = potential_value(problem, policy.flat()) - potential_value(problem, deviated.flat())
        discrepancies.append(float(abs(dJ - dPi) / (1.0 + abs(dJ))))
    worst = max(discrepancies) if discrepancies else 0.0
    return IdentityReport(worst <= tol, worst, n_trials, tol, discrepancies)
