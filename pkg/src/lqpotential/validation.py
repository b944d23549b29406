"""Input validation helpers shared by the estimator and the CLI."""

from collections.abc import Mapping
from os import PathLike

import numpy as np

from .game import GameSpecError, LQGame, check_policy, validate_game

__all__ = ["check_game", "check_policy", "check_lambdas", "check_potential_game"]


def check_game(game):
    """Return a validated :class:`LQGame` from a game, mapping or JSON path."""
    if isinstance(game, (str, PathLike)):
        from .io import load_game

        return load_game(game)
    if isinstance(game, Mapping):
        return validate_game(game)
    if isinstance(game, LQGame):
        return validate_game(game)
    raise TypeError(f"expected an LQGame, mapping or path, got {type(game).__name__}")


def check_lambdas(lambdas, n_agents):
    if lambdas is None:
        return np.ones(n_agents)
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if lam.size == 1:
        lam = np.full(n_agents, float(lam[0]))
    if lam.shape != (n_agents,):
        raise ValueError(f"expected {n_agents} step weights, got {lam.size}")
    if np.any(lam <= 0):
        raise ValueError("step weights must be positive")
    return lam


def check_potential_game(game):
    """Raise unless ``game`` has decoupled dynamics with a declared partition."""
    if not game.agent_state_dims:
        raise GameSpecError("game declares no state partition")
    if not game.decoupled:
        raise GameSpecError("game dynamics are not decoupled")
    return game
