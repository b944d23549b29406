"""Finite-horizon LQ games: data model, validation, simulation and losses."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _moments

__all__ = [
    "GameSpecError",
    "PolicyError",
    "InformationStructure",
    "LQGame",
    "PolicyProfile",
    "Trajectory",
    "ClosedLoopMaps",
    "eps_psd",
    "validate_game",
    "check_policy",
    "agent_blocks",
    "decision_dims",
    "zero_policy",
    "random_policy",
    "policy_from_flat",
    "embed_policy",
    "simulate_trajectory",
    "agent_losses_at",
    "expected_agent_losses",
    "monte_carlo_losses",
    "closed_loop_maps",
]


class GameSpecError(ValueError):
    """Raised when a game description violates its invariants."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class PolicyError(ValueError):
    """Raised when a policy does not fit the game it is played in."""


class InformationStructure(str, Enum):
    OPEN_LOOP = "OpenLoop"
    FULL_STATE_FEEDBACK = "FullStateFeedback"
    DECOUPLED_STATE_FEEDBACK = "DecoupledStateFeedback"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        aliases = {
            "openloop": cls.OPEN_LOOP,
            "open": cls.OPEN_LOOP,
            "i": cls.OPEN_LOOP,
            "fullstatefeedback": cls.FULL_STATE_FEEDBACK,
            "full": cls.FULL_STATE_FEEDBACK,
            "ii": cls.FULL_STATE_FEEDBACK,
            "decoupledstatefeedback": cls.DECOUPLED_STATE_FEEDBACK,
            "decoupled": cls.DECOUPLED_STATE_FEEDBACK,
            "iii": cls.DECOUPLED_STATE_FEEDBACK,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown information structure {value!r}") from None

    @property
    def is_feedback(self):
        return self is not InformationStructure.OPEN_LOOP


@dataclass
class LQGame:
    """A finite-horizon general-sum LQ game with scalar actions per agent.

    Attributes
    ----------
    A : ndarray (n, n)
    B : ndarray (n, N)
        Column i is agent i's input vector B^i.
    Q : ndarray (N, T+1, n, n)
        State costs Q^i_t.
    R : ndarray (N, T, N, N)
        Action costs R^i_t.
    M : ndarray (T,)
        Linear action costs M_t, charged as M_t * u^i_t to agent i.
    d : ndarray (T+1, n)
        Desired states.
    init_mean, init_cov : ndarray
        Moments of the Gaussian initial state.
    agent_state_dims : tuple of int
        Optional state partition; empty means no partition declared.
    decoupled : bool
        Set by :func:`validate_game`.
    """

    n_agents: int
    horizon: int
    state_dim: int
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    M: np.ndarray
    d: np.ndarray
    init_mean: np.ndarray
    init_cov: np.ndarray
    agent_state_dims: tuple = ()
    decoupled: bool = field(default=False, compare=False)

    @classmethod
    def from_dict(cls, data):
        """Build an (unvalidated) game from the JSON-schema mapping."""
        try:
            N = int(data["n_agents"])
            T = int(data["horizon"])
            n = int(data["state_dim"])
            B_cols = np.asarray(data["B"], dtype=float)
            return cls(
                n_agents=N,
                horizon=T,
                state_dim=n,
                agent_state_dims=tuple(int(v) for v in data.get("agent_state_dims", []) or []),
                A=np.asarray(data["A"], dtype=float),
                B=B_cols.T.copy() if B_cols.ndim == 2 else B_cols,
                Q=np.asarray(data["Q"], dtype=float),
                R=np.asarray(data["R"], dtype=float),
                M=np.asarray(data.get("M", np.zeros(T)), dtype=float),
                d=np.asarray(data.get("d", np.zeros((T + 1, n))), dtype=float),
                init_mean=np.asarray(data["init_mean"], dtype=float),
                init_cov=np.asarray(data["init_cov"], dtype=float),
            )
        except KeyError as exc:
            raise GameSpecError(f"missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise GameSpecError(f"malformed game spec: {exc}") from None

    def to_dict(self):
        return {
            "n_agents": self.n_agents,
            "horizon": self.horizon,
            "state_dim": self.state_dim,
            "agent_state_dims": list(self.agent_state_dims),
            "A": self.A.tolist(),
            "B": self.B.T.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "M": self.M.tolist(),
            "d": self.d.tolist(),
            "init_mean": self.init_mean.tolist(),
            "init_cov": self.init_cov.tolist(),
        }

    def agent_lin(self):
        """Linear action-cost vectors per agent, shape (N, T, N): M_t e_i."""
        N, T = self.n_agents, self.horizon
        lin = np.zeros((N, T, N))
        for i in range(N):
            lin[i, :, i] = self.M
        return lin


@dataclass
class PolicyProfile:
    """Per-agent, per-time decision variables.

    ``decisions[i]`` has shape (T, q_i): actions (q_i = 1), full gain rows
    (q_i = n) or local gain rows (q_i = n_i) depending on ``structure``.
    """

    structure: InformationStructure
    decisions: list

    def __post_init__(self):
        self.structure = InformationStructure.parse(self.structure)
        self.decisions = [np.atleast_2d(np.asarray(g, dtype=float)) for g in self.decisions]

    def flat(self):
        return np.concatenate([g.ravel() for g in self.decisions])

    def to_dict(self):
        return {"structure": self.structure.value, "decisions": [g.tolist() for g in self.decisions]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(structure=data["structure"], decisions=data["decisions"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PolicyError(f"malformed policy: {exc}") from None


@dataclass
class Trajectory:
    states: np.ndarray
    actions: np.ndarray


@dataclass
class ClosedLoopMaps:
    phi: np.ndarray


def eps_psd(X):
    return 1e-9 * (1.0 + float(np.max(np.abs(X), initial=0.0)))


def _sym(X):
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def agent_blocks(game):
    """Slices of the joint state owned by each agent."""
    if not game.agent_state_dims:
        raise GameSpecError("game declares no state partition")
    offsets = np.concatenate([[0], np.cumsum(game.agent_state_dims)])
    return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]


def _is_decoupled(game):
    if not game.agent_state_dims or len(game.agent_state_dims) != game.n_agents:
        return False
    blocks = agent_blocks(game)
    mask = np.zeros_like(game.A, dtype=bool)
    for blk in blocks:
        mask[blk, blk] = True
    if np.any(np.abs(game.A[~mask]) > eps_psd(game.A)):
        return False
    for i, blk in enumerate(blocks):
        col = game.B[:, i].copy()
        col[blk] = 0.0
        if np.any(np.abs(col) > eps_psd(game.B)):
            return False
    return True


def validate_game(raw):
    """Symmetrize cost matrices, check every invariant, flag decoupling.

    Accepts an :class:`LQGame` or the JSON mapping. Returns a new validated
    :class:`LQGame`; raises :class:`GameSpecError` listing every violation.
    """
    game = LQGame.from_dict(raw) if isinstance(raw, Mapping) else raw
    N, T, n = game.n_agents, game.horizon, game.state_dim
    if N < 1 or T < 1 or n < 1:
        raise GameSpecError("n_agents, horizon and state_dim must be positive")

    expected = {
        "A": (game.A, (n, n)),
        "B": (game.B, (n, N)),
        "Q": (game.Q, (N, T + 1, n, n)),
        "R": (game.R, (N, T, N, N)),
        "M": (game.M, (T,)),
        "d": (game.d, (T + 1, n)),
        "init_mean": (game.init_mean, (n,)),
        "init_cov": (game.init_cov, (n, n)),
    }
    errors = [
        f"dimension mismatch for {name}: expected {shape}, got {arr.shape}"
        for name, (arr, shape) in expected.items()
        if arr.shape != shape
    ]
    dims = tuple(game.agent_state_dims)
    if dims:
        if len(dims) != N or any(v < 1 for v in dims):
            errors.append(f"agent_state_dims must hold {N} positive integers, got {list(dims)}")
        elif sum(dims) != n:
            errors.append(f"agent_state_dims sum to {sum(dims)}, expected state_dim {n}")
    if errors:
        raise GameSpecError(errors)
    if not all(np.all(np.isfinite(arr)) for arr, _ in expected.values()):
        raise GameSpecError("game spec contains non-finite entries")

    game = replace(
        game,
        A=game.A.copy(),
        B=game.B.copy(),
        Q=_sym(game.Q),
        R=_sym(game.R),
        M=game.M.copy(),
        d=game.d.copy(),
        init_mean=game.init_mean.copy(),
        init_cov=_sym(game.init_cov),
        agent_state_dims=dims,
    )

    for i in range(N):
        for t in range(T + 1):
            Qit = game.Q[i, t]
            lo = np.linalg.eigvalsh(Qit)[0]
            if lo < -eps_psd(Qit):
                errors.append(f"Q[{i}][{t}] is not positive semidefinite (min eigenvalue {lo:.3g})")
        for t in range(T):
            diag = np.diag(game.R[i, t])
            if diag[i] <= 0:
                errors.append(f"R[{i}][{t}]: diagonal action cost must be positive, got {diag[i]:.6g}")
            others = np.delete(diag, i)
            if np.any(others < 0):
                errors.append(f"R[{i}][{t}]: off-agent diagonal action costs must be non-negative")
    for t in np.flatnonzero(game.M < 0):
        errors.append(f"M[{t}] must be non-negative, got {game.M[t]:.6g}")
    lo = np.linalg.eigvalsh(game.init_cov)[0]
    if lo < -eps_psd(game.init_cov):
        errors.append(f"init_cov is not positive semidefinite (min eigenvalue {lo:.3g})")
    if errors:
        raise GameSpecError(errors)

    game.decoupled = _is_decoupled(game)
    return game


def decision_dims(game, structure):
    structure = InformationStructure.parse(structure)
    if structure is InformationStructure.OPEN_LOOP:
        return [1] * game.n_agents
    if structure is InformationStructure.FULL_STATE_FEEDBACK:
        return [game.state_dim] * game.n_agents
    if not game.agent_state_dims:
        raise PolicyError("DecoupledStateFeedback requires a declared state partition")
    return list(game.agent_state_dims)


def check_policy(game, policy):
    """Raise :class:`PolicyError` unless ``policy`` fits ``game``."""
    dims = decision_dims(game, policy.structure)
    if len(policy.decisions) != game.n_agents:
        raise PolicyError(f"policy has {len(policy.decisions)} agents, game has {game.n_agents}")
    for i, (g, q) in enumerate(zip(policy.decisions, dims)):
        if g.shape != (game.horizon, q):
            raise PolicyError(f"decisions[{i}] has shape {g.shape}, expected {(game.horizon, q)}")
    return policy


def zero_policy(game, structure):
    dims = decision_dims(game, structure)
    return PolicyProfile(structure, [np.zeros((game.horizon, q)) for q in dims])


def random_policy(game, structure, rng, low=-0.5, high=0.5):
    dims = decision_dims(game, structure)
    return PolicyProfile(structure, [rng.uniform(low, high, size=(game.horizon, q)) for q in dims])


def policy_from_flat(game, structure, vec):
    """Inverse of :meth:`PolicyProfile.flat` (agent-major, then time, then component)."""
    dims = decision_dims(game, structure)
    vec = np.asarray(vec, dtype=float)
    sizes = [game.horizon * q for q in dims]
    if vec.shape != (sum(sizes),):
        raise PolicyError(f"flat policy has length {vec.size}, expected {sum(sizes)}")
    parts = np.split(vec, np.cumsum(sizes)[:-1])
    return PolicyProfile(structure, [p.reshape(game.horizon, q) for p, q in zip(parts, dims)])


def embed_policy(game, policy):
    """Full feedback gains (T, N, n) and open-loop offsets (T, N) of a policy."""
    check_policy(game, policy)
    N, T, n = game.n_agents, game.horizon, game.state_dim
    gains = np.zeros((T, N, n))
    offsets = np.zeros((T, N))
    if policy.structure is InformationStructure.OPEN_LOOP:
        for i, g in enumerate(policy.decisions):
            offsets[:, i] = g[:, 0]
    elif policy.structure is InformationStructure.FULL_STATE_FEEDBACK:
        for i, g in enumerate(policy.decisions):
            gains[:, i, :] = g
    else:
        for i, (g, blk) in enumerate(zip(policy.decisions, agent_blocks(game))):
            gains[:, i, blk] = g
    return gains, offsets


def simulate_trajectory(game, policy, x0):
    gains, offsets = embed_policy(game, policy)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (game.state_dim,):
        raise PolicyError(f"x0 has shape {x0.shape}, expected {(game.state_dim,)}")
    T = game.horizon
    states = np.empty((T + 1, game.state_dim))
    actions = np.empty((T, game.n_agents))
    states[0] = x0
    for t in range(T):
        actions[t] = offsets[t] - gains[t] @ states[t]
        states[t + 1] = game.A @ states[t] + game.B @ actions[t]
    return Trajectory(states=states, actions=actions)


def agent_losses_at(game, policy, x0):
    """Per-agent loss along the deterministic trajectory started at ``x0``."""
    traj = simulate_trajectory(game, policy, x0)
    losses = np.zeros(game.n_agents)
    for i in range(game.n_agents):
        for t in range(game.horizon + 1):
            e = traj.states[t] - game.d[t]
            losses[i] += e @ game.Q[i, t] @ e
        for t in range(game.horizon):
            u = traj.actions[t]
            losses[i] += u @ game.R[i, t] @ u + game.M[t] * u[i]
    return losses


def expected_agent_losses(game, policy):
    """Exact per-agent expected losses over the Gaussian initial state."""
    gains, offsets = embed_policy(game, policy)
    means, covs = _moments.propagate(game.A, game.B, gains, offsets, game.init_mean, game.init_cov)
    return _moments.quadratic_losses(means, covs, gains, offsets, game.Q, game.R, game.agent_lin(), game.d)


def _cov_factor(cov):
    w, V = np.linalg.eigh(cov)
    if w[0] < -eps_psd(cov):
        raise np.linalg.LinAlgError(f"init_cov is indefinite (min eigenvalue {w[0]:.3g})")
    return V * np.sqrt(np.clip(w, 0.0, None))


def monte_carlo_losses(game, policy, n_samples, seed, return_samples=False):
    """Sample mean and standard error of per-agent losses, x0 ~ N(mean, cov).

    Deterministic for a given ``seed``. With ``return_samples`` the per-sample
    loss matrix (n_samples, N) is returned as a third element.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    gains, offsets = embed_policy(game, policy)
    rng = np.random.default_rng(seed)
    factor = _cov_factor(game.init_cov)
    X = game.init_mean + rng.standard_normal((n_samples, game.state_dim)) @ factor.T
    lin = game.agent_lin()
    samples = np.zeros((n_samples, game.n_agents))
    for t in range(game.horizon + 1):
        E = X - game.d[t]
        samples += np.einsum("si,pij,sj->sp", E, game.Q[:, t], E)
        if t == game.horizon:
            break
        U = offsets[t] - X @ gains[t].T
        samples += np.einsum("si,pij,sj->sp", U, game.R[:, t], U) + U @ lin[:, t].T
        X = X @ game.A.T + U @ game.B.T
    est = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(n_samples)
    if return_samples:
        return est, se, samples
    return est, se


def closed_loop_maps(game, policy):
    """phi[t] maps x0 to x_t under a linear feedback policy."""
    if policy.structure is InformationStructure.OPEN_LOOP:
        raise PolicyError("closed-loop maps require a feedback information structure")
    gains, _ = embed_policy(game, policy)
    n = game.state_dim
    phi = np.empty((game.horizon + 1, n, n))
    phi[0] = np.eye(n)
    for t in range(game.horizon):
        phi[t + 1] = (game.A - game.B @ gains[t]) @ phi[t]
    return ClosedLoopMaps(phi=phi)
