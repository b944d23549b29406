"""Generators for concrete game families and random test instances."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .game import GameSpecError, LQGame, eps_psd, validate_game

__all__ = [
    "CournotParams",
    "FormationParams",
    "reference_cournot_params",
    "make_cournot",
    "make_formation",
    "make_scalar_coupled",
    "random_potential_game",
    "inject_c1c2_violation",
    "random_scalar_coupled",
]


@dataclass
class CournotParams:
    n_agents: int
    horizon: int
    final_costs: np.ndarray
    alpha: np.ndarray
    linear_price_offsets: np.ndarray
    init_mean: np.ndarray
    init_vars: np.ndarray

    def __post_init__(self):
        self.final_costs = np.asarray(self.final_costs, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.linear_price_offsets = np.broadcast_to(
            np.asarray(self.linear_price_offsets, dtype=float), (self.horizon,)
        ).copy()
        self.init_mean = np.asarray(self.init_mean, dtype=float)
        self.init_vars = np.asarray(self.init_vars, dtype=float)
        N, T = self.n_agents, self.horizon
        errors = []
        if N < 1 or T < 1:
            errors.append("n_agents and horizon must be positive")
        for name, arr, size in [
            ("final_costs", self.final_costs, N),
            ("alpha", self.alpha, T),
            ("init_mean", self.init_mean, N),
            ("init_vars", self.init_vars, N),
        ]:
            if arr.shape != (size,):
                errors.append(f"{name} must have length {size}, got shape {arr.shape}")
        if errors:
            raise GameSpecError(errors)
        if np.any(self.final_costs <= 0):
            errors.append("final costs must be positive")
        if np.any(self.alpha <= 0):
            errors.append("alpha must be positive")
        if np.any(self.linear_price_offsets < 0):
            errors.append("linear price offsets must be non-negative")
        if np.any(self.init_vars < 0):
            errors.append("initial variances must be non-negative")
        if errors:
            raise GameSpecError(errors)


def reference_cournot_params():
    """The three-firm, ten-step Cournot instance used in the convergence experiment."""
    T = 10
    return CournotParams(
        n_agents=3,
        horizon=T,
        final_costs=[2.0, 1.5, 1.0],
        alpha=[2.0 - t / (T - 1) for t in range(T)],
        linear_price_offsets=np.zeros(T),
        init_mean=[1.2, 0.8, 1.0],
        init_vars=[0.6, 1.0, 0.7],
    )


def make_cournot(params):
    """Decoupled Cournot game: storage x^i_{t+1} = x^i_t + u^i_t.

    Agent i pays ``alpha_t`` on every entry of row/column i of its action
    cost (diagonal included) and ``Q^i_T (x^i_T)^2`` at the final stage.
    """
    N, T = params.n_agents, params.horizon
    Q = np.zeros((N, T + 1, N, N))
    R = np.zeros((N, T, N, N))
    for i in range(N):
        Q[i, T, i, i] = params.final_costs[i]
        R[i, :, i, :] = params.alpha[:, None]
        R[i, :, :, i] = params.alpha[:, None]
    game = LQGame(
        n_agents=N,
        horizon=T,
        state_dim=N,
        agent_state_dims=(1,) * N,
        A=np.eye(N),
        B=np.eye(N),
        Q=Q,
        R=R,
        M=params.linear_price_offsets.copy(),
        d=np.zeros((T + 1, N)),
        init_mean=params.init_mean.copy(),
        init_cov=np.diag(params.init_vars),
    )
    return validate_game(game)


@dataclass
class FormationParams:
    """Formation control with single-integrator vehicles.

    ``weights[t, i, j]`` is w^{ij}_t (diagonal ignored); ``offsets[t, i]`` is
    vehicle i's desired position d^i_t (length ``block_dim``).
    """

    n_agents: int
    block_dim: int
    horizon: int
    weights: np.ndarray
    offsets: np.ndarray = None
    action_cost: float = 1.0
    init_mean: np.ndarray = None
    init_cov: np.ndarray = None
    input_vectors: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        N, m, T = self.n_agents, self.block_dim, self.horizon
        if N < 1 or m < 1 or T < 1:
            raise GameSpecError("n_agents, block_dim and horizon must be positive")
        self.weights = np.broadcast_to(np.asarray(self.weights, dtype=float), (T + 1, N, N)).copy()
        if np.any(self.weights < 0):
            raise GameSpecError("formation weights must be non-negative")
        self.offsets = (
            np.zeros((T + 1, N, m))
            if self.offsets is None
            else np.broadcast_to(np.asarray(self.offsets, dtype=float), (T + 1, N, m)).copy()
        )
        self.action_cost = np.broadcast_to(np.asarray(self.action_cost, dtype=float), (N, T)).copy()
        if np.any(self.action_cost <= 0):
            raise GameSpecError("action costs must be positive")
        n = N * m
        self.init_mean = np.ones(n) if self.init_mean is None else np.asarray(self.init_mean, dtype=float)
        self.init_cov = np.eye(n) if self.init_cov is None else np.asarray(self.init_cov, dtype=float)
        self.input_vectors = (
            np.ones((N, m))
            if self.input_vectors is None
            else np.broadcast_to(np.asarray(self.input_vectors, dtype=float), (N, m)).copy()
        )


def formation_state_cost(weights_i, i, block_dim):
    """Q^i_t for one agent and time from its weight row w^{i.}_t.

    Expands sum_j w^{ij} ||x^i - x^j - d^{ij}||^2; the cross terms enter with
    a negative sign.
    """
    N = weights_i.shape[0]
    W = np.diag(weights_i)
    E = np.zeros((N, N))
    E[:, i] = 1.0
    D = np.zeros((N, N))
    D[i, i] = 1.0
    core = W - W @ E - E.T @ W + weights_i.sum() * D
    return np.kron(core, np.eye(block_dim))


def make_formation(params):
    N, m, T = params.n_agents, params.block_dim, params.horizon
    n = N * m
    Q = np.zeros((N, T + 1, n, n))
    for i in range(N):
        for t in range(T + 1):
            Q[i, t] = formation_state_cost(params.weights[t, i], i, m)
            lo = np.linalg.eigvalsh(Q[i, t])[0]
            if lo < -eps_psd(Q[i, t]):
                raise GameSpecError(f"formation cost Q[{i}][{t}] not PSD (eigenvalue {lo:.3g})")
    R = np.zeros((N, T, N, N))
    for i in range(N):
        R[i, :, i, i] = params.action_cost[i]
    B = np.zeros((n, N))
    for i in range(N):
        B[i * m:(i + 1) * m, i] = params.input_vectors[i]
    game = LQGame(
        n_agents=N,
        horizon=T,
        state_dim=n,
        agent_state_dims=(m,) * N,
        A=np.eye(n),
        B=B,
        Q=Q,
        R=R,
        M=np.zeros(T),
        d=params.offsets.reshape(T + 1, n),
        init_mean=params.init_mean,
        init_cov=params.init_cov,
    )
    return validate_game(game)


def make_scalar_coupled(q1, q2, r1, r2, a=1.0, b1=1.0, b2=1.0, init_mean=1.0, init_var=0.5):
    """Two agents acting on one shared scalar state.

    ``q1``, ``q2`` hold T+1 state costs; ``r1``, ``r2`` hold T 2x2 action
    cost matrices. The horizon is taken from their lengths (2 in the
    canonical example).
    """
    q1, q2 = np.asarray(q1, dtype=float), np.asarray(q2, dtype=float)
    r1, r2 = np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    T = r1.shape[0] if r1.ndim else 0
    shapes = [q1.shape, q2.shape, r1.shape, r2.shape]
    if shapes != [(T + 1,), (T + 1,), (T, 2, 2), (T, 2, 2)] or T < 1:
        raise GameSpecError("state costs need horizon+1 entries and action costs horizon 2x2 matrices")
    q, r = np.stack([q1, q2]), np.stack([r1, r2])
    game = LQGame(
        n_agents=2,
        horizon=T,
        state_dim=1,
        A=np.array([[float(a)]]),
        B=np.array([[float(b1), float(b2)]]),
        Q=q[:, :, None, None].copy(),
        R=r,
        M=np.zeros(T),
        d=np.zeros((T + 1, 1)),
        init_mean=np.array([float(init_mean)]),
        init_cov=np.array([[float(init_var)]]),
    )
    return validate_game(game)


def random_scalar_coupled(rng, open_loop_potential=False, identical=False, horizon=2):
    """Random instance of the scalar coupled family.

    ``identical`` shares every cost; ``open_loop_potential`` only shares the
    state costs and the cross action cost. Otherwise all costs are drawn
    independently per agent.
    """
    T = horizon
    q = rng.uniform(0.2, 2.0, size=(2, T + 1))
    r = np.empty((2, T, 2, 2))
    for i in range(2):
        diag = rng.uniform(0.2, 2.0, size=(T, 2))
        off = rng.uniform(-0.5, 0.5, size=T)
        r[i, :, 0, 0], r[i, :, 1, 1] = diag[:, 0], diag[:, 1]
        r[i, :, 0, 1] = r[i, :, 1, 0] = off
    if identical:
        q[1], r[1] = q[0], r[0]
    elif open_loop_potential:
        q[1] = q[0]
        r[1, :, 0, 1] = r[1, :, 1, 0] = r[0, :, 0, 1]
    return make_scalar_coupled(
        q[0], q[1], r[0], r[1],
        a=rng.uniform(0.5, 1.2),
        b1=rng.choice([-1, 1]) * rng.uniform(0.5, 1.5),
        b2=rng.choice([-1, 1]) * rng.uniform(0.5, 1.5),
        init_mean=rng.uniform(0.5, 1.5),
        init_var=rng.uniform(0.2, 1.0),
    )


def _random_psd(rng, n, scale=1.0):
    L = rng.normal(size=(n, n)) * scale / np.sqrt(n)
    return L @ L.T


def random_potential_game(rng, n_agents, state_dims, horizon, identical=False, linear_costs=True):
    """Random decoupled game satisfying the cross-block agreement conditions.

    State costs are a shared PSD matrix plus, per agent, a PSD term that
    never touches a cross block involving that agent; action costs share
    their agent-pair entries. With ``identical`` all agents get the same
    matrices and M = 0.
    """
    N, T = n_agents, horizon
    dims = tuple(int(v) for v in state_dims)
    n = sum(dims)
    offsets = np.concatenate([[0], np.cumsum(dims)])
    blocks = [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]

    A = np.zeros((n, n))
    B = np.zeros((n, N))
    for i, blk in enumerate(blocks):
        m = dims[i]
        Ai = rng.normal(size=(m, m))
        radius = max(np.max(np.abs(np.linalg.eigvals(Ai))), 1e-12)
        A[blk, blk] = Ai * rng.uniform(0.6, 1.05) / radius
        B[blk, i] = rng.normal(size=m)

    Q = np.zeros((N, T + 1, n, n))
    R = np.zeros((N, T, N, N))
    for t in range(T + 1):
        shared = _random_psd(rng, n)
        for i, blk in enumerate(blocks):
            Q[i, t] = shared
            if identical:
                continue
            own = np.zeros(n, dtype=bool)
            own[blk] = True
            Q[i, t][np.ix_(own, own)] += _random_psd(rng, dims[i], 0.5)
            if (~own).any():
                Q[i, t][np.ix_(~own, ~own)] += _random_psd(rng, int((~own).sum()), 0.5)
    for t in range(T):
        shared = rng.uniform(-0.5, 0.5, size=(N, N))
        shared = 0.5 * (shared + shared.T)
        np.fill_diagonal(shared, rng.uniform(0.5, 1.5, size=N))
        for i in range(N):
            if identical:
                R[i, t] = shared
                continue
            Ri = rng.uniform(-0.5, 0.5, size=(N, N))
            Ri = 0.5 * (Ri + Ri.T)
            np.fill_diagonal(Ri, rng.uniform(0.0, 1.0, size=N))
            Ri[i, :] = shared[i, :]
            Ri[:, i] = shared[:, i]
            Ri[i, i] = rng.uniform(0.5, 1.5)
            R[i, t] = Ri
    M = np.zeros(T) if identical or not linear_costs else rng.uniform(0.0, 1.0, size=T)
    game = LQGame(
        n_agents=N,
        horizon=T,
        state_dim=n,
        agent_state_dims=dims,
        A=A,
        B=B,
        Q=Q,
        R=R,
        M=M,
        d=rng.normal(size=(T + 1, n)) * 0.5,
        init_mean=rng.uniform(0.5, 1.5, size=n) * rng.choice([-1, 1], size=n),
        init_cov=_random_psd(rng, n) + 0.1 * np.eye(n),
    )
    return validate_game(game)


def inject_c1c2_violation(game, rng, kind=None):
    """Return a copy of ``game`` with one cross-agent block made inconsistent.

    ``kind`` is "Q" (state-cost cross block at some t >= 1) or "R" (action
    cross entry); random when omitted. Also returns the location
    ``(kind, t, i, j)``.
    """
    if game.n_agents < 2:
        raise ValueError("need at least two agents to break cross-agent agreement")
    kind = kind or rng.choice(["Q", "R"])
    Q, R = game.Q.copy(), game.R.copy()
    i, j = rng.choice(game.n_agents, size=2, replace=False)
    offsets = np.concatenate([[0], np.cumsum(game.agent_state_dims)])
    bi = slice(offsets[i], offsets[i + 1])
    bj = slice(offsets[j], offsets[j + 1])
    if kind == "Q":
        t = int(rng.integers(1, game.horizon + 1))
        delta = rng.uniform(0.5, 1.0, size=(bi.stop - bi.start, bj.stop - bj.start))
        delta *= rng.choice([-1, 1], size=delta.shape)
        Q[i, t, bi, bj] += delta
        Q[i, t, bj, bi] += delta.T
        Q[i, t] += (np.linalg.norm(delta, 2) + 0.1) * np.eye(game.state_dim)
    else:
        t = int(rng.integers(0, game.horizon))
        delta = rng.uniform(0.5, 1.0) * rng.choice([-1, 1])
        R[i, t, i, j] += delta
        R[i, t, j, i] += delta
    return validate_game(replace(game, Q=Q, R=R)), (str(kind), t, int(i), int(j))
