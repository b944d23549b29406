"""Potential-game tests for LQ games and the associated structured LQ problem."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _moments
from .game import (
    GameSpecError,
    InformationStructure,
    agent_blocks,
    decision_dims,
    embed_policy,
    expected_agent_losses,
    policy_from_flat,
    random_policy,
    zero_policy,
)

__all__ = [
    "Criterion",
    "Witness",
    "ConditionReport",
    "NotPotentialError",
    "StructuredLQProblem",
    "check_identical_interest",
    "check_c1_c2",
    "pseudo_gradient",
    "jacobian_symmetry_check",
    "build_potential_problem",
]


class Criterion(str, Enum):
    IDENTICAL_INTEREST = "IdenticalInterest"
    C1C2 = "C1C2"
    JACOBIAN_SYMMETRY = "JacobianSymmetry"


@dataclass
class Witness:
    """One violated equality. Agent and time indices are 0-based.

    ``kind`` names the compared object ("Q", "R", "M" or "J" for a Jacobian
    entry); ``entry`` is the offending (row, col) inside it and ``tau`` the
    second time index of a Jacobian entry.
    """

    kind: str
    t: int
    i: int | None
    j: int | None
    lhs: float
    rhs: float
    abs_diff: float
    entry: tuple | None = None
    tau: int | None = None

    def to_dict(self):
        out = asdict(self)
        if self.entry is not None:
            out["entry"] = [int(v) for v in self.entry]
        return out


@dataclass
class ConditionReport:
    verdict: bool
    criterion: Criterion
    witnesses: list
    tol: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": bool(self.verdict),
            "criterion": self.criterion.value,
            "tol": self.tol,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "details": self.details,
        }


class NotPotentialError(GameSpecError):
    """The cross-agent agreement conditions fail; carries the report."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"game does not satisfy C1/C2 ({len(report.witnesses)} violations)")


def _matrix_witness(kind, t, i, j, lhs, rhs):
    diff = np.abs(lhs - rhs)
    r, c = np.unravel_index(np.argmax(diff), diff.shape)
    return Witness(kind, int(t), int(i), int(j), float(lhs[r, c]), float(rhs[r, c]), float(diff[r, c]), (int(r), int(c)))


def check_identical_interest(game, tol=1e-9):
    """All agents share Q_t and R_t, and every M_t vanishes."""
    N, T = game.n_agents, game.horizon
    witnesses = []
    for i in range(N):
        for j in range(i + 1, N):
            for t in range(T + 1):
                if np.max(np.abs(game.Q[i, t] - game.Q[j, t])) > tol:
                    witnesses.append(_matrix_witness("Q", t, i, j, game.Q[i, t], game.Q[j, t]))
            for t in range(T):
                if np.max(np.abs(game.R[i, t] - game.R[j, t])) > tol:
                    witnesses.append(_matrix_witness("R", t, i, j, game.R[i, t], game.R[j, t]))
    for t in range(T):
        if abs(game.M[t]) > tol:
            witnesses.append(Witness("M", t, None, None, float(game.M[t]), 0.0, abs(float(game.M[t]))))
    return ConditionReport(not witnesses, Criterion.IDENTICAL_INTEREST, witnesses, tol)


def check_c1_c2(game, tol=1e-9):
    """Cross-agent state-cost blocks and action-cost entries agree pairwise.

    Only defined for decoupled games; raises :class:`GameSpecError` otherwise.
    """
    if not game.agent_state_dims:
        raise GameSpecError("C1/C2 check needs a declared state partition")
    if not game.decoupled:
        raise GameSpecError("C1/C2 check needs decoupled dynamics")
    N, T = game.n_agents, game.horizon
    blocks = agent_blocks(game)
    witnesses = []
    for i in range(N):
        for j in range(i + 1, N):
            bi, bj = blocks[i], blocks[j]
            for t in range(T + 1):
                lhs, rhs = game.Q[i, t][bi, bj], game.Q[j, t][bi, bj]
                if np.max(np.abs(lhs - rhs)) > tol:
                    witnesses.append(_matrix_witness("Q", t, i, j, lhs, rhs))
            for t in range(T):
                lhs, rhs = game.R[i, t, i, j], game.R[j, t, i, j]
                if abs(lhs - rhs) > tol:
                    witnesses.append(Witness("R", t, i, j, float(lhs), float(rhs), float(abs(lhs - rhs)), (i, j)))
    return ConditionReport(not witnesses, Criterion.C1C2, witnesses, tol)


def _agent_gradients(game, policy):
    """Per-agent own-decision gradients, computed by the adjoint recursion."""
    gains, offsets = embed_policy(game, policy)
    lin = game.agent_lin()
    structure = policy.structure
    blocks = agent_blocks(game) if structure is InformationStructure.DECOUPLED_STATE_FEEDBACK else None
    parts = []
    for i in range(game.n_agents):
        if structure is InformationStructure.OPEN_LOOP:
            g = _moments.open_loop_gradient(game.A, game.B, offsets, game.init_mean, game.Q[i], game.R[i], lin[i], game.d)
            parts.append(g[:, i])
            continue
        G = _moments.feedback_gradient(
            game.A, game.B, gains, game.init_mean, game.init_cov, game.Q[i], game.R[i], lin[i], game.d
        )
        parts.append(G[:, i, :] if blocks is None else G[:, i, blocks[i]])
    return parts


def pseudo_gradient(game, policy, method="analytic", fd_step=1e-6):
    """Stack of each agent's loss gradient w.r.t. its own decisions.

    Order is agent-major, then time, then component. ``method="fd"`` uses
    central differences of the exact expected losses instead of the adjoint
    recursion.
    """
    if method == "analytic":
        return np.concatenate([p.ravel() for p in _agent_gradients(game, policy)])
    if method != "fd":
        raise ValueError(f"unknown method {method!r}")
    gamma = policy.flat()
    dims = decision_dims(game, policy.structure)
    owner = np.repeat(np.arange(game.n_agents), [game.horizon * q for q in dims])
    out = np.empty_like(gamma)
    for a in range(gamma.size):
        h = fd_step * (1.0 + abs(gamma[a]))
        up, down = gamma.copy(), gamma.copy()
        up[a] += h
        down[a] -= h
        j_up = expected_agent_losses(game, policy_from_flat(game, policy.structure, up))[owner[a]]
        j_down = expected_agent_losses(game, policy_from_flat(game, policy.structure, down))[owner[a]]
        out[a] = (j_up - j_down) / (2.0 * h)
    return out


def _decode_index(game, structure):
    dims = decision_dims(game, structure)
    labels = []
    for i, q in enumerate(dims):
        for t in range(game.horizon):
            for c in range(q):
                labels.append((i, t, c))
    return labels


def pseudo_gradient_jacobian(game, policy, fd_step=1e-4):
    """Central-difference Jacobian of the analytic pseudo-gradient."""
    gamma = policy.flat()
    J = np.empty((gamma.size, gamma.size))
    for b in range(gamma.size):
        h = fd_step * (1.0 + abs(gamma[b]))
        up, down = gamma.copy(), gamma.copy()
        up[b] += h
        down[b] -= h
        g_up = pseudo_gradient(game, policy_from_flat(game, policy.structure, up))
        g_down = pseudo_gradient(game, policy_from_flat(game, policy.structure, down))
        J[:, b] = (g_up - g_down) / (2.0 * h)
    return J


def jacobian_symmetry_check(game, policy=None, structure=None, fd_step=1e-4, tol=1e-5, n_probe=5, seed=0):
    """Numerical symmetry test of the pseudo-gradient Jacobian.

    Open-loop Jacobians are constant, so one evaluation point suffices (the
    given policy, else zero actions). For feedback structures the verdict
    means "no asymmetry found" at ``n_probe`` seeded random gain points with
    entries uniform in [-0.5, 0.5], plus ``policy`` when supplied.
    """
    if policy is None and structure is None:
        raise ValueError("pass a policy or an information structure")
    structure = InformationStructure.parse(structure if structure is not None else policy.structure)
    if policy is not None and policy.structure is not structure:
        raise ValueError("policy structure does not match requested structure")
    if structure is InformationStructure.OPEN_LOOP:
        probes = [policy if policy is not None else zero_policy(game, structure)]
    else:
        rng = np.random.default_rng(seed)
        probes = [] if policy is None else [policy]
        probes += [random_policy(game, structure, rng) for _ in range(n_probe)]

    labels = _decode_index(game, structure)
    worst = 0.0
    worst_by_pair = {}
    for probe in probes:
        J = pseudo_gradient_jacobian(game, probe, fd_step)
        scale = 1.0 + np.max(np.abs(J))
        asym = np.abs(J - J.T) / scale
        worst = max(worst, float(asym.max()))
        for a, b in zip(*np.nonzero(np.triu(asym > tol, 1))):
            i, t, _ = labels[a]
            j, tau, _ = labels[b]
            key = (min(i, j), max(i, j))
            w = Witness("J", t, i, j, float(J[a, b]), float(J[b, a]), float(abs(J[a, b] - J[b, a])), (int(a), int(b)), tau)
            if key not in worst_by_pair or w.abs_diff > worst_by_pair[key].abs_diff:
                worst_by_pair[key] = w
    witnesses = [worst_by_pair[k] for k in sorted(worst_by_pair)]
    details = {
        "structure": structure.value,
        "max_normalized_asymmetry": worst,
        "n_points": len(probes),
        "exact": structure is InformationStructure.OPEN_LOOP,
    }
    if structure.is_feedback:
        details["note"] = "verdict reflects the probed gain points only"
    return ConditionReport(not witnesses, Criterion.JACOBIAN_SYMMETRY, witnesses, tol, details)


@dataclass
class StructuredLQProblem:
    """Single-player LQ problem over block-diagonal feedback gains.

    Decision vector ``k`` is agent-major: (k^1_0, ..., k^1_{T-1}, k^2_0, ...)
    with k^i_t of length ``agent_state_dims[i]``.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    M_bar: np.ndarray
    d: np.ndarray
    init_mean: np.ndarray
    init_cov: np.ndarray
    agent_state_dims: tuple

    @property
    def n_agents(self):
        return self.B.shape[1]

    @property
    def horizon(self):
        return self.R.shape[0]

    @property
    def state_dim(self):
        return self.A.shape[0]

    @property
    def n_params(self):
        return self.horizon * self.state_dim

    def blocks(self):
        offsets = np.concatenate([[0], np.cumsum(self.agent_state_dims)])
        return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]

    def mask(self):
        """Boolean support of the full gain matrices, shape (T, N, n)."""
        S = np.zeros((self.horizon, self.n_agents, self.state_dim), dtype=bool)
        for i, blk in enumerate(self.blocks()):
            S[:, i, blk] = True
        return S

    def agent_slices(self):
        """Slices of ``k`` owned by each agent."""
        sizes = np.concatenate([[0], np.cumsum([self.horizon * m for m in self.agent_state_dims])])
        return [slice(int(a), int(b)) for a, b in zip(sizes[:-1], sizes[1:])]

    def embed(self, k):
        k = np.asarray(k, dtype=float)
        if k.shape != (self.n_params,):
            raise ValueError(f"gain vector has shape {k.shape}, expected {(self.n_params,)}")
        K = np.zeros((self.horizon, self.n_agents, self.state_dim))
        for i, (blk, sl) in enumerate(zip(self.blocks(), self.agent_slices())):
            K[:, i, blk] = k[sl].reshape(self.horizon, -1)
        return K

    def compact(self, K):
        return np.concatenate([K[:, i, blk].ravel() for i, blk in enumerate(self.blocks())])

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.T.tolist(),
            "Q": self.Q.tolist(),
            "R": self.R.tolist(),
            "M_bar": self.M_bar.tolist(),
            "d": self.d.tolist(),
            "init_mean": self.init_mean.tolist(),
            "init_cov": self.init_cov.tolist(),
            "agent_state_dims": list(self.agent_state_dims),
            "structure_mask": self.mask()[0].astype(int).tolist(),
        }


def build_potential_problem(game, tol=1e-9):
    """Assemble the structured LQ problem whose cost is the game's potential.

    Diagonal blocks come from each agent's own cost; cross blocks are the
    common values (averaged, so round-off is split evenly).
    """
    report = check_c1_c2(game, tol)
    if not report.verdict:
        raise NotPotentialError(report)
    N, T, n = game.n_agents, game.horizon, game.state_dim
    blocks = agent_blocks(game)
    Q = np.zeros((T + 1, n, n))
    R = np.zeros((T, N, N))
    for i, bi in enumerate(blocks):
        Q[:, bi, bi] = game.Q[i][:, bi, bi]
        R[:, i, i] = game.R[i, :, i, i]
        for j, bj in enumerate(blocks):
            if j != i:
                Q[:, bi, bj] = 0.5 * (game.Q[i][:, bi, bj] + game.Q[j][:, bi, bj])
                R[:, i, j] = 0.5 * (game.R[i, :, i, j] + game.R[j, :, i, j])
    Q = 0.5 * (Q + np.transpose(Q, (0, 2, 1)))
    return StructuredLQProblem(
        A=game.A.copy(),
        B=game.B.copy(),
        Q=Q,
        R=R,
        M_bar=np.outer(game.M, np.ones(N)),
        d=game.d.copy(),
        init_mean=game.init_mean.copy(),
        init_cov=game.init_cov.copy(),
        agent_state_dims=tuple(game.agent_state_dims),
    )
