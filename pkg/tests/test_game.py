import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqpotential.examples import make_cournot, make_scalar_coupled, reference_cournot_params, random_potential_game
from lqpotential.game import (
    GameSpecError,
    InformationStructure,
    LQGame,
    PolicyError,
    PolicyProfile,
    agent_losses_at,
    closed_loop_maps,
    embed_policy,
    expected_agent_losses,
    monte_carlo_losses,
    policy_from_flat,
    random_policy,
    simulate_trajectory,
    validate_game,
    zero_policy,
)
from oracles import sigma_point_losses

OL = InformationStructure.OPEN_LOOP
FULL = InformationStructure.FULL_STATE_FEEDBACK
DEC = InformationStructure.DECOUPLED_STATE_FEEDBACK


def scalar_game(q0=0.0, q1=1.0, r=1.0, M=0.0, var=0.0):
    return validate_game(
        LQGame(
            n_agents=1, horizon=1, state_dim=1, agent_state_dims=(1,),
            A=np.eye(1), B=np.ones((1, 1)),
            Q=np.array([[[[q0]], [[q1]]]]), R=np.array([[[[r]]]]),
            M=np.array([M]), d=np.zeros((2, 1)),
            init_mean=np.ones(1), init_cov=np.array([[var]]),
        )
    )


def test_cournot_is_valid_and_decoupled(cournot):
    assert cournot.decoupled
    assert cournot.agent_state_dims == (1, 1, 1)


def test_scalar_coupled_is_not_decoupled():
    g = make_scalar_coupled([1, 1, 1], [1, 1, 1], [np.eye(2)] * 2, [np.eye(2)] * 2)
    assert not g.decoupled
    assert g.agent_state_dims == ()


def test_zero_own_action_cost_rejected(cournot):
    raw = cournot.to_dict()
    raw["R"][0][0][0][0] = 0.0
    with pytest.raises(GameSpecError, match="diagonal action cost must be positive"):
        validate_game(raw)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda r: r.update(A=[[1.0]]), "dimension mismatch for A"),
        (lambda r: r["M"].__setitem__(0, -1.0), "M\\[0\\] must be non-negative"),
        (lambda r: r["Q"][1].__setitem__(10, [[-1, 0, 0], [0, 0, 0], [0, 0, 0]]), "not positive semidefinite"),
        (lambda r: r.update(agent_state_dims=[1, 1]), "agent_state_dims"),
        (lambda r: r.update(init_cov=[[1, 2, 0], [2, 1, 0], [0, 0, 1]]), "init_cov"),
        (lambda r: r.pop("A"), "missing key"),
    ],
)
def test_invalid_specs(cournot, mutate, message):
    raw = json.loads(json.dumps(cournot.to_dict()))
    mutate(raw)
    with pytest.raises(GameSpecError, match=message):
        validate_game(raw)


def test_all_errors_are_reported(cournot):
    raw = cournot.to_dict()
    raw["R"][0][0][0][0] = 0.0
    raw["M"][2] = -1.0
    with pytest.raises(GameSpecError) as info:
        validate_game(raw)
    assert len(info.value.errors) == 2


def test_validation_symmetrizes(cournot):
    raw = cournot.to_dict()
    raw["R"][0][1][0][1] += 0.2
    g = validate_game(raw)
    np.testing.assert_array_equal(g.R[0, 1], g.R[0, 1].T)


def test_json_round_trip(cournot):
    again = validate_game(json.loads(json.dumps(cournot.to_dict())))
    for name in ("A", "B", "Q", "R", "M", "d", "init_mean", "init_cov"):
        np.testing.assert_array_equal(getattr(again, name), getattr(cournot, name))


def test_identity_dynamics_fixed_point(cournot):
    v = np.array([0.3, -1.0, 2.0])
    traj = simulate_trajectory(cournot, zero_policy(cournot, DEC), v)
    np.testing.assert_array_equal(traj.states, np.tile(v, (11, 1)))
    np.testing.assert_array_equal(traj.actions, 0.0)


def test_open_loop_single_step():
    g = scalar_game()
    traj = simulate_trajectory(g, PolicyProfile(OL, [[[-1.0]]]), [1.0])
    assert traj.states[1, 0] == 0.0


def test_cournot_constant_gain_hand_recursion():
    params = reference_cournot_params()
    params.horizon, params.alpha, params.linear_price_offsets = 3, np.ones(3), np.zeros(3)
    g = make_cournot(params)
    pol = PolicyProfile(DEC, [np.full((3, 1), 0.5)] * 3)
    traj = simulate_trajectory(g, pol, np.ones(3))
    np.testing.assert_allclose(traj.states[3], [0.125] * 3, rtol=0, atol=1e-15)
    phi = closed_loop_maps(g, pol).phi
    for t in range(4):
        np.testing.assert_allclose(phi[t], 0.5**t * np.eye(3), atol=1e-15)


def test_closed_loop_maps_trivial_cases(cournot):
    phi = closed_loop_maps(cournot, zero_policy(cournot, FULL)).phi
    np.testing.assert_array_equal(phi, np.tile(np.eye(3), (11, 1, 1)))
    g = scalar_game()
    phi = closed_loop_maps(g, PolicyProfile(FULL, [[[1.0]]])).phi
    assert phi[0, 0, 0] == 1.0 and phi[1, 0, 0] == 0.0
    with pytest.raises(PolicyError):
        closed_loop_maps(g, PolicyProfile(OL, [[[1.0]]]))


def test_losses_zero_at_origin(cournot):
    assert np.all(agent_losses_at(cournot, zero_policy(cournot, DEC), np.zeros(3)) == 0.0)


@pytest.mark.parametrize("u", [0.0, 0.5, -1.3])
def test_scalar_loss_hand_expansion(u):
    g = scalar_game()
    loss = agent_losses_at(g, PolicyProfile(OL, [[[u]]]), [1.0])[0]
    assert loss == pytest.approx((1 + u) ** 2 + u**2, abs=1e-14)


def test_cournot_zero_policy_deterministic_losses(cournot):
    mu = cournot.init_mean
    losses = agent_losses_at(cournot, zero_policy(cournot, DEC), mu)
    np.testing.assert_allclose(losses, [2.0, 1.5, 1.0] * mu**2, atol=1e-14)


def test_cournot_zero_policy_expected_losses(cournot):
    losses = expected_agent_losses(cournot, zero_policy(cournot, DEC))
    np.testing.assert_allclose(losses, [4.08, 2.46, 1.70], atol=1e-12)


def test_degenerate_distribution_matches_deterministic(cournot, rng):
    g = validate_game(cournot.to_dict() | {"init_cov": np.zeros((3, 3)).tolist()})
    pol = random_policy(g, DEC, rng)
    np.testing.assert_allclose(expected_agent_losses(g, pol), agent_losses_at(g, pol, g.init_mean), rtol=1e-12)
    est, se = monte_carlo_losses(g, pol, 50, seed=1)
    np.testing.assert_allclose(est, agent_losses_at(g, pol, g.init_mean), rtol=1e-12)
    np.testing.assert_allclose(se, 0.0, atol=1e-12)


def test_monte_carlo_is_seed_deterministic(cournot, rng):
    pol = random_policy(cournot, DEC, rng)
    a = monte_carlo_losses(cournot, pol, 1000, seed=3)
    b = monte_carlo_losses(cournot, pol, 1000, seed=3)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    with pytest.raises(ValueError):
        monte_carlo_losses(cournot, pol, 1, seed=0)


def test_monte_carlo_cournot_zero_policy(cournot):
    est, se = monte_carlo_losses(cournot, zero_policy(cournot, DEC), 100_000, seed=0)
    assert abs(est[0] - 4.08) <= 3 * se[0]


def test_monte_carlo_coverage_rate():
    g = random_potential_game(np.random.default_rng(5), 2, (1, 1), 2)
    pol = random_policy(g, DEC, np.random.default_rng(6))
    exact = expected_agent_losses(g, pol)
    hits = 0
    for seed in range(100):
        est, se = monte_carlo_losses(g, pol, 10_000, seed=seed)
        hits += bool(np.all(np.abs(est - exact) <= 3 * se))
    # two agents, each 3-sigma: expected joint coverage about 0.995
    assert hits >= 97


@pytest.mark.parametrize("structure", [OL, FULL, DEC])
def test_sigma_point_identity(structure):
    rng = np.random.default_rng(11)
    for _ in range(5):
        g = random_potential_game(rng, 3, (1, 2, 1), 4)
        pol = random_policy(g, structure, rng)
        oracle = sigma_point_losses(g, pol, agent_losses_at)
        np.testing.assert_allclose(expected_agent_losses(g, pol), oracle, rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), structure=st.sampled_from([OL, FULL, DEC]))
def test_replaying_actions_reproduces_states(seed, structure):
    rng = np.random.default_rng(seed)
    g = random_potential_game(rng, 2, (2, 1), 3)
    pol = random_policy(g, structure, rng)
    x0 = rng.normal(size=g.state_dim)
    traj = simulate_trajectory(g, pol, x0)
    replay = simulate_trajectory(g, PolicyProfile(OL, [traj.actions[:, [i]] for i in range(2)]), x0)
    scale = 1.0 + np.max(np.abs(traj.states))
    assert np.max(np.abs(replay.states - traj.states)) <= 1e-12 * scale
    np.testing.assert_array_equal(traj.states[0], x0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3, allow_nan=False), structure=st.sampled_from([FULL, DEC]))
def test_feedback_states_scale_with_initial_state(seed, a, structure):
    rng = np.random.default_rng(seed)
    g = random_potential_game(rng, 2, (1, 2), 3)
    pol = random_policy(g, structure, rng)
    v = rng.normal(size=g.state_dim)
    base = simulate_trajectory(g, pol, v).states
    scaled = simulate_trajectory(g, pol, a * v).states
    np.testing.assert_allclose(scaled, a * base, rtol=1e-12, atol=1e-12)


def test_policy_dimension_checks(cournot):
    with pytest.raises(PolicyError):
        simulate_trajectory(cournot, PolicyProfile(DEC, [np.zeros((10, 2))] * 3), np.zeros(3))
    with pytest.raises(PolicyError):
        simulate_trajectory(cournot, zero_policy(cournot, DEC), np.zeros(2))
    with pytest.raises(PolicyError):
        policy_from_flat(cournot, DEC, np.zeros(29))
    g = make_scalar_coupled([1, 1, 1], [1, 1, 1], [np.eye(2)] * 2, [np.eye(2)] * 2)
    with pytest.raises(PolicyError):
        zero_policy(g, DEC)


def test_embed_places_local_gains_on_own_block():
    g = random_potential_game(np.random.default_rng(2), 2, (2, 1), 2)
    pol = PolicyProfile(DEC, [np.ones((2, 2)), 2 * np.ones((2, 1))])
    gains, offsets = embed_policy(g, pol)
    np.testing.assert_array_equal(gains[0], [[1, 1, 0], [0, 0, 2]])
    np.testing.assert_array_equal(offsets, 0.0)


@pytest.mark.parametrize("alias, expected", [("open", OL), ("ii", FULL), ("decoupled", DEC), ("FullStateFeedback", FULL)])
def test_structure_aliases(alias, expected):
    assert InformationStructure.parse(alias) is expected


def test_flat_round_trip(cournot, rng):
    pol = random_policy(cournot, DEC, rng)
    again = policy_from_flat(cournot, DEC, pol.flat())
    for a, b in zip(pol.decisions, again.decisions):
        np.testing.assert_array_equal(a, b)
