import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lqpotential import PotentialGameSolver
from lqpotential.examples import random_scalar_coupled
from lqpotential.game import GameSpecError
from lqpotential.optimizer import potential_value


def test_params_round_trip():
    est = PotentialGameSolver(lambdas=[1.1, 0.9, 1.0], grad_tol=0.005)
    params = est.get_params()
    assert params["grad_tol"] == 0.005 and params["c2"] == 0.9
    copy = clone(est).set_params(max_iters=7)
    assert copy.max_iters == 7 and est.max_iters == 50_000


def test_fit_predict_score(cournot, cournot_run_default):
    est = PotentialGameSolver(lambdas=[1.1, 0.9, 1.0]).fit(cournot)
    assert est.converged_
    np.testing.assert_array_equal(est.gains_, cournot_run_default[0])
    X = np.array([[1.0, 2.0, 3.0], [0.0, -1.0, 0.5]])
    K0 = est.problem_.embed(est.gains_)[0]
    np.testing.assert_allclose(est.predict(X), -X @ K0.T)
    assert est.score() == pytest.approx(-potential_value(est.problem_, est.gains_))
    traj = est.rollout(cournot.init_mean)
    assert traj.states.shape == (11, 3)


def test_fit_accepts_mapping_and_path(cournot, tmp_path):
    from lqpotential import io

    path = tmp_path / "g.json"
    io.save_game(cournot, path)
    a = PotentialGameSolver(max_iters=3).fit(cournot.to_dict())
    b = PotentialGameSolver(max_iters=3).fit(str(path))
    np.testing.assert_array_equal(a.gains_, b.gains_)
    assert not a.converged_ and a.n_iter_ == 3


def test_predict_validation(cournot):
    est = PotentialGameSolver(max_iters=1)
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((1, 3)))
    est.fit(cournot)
    with pytest.raises(ValueError):
        est.predict(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        est.predict(np.zeros((1, 3)), t=10)


def test_fit_rejects_non_decoupled():
    with pytest.raises(GameSpecError):
        PotentialGameSolver().fit(random_scalar_coupled(np.random.default_rng(0)))
    with pytest.raises(TypeError):
        PotentialGameSolver().fit(42)


def test_scalar_lambda_broadcast(cournot):
    est = PotentialGameSolver(lambdas=0.5, max_iters=2).fit(cournot)
    assert est.n_iter_ == 2
    with pytest.raises(ValueError):
        PotentialGameSolver(lambdas=[1.0, 1.0]).fit(cournot)
