import numpy as np
import pytest

from lqpotential.examples import make_cournot, reference_cournot_params
from lqpotential.optimizer import DescentConfig, run_policy_gradient
from lqpotential.potential import build_potential_problem

COURNOT_LAMBDAS = np.array([1.1, 0.9, 1.0])


@pytest.fixture(scope="session")
def cournot():
    return make_cournot(reference_cournot_params())


@pytest.fixture(scope="session")
def cournot_problem(cournot):
    return build_potential_problem(cournot)


@pytest.fixture(scope="session")
def cournot_run(cournot_problem):
    """Experiment stopping rule (gradient norm below 0.005)."""
    return run_policy_gradient(cournot_problem, DescentConfig(lambdas=COURNOT_LAMBDAS, grad_tol=0.005))


@pytest.fixture(scope="session")
def cournot_run_default(cournot_problem):
    """Library default stopping rule (gradient norm below 1e-3)."""
    return run_policy_gradient(cournot_problem, DescentConfig(lambdas=COURNOT_LAMBDAS))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
