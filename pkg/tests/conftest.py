import numpy as np
import pytest

from flimks.feasibility import select_params
from flimks.problem import make_setup


@pytest.fixture(scope="session")
def setup_1d():
    return make_setup(1, 1.0, 2.0, 2.0)


@pytest.fixture(scope="session")
def setup_2d():
    return make_setup(2, 1.0, 2.0, 0.5)


@pytest.fixture(scope="session")
def report_1d(setup_1d):
    return select_params(setup_1d)


@pytest.fixture(scope="session")
def report_2d(setup_2d):
    return select_params(setup_2d)


@pytest.fixture(scope="session")
def params_1d(report_1d):
    assert report_1d.feasible, report_1d.reason
    return report_1d.params


@pytest.fixture(scope="session")
def params_2d(report_2d):
    assert report_2d.feasible, report_2d.reason
    return report_2d.params


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
