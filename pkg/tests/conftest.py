import numpy as np
import pytest

from drapebench.body import build_parametric_body
from drapebench.kinematics import default_skeleton


@pytest.fixture(scope="session")
def skeleton():
    return default_skeleton()


@pytest.fixture(scope="session")
def body():
    return build_parametric_body("female_average")


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
