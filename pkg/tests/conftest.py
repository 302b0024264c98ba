import numpy as np
import pytest

from mlt_tool import model


@pytest.fixture(scope="session")
def params():
    return model.MLParams()


@pytest.fixture(scope="session")
def fixed_point(params):
    return model.find_fixed_point(params=params)


@pytest.fixture(scope="session")
def stable_cycle(params):
    return model.extract_stable_cycle(params)


@pytest.fixture(scope="session")
def unstable_cycle(params):
    return model.extract_unstable_cycle(params)


# reference start states used throughout: a pair on the stable cycle
# and a pair on the unstable cycle
SC_STARTS = ((-32.7, 0.4578), (7.459, 0.5004))
UC_STARTS = ((-22.73, 0.174), (-31.27, 0.15))
