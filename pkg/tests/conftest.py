import numpy as np
import pytest

from drivengate.params import TrapSpec, resolve_double_drive, resolve_single_drive


@pytest.fixture(scope="session")
def trap():
    return TrapSpec.reference()


@pytest.fixture(scope="session")
def gate8(trap):
    return resolve_single_drive(trap, 8, 2, 57)


@pytest.fixture(scope="session")
def gate_double(trap):
    return resolve_double_drive(trap, 32, 2, 79, 47)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
