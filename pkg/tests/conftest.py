import pytest

from linvar import presets


@pytest.fixture(scope="session")
def corpus():
    return presets.presets()


@pytest.fixture
def maltsev():
    return presets.maltsev()


@pytest.fixture
def majority():
    return presets.majority()


@pytest.fixture
def semilattice():
    return presets.semilattice()
