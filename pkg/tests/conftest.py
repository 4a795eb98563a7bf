import pytest

from adreward.encoding import DetRng
from adreward.group import default_group


@pytest.fixture(scope="session")
def group():
    return default_group()


@pytest.fixture
def rng():
    return DetRng("test-fixture")
