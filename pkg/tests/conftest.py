import pytest

from support import demo_coef, demo_spec, make_v100


@pytest.fixture
def v100():
    return make_v100()


@pytest.fixture
def spec():
    return demo_spec()


@pytest.fixture
def coef():
    return demo_coef()
