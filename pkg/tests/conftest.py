import pytest

from mvfbsde import PAPER_PARAMS, LQParams


@pytest.fixture(scope="session")
def paper_params() -> LQParams:
    return PAPER_PARAMS
