import pytest

from capscale import CostWeights
from capscale.presets import paper_dc_weights


@pytest.fixture(scope="session")
def dc_weights() -> CostWeights:
    return paper_dc_weights()


@pytest.fixture(scope="session")
def unit_weights() -> CostWeights:
    return CostWeights(1.0, 1.0, 1.0)
