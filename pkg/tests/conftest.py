import numpy as np
import pytest

from arrowdec import FemConfig, build_model, partition


@pytest.fixture(scope="session")
def worked_model():
    """The 4x4 mesh with a fixed left edge: 16 elements, 40 free dofs."""
    return build_model(FemConfig(nx=4, ny=4))


@pytest.fixture(scope="session")
def worked_plan(worked_model):
    """Its 2x2 subdomain split; interface sets are pinned in the tests."""
    return partition(worked_model, 2, 2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
