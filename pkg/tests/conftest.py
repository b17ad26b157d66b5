import numpy as np
import pytest

from ddrs.problems import gen_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_dataset():
    """A fast heterogeneous instance: 4 agents, 50x6 blocks, rank 2."""
    return gen_synthetic(4, 50, 6, 2, 0.8, seed=99)


@pytest.fixture(scope="session")
def bench_dataset():
    """The benchmark-scale synthetic instance used by the presets."""
    return gen_synthetic(8, 1000, 10, 5, 0.8, seed=214748364)
