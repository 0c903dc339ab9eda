import numpy as np
import pytest
from hypothesis import settings

from rieszgas.special import ModelParams, build_kernel_table

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def kernel_cache():
    cache = {}

    def get(s, beta=1.0, n=16):
        if s not in cache:
            cache[s] = build_kernel_table(ModelParams(s, beta, n))
        return cache[s].with_params(ModelParams(s, beta, n))

    return get


@pytest.fixture(scope="session")
def model_half(kernel_cache):
    """s = 1/2, beta = 2, N = 16."""
    return kernel_cache(0.5, 2.0, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
