import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("fracfilt", max_examples=30, deadline=None)
settings.load_profile("fracfilt")


@pytest.fixture
def basis64():
    from fracfilt.basis import build_basis

    return build_basis(1.0, 1, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
