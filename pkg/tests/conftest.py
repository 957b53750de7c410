from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SQRT2M1 = float(np.sqrt(2.0) - 1.0)
GOLDEN = float((np.sqrt(5.0) - 1.0) / 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
