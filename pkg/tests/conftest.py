import os
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from raman_echo.core import AdiabaticityWarning, SystemParams
from raman_echo.pulses import FrequencyGrid

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def matched():
    return SystemParams.matched()


@pytest.fixture
def narrow_grid():
    return FrequencyGrid(-3.0, 3.0, 2401)


@pytest.fixture(autouse=True)
def _quiet_adiabatic():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdiabaticityWarning)
        yield


def params(delta_in, gamma_r=1.0, t2_inv=0.0, **kw):
    return SystemParams.from_gamma_r(gamma_r, delta_in, t2_inv=t2_inv, **kw)


def rng(seed=0):
    return np.random.default_rng(seed)
