import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from nullplane.numerics import QuadratureSpec, SmoothBump, SmoothFn1D
from nullplane.oneparticle import MassShellParams, ThinTestFunction


@pytest.fixture(scope="session")
def spec():
    return QuadratureSpec()


@pytest.fixture(scope="session")
def params():
    return MassShellParams(mass=1.0, dim=2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def zero_mean_u():
    """Order-1 lightlike factor, support (-0.7, 1.5)."""
    return SmoothFn1D.single(0.4, 1.1, derivative_order=1)


@pytest.fixture(scope="session")
def transverse_v():
    return SmoothFn1D.single(0.0, 1.2)


@pytest.fixture(scope="session")
def thin_zero_mean(zero_mean_u, transverse_v):
    return ThinTestFunction.separable(zero_mean_u, transverse_v)


@pytest.fixture(scope="session")
def balanced_u():
    """Zero mean and zero first moment: fast decay at both grid ends."""
    return SmoothFn1D((
        (1.0, SmoothBump(-0.4, 1.5, 1.0, 1)),
        (1.0, SmoothBump(0.4, 1.5, -1.0, 1)),
    ))


@pytest.fixture(scope="session")
def thin_balanced(balanced_u):
    return ThinTestFunction.separable(balanced_u, SmoothFn1D.single(0.0, 1.3))
