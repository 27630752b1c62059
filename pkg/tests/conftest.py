"""Shared models for the test suite.

Every model is built from expansion coefficients, so fixtures are exact and
cheap; they are session-scoped because models are immutable.
"""

import math

import numpy as np
import pytest

from bernstein_lab.core.bernstein_model import BernsteinModel
from bernstein_lab.core.special_functions import neumann_eigenvalues
from bernstein_lab.core.spectral_core import Geometry


@pytest.fixture(scope="session")
def sqrt_mu2() -> float:
    return float(neumann_eigenvalues(2).sqrt_values[1])


@pytest.fixture(scope="session")
def example1() -> BernsteinModel:
    """Interval, phi = 1 + cos(pi x) / 2, psi = 1, T = 1."""
    return BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 0.5], [1.0])


@pytest.fixture(scope="session")
def example2() -> BernsteinModel:
    """Disk, phi = (1 + J0(sqrt(mu_2) r)) / pi, psi = 1, T = 1."""
    return BernsteinModel.from_data(Geometry.DISK_RADIAL, 1.0, [1 / math.pi, 1 / math.pi], [1.0])


@pytest.fixture(scope="session")
def example1_potential() -> BernsteinModel:
    return BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 0.5], [1.0], potential=0.7)


@pytest.fixture(scope="session")
def cosine_psi() -> BernsteinModel:
    """Interval with both drifts active: psi = 1 + cos(pi x) / 4."""
    return BernsteinModel.from_data(Geometry.INTERVAL, 1.0, [1.0, 0.5], [1.0, 0.25])


@pytest.fixture(scope="session")
def bessel_psi() -> BernsteinModel:
    """Disk with psi = 1 + J0(sqrt(mu_2) r) / 4."""
    return BernsteinModel.from_data(Geometry.DISK_RADIAL, 1.0, [1 / math.pi, 1 / math.pi],
                                    [1.0, 0.25])


@pytest.fixture
def grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, 21)
