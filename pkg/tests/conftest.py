import numpy as np
import pytest

from loggas import equilibrium, potentials


@pytest.fixture(scope="session")
def semicircle():
    return equilibrium.solve_equilibrium(potentials.quadratic())


@pytest.fixture(scope="session")
def quartic():
    return equilibrium.solve_equilibrium(potentials.polynomial([0, 0, 0, 0, 0.25]))


def semicircle_cdf(x):
    """Closed-form CDF of (1/2pi) sqrt(4 - x^2)."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + (x * np.sqrt(4 - x * x) / 4 + np.arcsin(x / 2)) / np.pi
