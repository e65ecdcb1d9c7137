import numpy as np
import pytest

from loggas import potentials as pt
from loggas.errors import ConfigError, DomainError


def test_eval_examples():
    assert pt.eval_potential(pt.quadratic(), 2.0, 1) == 2.0
    assert pt.eval_potential(pt.quadratic(), 0.0, 0) == 0.0
    assert pt.eval_potential(pt.polynomial([0, 0, 0, 0, 0.25]), 1.0, 2) == 3.0


def test_eval_vectorized_and_high_order():
    q = pt.polynomial([1, -2, 0, 0, 0.25])
    x = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(q(x), 1 - 2 * x + x**4 / 4)
    np.testing.assert_allclose(q(x, 1), -2 + x**3)
    np.testing.assert_allclose(q(x, 3), 6 * x)
    assert q(0.5, 4) == 6.0


def test_eval_rejects_bad_input():
    with pytest.raises(DomainError):
        pt.eval_potential(pt.quadratic(), np.nan)
    with pytest.raises(DomainError):
        pt.eval_potential(pt.quadratic(), 1.0, 5)


def test_constructors_validate():
    with pytest.raises(ConfigError):
        pt.polynomial([0, 0, 0, 1])          # odd degree
    with pytest.raises(ConfigError):
        pt.polynomial([0, 0, -1])            # negative leading coefficient
    with pytest.raises(ConfigError):
        pt.quadratic(0.0)
    with pytest.raises(ConfigError):
        pt.from_callables(np.cosh, np.sinh, None)
    assert pt.from_config({"kind": "polynomial", "coeffs": [0, 0, 1]}).coeffs == (0.0, 0.0, 1.0)


def test_confinement_theta_examples():
    assert pt.confinement_theta(-1.0, 0) == 0.0
    assert pt.confinement_theta(-3.0, 0) == 4.0
    assert pt.confinement_theta(0.5, 1) == 0.0
    assert pt.confinement_theta(-3.0, 1) == -4.0
    assert pt.confinement_theta(-3.0, 2) == 2.0


def test_assumptions_quadratic_pass():
    r = pt.check_assumptions(pt.quadratic(W=0.0, alpha=1.0))
    assert r.ok and r.convexity_ok and r.growth_ok and r.derivative_ok


def test_assumptions_log_growth_fails():
    def V(x):
        return np.log1p(np.abs(x))

    def dV(x):
        return np.sign(x) / (1 + np.abs(x))

    def d2V(x):
        return -1.0 / (1 + np.abs(x)) ** 2

    r = pt.check_assumptions(pt.from_callables(V, dV, d2V, alpha=1.0, W=1.0))
    assert not r.growth_ok


def test_assumptions_quartic():
    # x^4/4 - 4 ln(1+x) > 0 for x >= 3 (at 3: 20.25 - 5.55)
    r = pt.check_assumptions(pt.polynomial([0, 0, 0, 0, 0.25], alpha=2.0, x0=3.0))
    assert r.convexity_ok and r.growth_ok
    assert min(r.growth_margin.values()) > 0
    assert r.inf_d2V >= 0


def test_derivative_check_catches_wrong_derivative():
    r = pt.check_assumptions(pt.from_callables(lambda x: x**2, lambda x: x, lambda x: 2 + 0 * x))
    assert not r.derivative_ok
