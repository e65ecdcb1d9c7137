import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import semicircle_cdf
from loggas import equilibrium as eq, potentials as pt

# V = x^4/4: endpoint condition (1/2) mean(y V'(y)) = 1 over the arcsine law of
# [-b, b] gives b^4 * 3/16 = 1; the density is (1/2pi)(x^2 + b^2/2) sqrt(b^2 - x^2).
B_QUARTIC = (16.0 / 3.0) ** 0.25


def test_semicircle_support_and_density(semicircle):
    assert abs(semicircle.A + 2) < 1e-10 and abs(semicircle.B - 2) < 1e-10
    x = np.linspace(-2, 2, 401)
    exact = np.sqrt(np.maximum(4 - x * x, 0)) / (2 * np.pi)
    assert np.max(np.abs(semicircle.density(x) - exact)) < 1e-8


def test_semicircle_edge_constant(semicircle):
    assert semicircle.s_A == pytest.approx(1 / np.pi, rel=1e-10)
    for t in (1e-4, 1e-6):
        assert semicircle.density(-2 + t) / (semicircle.s_A * np.sqrt(t)) == pytest.approx(1, abs=1e-2)


def test_semicircle_cdf(semicircle):
    x = np.linspace(-2, 2, 201)
    np.testing.assert_allclose(semicircle.cdf(x), semicircle_cdf(x), atol=1e-10)
    assert semicircle.cdf(-2.0) == pytest.approx(0, abs=1e-14)
    assert semicircle.cdf(2.0) == pytest.approx(1, abs=1e-14)


def test_quartic_support_and_density(quartic):
    assert quartic.A == pytest.approx(-quartic.B, abs=1e-12)
    assert quartic.B == pytest.approx(B_QUARTIC, abs=1e-10)
    assert quartic.mass_defect < 1e-10
    x = np.linspace(-B_QUARTIC, B_QUARTIC, 301)
    exact = (x * x + B_QUARTIC**2 / 2) * np.sqrt(np.maximum(B_QUARTIC**2 - x * x, 0)) / (2 * np.pi)
    assert np.max(np.abs(quartic.density(x) - exact)) < 1e-8


def test_quartic_mass_by_quadrature(quartic):
    from scipy.integrate import quad
    mass, _ = quad(quartic.density, quartic.A, quartic.B, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_invariants_on_asymmetric_potential():
    m = eq.solve_equilibrium(pt.polynomial([0, 0.3, 0.4, 0.1, 0.15]))
    x = np.linspace(m.A, m.B, 400)[1:-1]
    assert np.all(m.h(x) > 0)
    assert np.all(np.diff(m.cdf(x)) > 0)
    assert m.mass_defect < 1e-10
    assert m.residual() < 1e-9
    for t in (1e-4, 1e-6):
        assert m.density(m.A + t) / (m.s_A * np.sqrt(t)) == pytest.approx(1, abs=1e-2)
        assert m.density(m.B - t) / (m.s_B * np.sqrt(t)) == pytest.approx(1, abs=1e-2)


def test_order_convergence():
    p = pt.polynomial([0, 0.3, 0.4, 0.1, 0.15])
    g1 = eq.classical_locations(eq.solve_equilibrium(p, order=64), 200).gamma
    g2 = eq.classical_locations(eq.solve_equilibrium(p, order=128), 200).gamma
    assert np.max(np.abs(g1 - g2)) < 1e-10


def test_classical_locations(semicircle):
    g = eq.classical_locations(semicircle, 1000).gamma
    assert g[499] == pytest.approx(0.0, abs=1e-12)
    assert g[-1] == semicircle.B
    # near the edge F(-2 + t) ~ (2/(3 pi)) t^{3/2}, so gamma_k + 2 ~ (3 pi k / 2N)^{2/3}
    k = np.arange(1, 11)
    ratio = (g[:10] + 2) / (3 * np.pi * k / 2000) ** (2 / 3)
    assert np.all(np.abs(ratio - 1) < 3 * (k / 1000) ** (2 / 3) + 1e-6)


def test_quantiles_alpha(semicircle):
    a = eq.quantiles_alpha(semicircle, semicircle.B, 1)
    assert a[0] == pytest.approx(0.0, abs=1e-12)
    a = eq.quantiles_alpha(semicircle, 0.0, 1)
    assert semicircle_cdf(a[0]) == pytest.approx(0.25, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.9, 2.0), st.integers(1, 30))
def test_quantiles_monotone(semicircle, y_plus, K):
    a = eq.quantiles_alpha(semicircle, y_plus, K)
    assert np.all(np.diff(a) >= 0) and a[-1] <= y_plus + 1e-12


def test_stieltjes(semicircle):
    z = 2j
    exact = (z - np.sqrt(z * z - 4 + 0j)) / 2
    assert exact == pytest.approx(1j * (1 - np.sqrt(2)))
    assert eq.stieltjes_equilibrium(semicircle, z) == pytest.approx(exact, abs=1e-10)
    assert eq.stieltjes_closed_form(semicircle, z) == pytest.approx(exact, abs=1e-10)
    w = 0.7 + 0.3j
    assert eq.stieltjes_equilibrium(semicircle, w.conjugate()) == pytest.approx(
        np.conj(eq.stieltjes_equilibrium(semicircle, w)), abs=1e-14)
    big = 1e4 * (1 + 1j)
    assert big * eq.stieltjes_equilibrium(semicircle, big) == pytest.approx(1, abs=1e-6)


def test_stieltjes_quartic_forms_agree(quartic):
    for z in (0.3 + 0.2j, -1.0 + 1.0j, 3j):
        assert eq.stieltjes_closed_form(quartic, z) == pytest.approx(eq.stieltjes_equilibrium(quartic, z), abs=1e-9)
