"""Hermite polynomial evaluation and basis-conversion tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoslab.hermite import (
    hermite_eval,
    hermite_ladder,
    hermite_monomial_coeffs,
    monomial_hermite_coeffs,
)


def test_pinned_values_monic():
    assert hermite_eval(0, 1.7) == 1.0
    assert hermite_eval(1, 1.7) == pytest.approx(1.7, abs=1e-15)
    # He_2(x) = x^2 - 1 at x = 3
    assert hermite_eval(2, 3.0) == pytest.approx(8.0, abs=1e-12)
    # He_3(x) = x^3 - 3x at x = 2
    assert hermite_eval(3, 2.0) == pytest.approx(2.0, abs=1e-12)


def test_pinned_values_scaled():
    # scaled convention divides by q!
    assert hermite_eval(3, 2.0, normalization="scaled") == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert hermite_eval(2, 3.0, normalization="scaled") == pytest.approx(4.0, abs=1e-12)
    assert hermite_eval(0, 0.3, normalization="scaled") == 1.0


def test_array_broadcast():
    x = np.linspace(-4.0, 4.0, 17).reshape(17, 1)
    vals = hermite_eval(2, x)
    assert vals.shape == (17, 1)
    np.testing.assert_allclose(vals, x**2 - 1.0, atol=1e-12)


def test_input_validation():
    with pytest.raises(ValueError):
        hermite_eval(-1, 0.0)
    with pytest.raises(ValueError):
        hermite_eval(2, 0.0, normalization="physicist")


@given(
    q=st.integers(min_value=1, max_value=8),
    x=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
)
@settings(max_examples=200, deadline=None)
def test_three_term_recurrence(q, x):
    # He_{q+1}(x) = x He_q(x) - q He_{q-1}(x)
    lhs = hermite_eval(q + 1, x)
    rhs = x * hermite_eval(q, x) - q * hermite_eval(q - 1, x)
    assert lhs == pytest.approx(rhs, abs=1e-8 * max(1.0, abs(rhs)))


def test_derivative_ladder_finite_differences():
    # d/dx He_q = q He_{q-1}, checked by central differences on [-5, 5]
    h = 1e-6
    x = np.linspace(-5.0, 5.0, 101)
    for q in range(1, 7):
        numeric = (hermite_eval(q, x + h) - hermite_eval(q, x - h)) / (2.0 * h)
        exact = q * hermite_eval(q - 1, x)
        assert np.max(np.abs(numeric - exact)) < 1e-5 * max(1.0, float(np.max(np.abs(exact))))


def test_monomial_coeff_tables_invert_each_other():
    # x^m = sum_j monomial_hermite_coeffs(m)[j] He_j(x) and
    # He_q(x) = sum_j hermite_monomial_coeffs(q)[j] x^j must compose to identity.
    for m in range(9):
        to_hermite = monomial_hermite_coeffs(m)
        assert to_hermite.shape == (m + 1,)
        back = np.zeros(m + 1)
        for j, c in enumerate(to_hermite):
            mono = hermite_monomial_coeffs(j)
            back[: j + 1] += c * mono
        expected = np.zeros(m + 1)
        expected[m] = 1.0
        np.testing.assert_allclose(back, expected, atol=1e-10)


def test_monomial_hermite_expansion_evaluates_correctly():
    x = np.linspace(-3.0, 3.0, 25)
    for m in range(8):
        coeffs = monomial_hermite_coeffs(m)
        total = sum(c * hermite_eval(j, x) for j, c in enumerate(coeffs))
        np.testing.assert_allclose(total, x**m, atol=1e-9)


def test_hermite_monomial_known_rows():
    np.testing.assert_allclose(hermite_monomial_coeffs(2), [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(hermite_monomial_coeffs(3), [0.0, -3.0, 0.0, 1.0])
    np.testing.assert_allclose(hermite_monomial_coeffs(4), [3.0, 0.0, -6.0, 0.0, 1.0])


def test_ladder_matches_single_evaluations():
    x = np.linspace(-2.0, 2.0, 9)
    ladder = hermite_ladder(6, x)
    assert ladder.shape == (7, 9)
    for q in range(7):
        np.testing.assert_allclose(ladder[q], hermite_eval(q, x), atol=1e-12)


def test_gaussian_orthogonality_quadrature():
    # E[He_p(Z) He_q(Z)] = 1{p=q} q!, via Gauss-Hermite quadrature.
    nodes, weights = np.polynomial.hermite_e.hermegauss(40)
    weights = weights / weights.sum()
    for p in range(5):
        for q in range(5):
            moment = float(np.sum(weights * hermite_eval(p, nodes) * hermite_eval(q, nodes)))
            expected = math.factorial(q) if p == q else 0.0
            assert moment == pytest.approx(expected, abs=1e-8)
