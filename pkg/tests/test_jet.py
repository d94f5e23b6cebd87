import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oufinite import jet as J
from oufinite.jet import Jet

xs = st.floats(0.1, 3.0)


def test_module_example():
    x = Jet.variable(2.0, 0, nvar=1, order=2)
    assert float(J.exp(x * x).deriv((1,))) == pytest.approx(4 * math.exp(4))


@given(xs)
def test_exp_log_derivatives(x0):
    x = Jet.variable(x0, 0, order=3)
    d = J.exp(2 * x).derivatives()
    assert np.allclose(d, [math.exp(2 * x0) * 2**k for k in range(4)], rtol=1e-13)
    d = J.log(x).derivatives()
    assert np.allclose(d, [math.log(x0), 1 / x0, -1 / x0**2, 2 / x0**3], rtol=1e-13)


@given(xs, st.floats(-2.5, 2.5))
def test_power_and_sqrt(x0, p):
    x = Jet.variable(x0, 0, order=2)
    d = x.power(p).derivatives()
    assert np.allclose(d, [x0**p, p * x0 ** (p - 1), p * (p - 1) * x0 ** (p - 2)], rtol=1e-12)
    assert np.allclose(J.sqrt(x).derivatives(), x.power(0.5).derivatives())


@given(xs, xs)
def test_quotient_rule(a, b):
    x = Jet.variable(a, 0, nvar=2, order=2)
    y = Jet.variable(b, 1, nvar=2, order=2)
    q = x / y
    assert float(q.deriv((1, 0))) == pytest.approx(1 / b)
    assert float(q.deriv((0, 1))) == pytest.approx(-a / b**2)
    assert float(q.deriv((1, 1))) == pytest.approx(-1 / b**2)
    assert float(q.deriv((0, 2))) == pytest.approx(2 * a / b**3)


def test_integer_power_matches_repeated_product():
    x = Jet.variable(1.3, 0, order=4)
    assert np.allclose((x**5).derivatives(), (x * x * x * x * x).derivatives())


def test_mixed_fourth_order():
    # d^4/dx^2 dy^2 of x^2 y^2 exp(x + y) at 0 is 4
    x = Jet.variable(0.0, 0, nvar=2, order=4)
    y = Jet.variable(0.0, 1, nvar=2, order=4)
    f = x * x * y * y * J.exp(x + y)
    assert float(f.deriv((2, 2))) == pytest.approx(4.0)


def test_batched_coefficients_broadcast():
    mu = np.linspace(0, 1, 5)
    lam = Jet.variable(2.0, 0, order=2)
    f = J.exp(-lam * mu)
    assert f.value.shape == (5,)
    assert np.allclose(f.deriv((1,)), -mu * np.exp(-2 * mu))


def test_complex_coefficients_and_conj():
    z = Jet.variable(1.0 + 0.5j, 0, order=2)
    f = J.exp(z)
    assert np.allclose(f.conj().value, np.conj(f.value))
    assert np.allclose(f.deriv((2,)), np.exp(1 + 0.5j))


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        Jet.variable(1.0, 0, order=1) + Jet.variable(1.0, 0, order=2)


def test_value_of_and_apply_series():
    assert J.value_of(3.0) == 3.0
    x = Jet.variable(0.5, 0, order=2)
    sin = lambda x0, k: [np.sin(x0), np.cos(x0), -np.sin(x0)][: k + 1]
    assert float(J.apply_series(x, sin).deriv((2,))) == pytest.approx(-math.sin(0.5))
    assert J.apply_series(0.5, sin) == pytest.approx(math.sin(0.5))
