from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbwave import calculus, model


def sq(x):
    return np.asarray(x) ** 2


def logistic(x):
    x = np.asarray(x)
    return x * (1 - x)


def test_difference_quotient_of_square():
    assert calculus.diff_quotient(sq, 0.3, 0.5) == pytest.approx(0.8, abs=1e-14)


def test_difference_quotient_removable_point_uses_derivative():
    assert calculus.diff_quotient(sq, 0.3, 0.3, dF=lambda x: 2 * np.asarray(x)) == pytest.approx(0.6)
    # central-difference fallback
    assert calculus.diff_quotient(sq, 0.3, 0.3) == pytest.approx(0.6, abs=1e-8)


def test_integral_mean_examples():
    assert calculus.integral_mean(sq, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert calculus.integral_mean(logistic, 0.0, 0.5) == pytest.approx(0.75, abs=1e-12)


def test_sup_of_integral_mean_of_logistic():
    ext = calculus.extremum("sup", "Delta", logistic, 0.0, 0.0, 1.0)
    assert ext.value == pytest.approx(1.0, abs=1e-8)
    assert ext.argument == pytest.approx(0.0, abs=1e-6)
    assert calculus.sup_sqrt_mean(logistic, 0.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-8)


def test_extremum_rejects_bad_requests():
    with pytest.raises(ValueError):
        calculus.extremum("sup", "delta", sq, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        calculus.extremum("max", "delta", sq, 0.0, 0.0, 1.0)


def test_sqrt_of_negative_mean_refused():
    with pytest.raises(ValueError):
        calculus.sup_sqrt_mean(lambda x: -1.0 - np.asarray(x) ** 2, 0.0, 0.1, 1.0)


def test_model_difference_quotient_closed_form(validated_params):
    """delta(f, alpha)(phi) of the model flux against its factored closed form."""
    P = validated_params
    dv = model.derive(P)
    f, _, _ = model.coefficient_polynomials(P)
    a = dv.alpha
    phi = np.linspace(0.0, 1.0, 101)
    phi = phi[np.abs(phi - a) > 1e-3]
    # f = -p u(1-u)^2 - q u(1-u) => (f(u)-f(a))/(u-a) from polynomial division
    quotient, _ = divmod(f - f(a), np.polynomial.Polynomial([-a, 1.0]))
    np.testing.assert_allclose(calculus.diff_quotient(f, a, phi), quotient(phi),
                               atol=1e-12, rtol=0)


quartic = st.lists(st.floats(-3, 3, allow_nan=False), min_size=5, max_size=5)


@settings(max_examples=60, deadline=None)
@given(coef=quartic, phi0=st.floats(0.0, 1.0), phi=st.floats(0.0, 1.0))
def test_mean_value_domination(coef, phi0, phi):
    """inf F' <= delta, Delta <= sup F' between phi0 and phi."""
    F = np.polynomial.Polynomial(coef)
    dF = F.deriv()
    lo, hi = sorted((phi0, phi))
    grid = np.linspace(lo, hi, 2001)
    fmin, fmax = dF(grid).min(), dF(grid).max()
    # sampled extrema of F' can miss the true ones by ~|F'''| dx^2 <= 1e-4
    slack = 1e-4
    dq = calculus.diff_quotient(F, phi0, phi, dF=dF)
    mean = calculus.integral_mean(F, phi0, phi, dF=dF)
    assert fmin - slack <= dq <= fmax + slack
    assert fmin - slack <= mean <= fmax + slack


@settings(max_examples=30, deadline=None)
@given(coef=quartic, phi0=st.floats(0.0, 1.0))
def test_delta_at_base_is_derivative(coef, phi0):
    F = np.polynomial.Polynomial(coef)
    dF = F.deriv()
    assert calculus.diff_quotient(F, phi0, phi0, dF=dF) == pytest.approx(dF(phi0), abs=1e-12)
