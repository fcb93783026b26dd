from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbwave import model
from fbwave.model import Convexity

from conftest import VALIDATED


def test_validated_example(validated_params):
    rep = model.validate(validated_params)
    assert rep.all_ok, rep.to_dict()
    dv = model.derive(validated_params)
    assert dv.omega == pytest.approx(0.755929, abs=1e-6)
    assert dv.alpha == pytest.approx(0.414690, abs=1e-6)
    assert dv.beta == pytest.approx(0.918643, abs=1e-6)
    assert dv.gamma == pytest.approx(0.5, abs=1e-15)
    assert dv.mu == pytest.approx(1.0)
    lo, hi = model.mu_window(dv.omega)
    assert (lo, hi) == pytest.approx((0.708497, 11.2915), abs=1e-4)


def test_diffusivity_at_two_thirds(validated_params):
    P = validated_params
    _, D, _ = model.coefficient_polynomials(P)
    assert D(2 / 3) == pytest.approx((-P.D_i + 4 * P.D_g) / 3, abs=1e-14)


def test_factored_matches_expanded(validated_params):
    u = np.linspace(0, 1, 201)
    fe, De, ge = model.coefficient_polynomials(validated_params)
    ff, Df, gf = model.factored_forms(validated_params)
    for a, b in ((fe, ff), (De, Df), (ge, gf)):
        np.testing.assert_allclose(a(u), b(u), atol=1e-12, rtol=0)


def test_triple_shape(validated_params):
    assert model.coefficients(validated_params).check_shape().ok


def test_validity_failures_are_reported():
    bad = model.ModelParams(**{**VALIDATED, "C_g": 6.0, "D_i": 3.0, "k_g": 0.5})
    rep = model.validate(bad)
    assert not rep.d_shape.passed and not rep.g_shape.passed
    assert not rep.c_g_negative.passed and not rep.gamma_between.passed
    assert "C_g" in rep.c_g_negative.reason


@settings(max_examples=80, deadline=None)
@given(d=st.floats(4.2, 50.0), mu_frac=st.floats(0.01, 0.99))
def test_mu_window_is_the_ordering_condition(d, mu_frac):
    om = model.omega_of_d(d)
    lo, hi = model.mu_window(om)
    for mu, inside in ((lo + mu_frac * (hi - lo), True), (lo * mu_frac, False),
                       (hi / mu_frac, False)):
        P = model.params_from_dimensionless(d, mu, 5.0, 0.5)
        dv = model.derive(P)
        assert (dv.alpha < dv.gamma < dv.beta) == inside
        assert model.validate(P).gamma_between.passed == inside


@pytest.mark.parametrize("sd, kind", [
    (0.0, Convexity.STRICTLY_CONCAVE),
    (1.5, Convexity.STRICTLY_CONCAVE),
    (2.2, Convexity.CONVEX_CONCAVE),
    (-1.0, Convexity.CONCAVE_CONVEX),
    (-3.0, Convexity.CONCAVE_CONVEX),
])
def test_convexity_examples(sd, kind):
    P = model.params_from_dimensionless(8.0, 1.0, 6.0, sd)
    assert model.classify_convexity(P).kind is kind


def test_convexity_against_second_derivative_grid():
    u = np.linspace(0, 1, 401)
    for sd in np.linspace(-3, 3, 61):
        P = model.params_from_dimensionless(8.0, 1.0, 6.0, float(sd))
        f2 = model.coefficient_polynomials(P)[0].deriv(2)(u)
        scale = max(abs(P.p), abs(P.q))
        kind = model.classify_convexity(P).kind
        if kind is Convexity.STRICTLY_CONCAVE:
            assert np.all(f2 <= 1e-9 * scale)
        elif kind is Convexity.STRICTLY_CONVEX:
            assert np.all(f2 >= -1e-9 * scale)
        elif kind is Convexity.CONVEX_CONCAVE:
            assert f2[0] > 0 > f2[-1]
        else:
            assert f2[0] < 0 < f2[-1]


def test_inflection_and_implied_growth():
    assert model.implied_r_i(2.2, 1.0) == pytest.approx(0.636364, abs=1e-6)
    assert model.inflection_gamma(2.2) == pytest.approx(0.388889, abs=1e-6)
    with pytest.raises(model.ParameterError):
        model.inflection_gamma(1.0)
    P = model.params_from_dimensionless(8.0, model.implied_r_i(2.2, 1.0), 6.0, 2.2)
    m = model.inflection_matches_gamma(P)
    assert m.matches and m.implied_valid
    infl = model.classify_convexity(P).inflection
    assert infl == pytest.approx(m.gamma_inflection, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(d=st.floats(4.5, 30), mu=st.floats(0.1, 5), E=st.floats(0.5, 80), sd=st.floats(-2, 2))
def test_dimensionless_round_trip(d, mu, E, sd):
    dv = model.derive(model.params_from_dimensionless(d, mu, E, sd))
    assert dv.d == pytest.approx(d, rel=1e-12)
    assert dv.mu == pytest.approx(mu, rel=1e-12)
    assert dv.E_g == pytest.approx(E, rel=1e-12)
    assert dv.sd == pytest.approx(sd, rel=1e-12, abs=1e-12)


def test_from_dict_is_strict(tmp_path):
    with pytest.raises(model.ParameterError, match="unknown"):
        model.ModelParams.from_dict({**VALIDATED, "extra": 1})
    with pytest.raises(model.ParameterError, match="missing"):
        model.ModelParams.from_dict({k: v for k, v in VALIDATED.items() if k != "C_i"})
    with pytest.raises(model.ParameterError):
        model.ModelParams.from_dict({**VALIDATED, "C_i": "0"})
    with pytest.raises(model.ParameterError):
        model.ModelParams.from_dict({**VALIDATED, "C_i": True})
    with pytest.raises(model.ParameterError):
        model.ModelParams.from_dict([1, 2])
    path = tmp_path / "p.json"
    path.write_text(json.dumps(VALIDATED))
    assert model.load_params(path) == model.ModelParams(**VALIDATED)
    path.write_text("{not json")
    with pytest.raises(model.ParameterError):
        model.load_params(path)
