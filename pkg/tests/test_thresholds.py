from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial

from fbwave import model, thresholds as th, triple as tr
from fbwave.thresholds import Verdict


def synthetic_triple(f_coef, a=0.3, b=0.8, g=0.5, label="synthetic"):
    """D = 3(u-a)(u-b), g = -u(u-1)(u-g): shapes (D) and (g) by construction."""
    D = (3 * Polynomial.fromroots([a, b])).coef
    gg = (-Polynomial.fromroots([0.0, 1.0, g])).coef
    return tr.polynomial_triple(f_coef, D, gg, a, b, g, label=label)


@pytest.fixture(scope="module")
def validated_triple(validated_params):
    return model.coefficients(validated_params)


@pytest.fixture(scope="module")
def validated_report(validated_triple):
    return th.numeric_thresholds(validated_triple, bisect_tol=1e-6)


def test_layout_signs(validated_triple):
    subs = th.build_subproblems(validated_triple)
    assert [subs[n].orientation for n in th.SUBINTERVALS] == [-1, -1, 1, 1]
    for sub in subs.values():
        sub.problem.check()          # Q > 0 inside, zero at both ends


def test_last_subinterval_is_untransformed(validated_triple):
    sub = th.build_subproblem(validated_triple, "beta_1")
    u = np.linspace(sub.lo, sub.hi, 50)
    np.testing.assert_array_equal(sub.problem.h(u), validated_triple.df(u))
    np.testing.assert_array_equal(sub.problem.Q(u), validated_triple.Dg(u))


@settings(max_examples=40, deadline=None)
@given(reflect=st.booleans(), z_sign=st.sampled_from([-1, 1]),
       lo=st.floats(0.0, 0.4), width=st.floats(0.1, 0.6))
def test_transform_is_an_involution(reflect, z_sign, lo, width):
    hi = lo + width
    h, Q = Polynomial([0.3, -1.0, 2.0]), Polynomial([0.1, 0.5, -0.7, 0.2])
    h1, Q1 = th.transform_pair(h, Q, lo, hi, reflect, z_sign)
    h2, Q2 = th.transform_pair(h1, Q1, lo, hi, reflect, z_sign)
    u = np.linspace(lo, hi, 17)
    np.testing.assert_allclose(h2(u), h(u), atol=1e-12)
    np.testing.assert_allclose(Q2(u), Q(u), atol=1e-12)


def test_subproblem_round_trip(validated_triple):
    for sub in th.build_subproblems(validated_triple).values():
        x = np.linspace(sub.lo, sub.hi, 9)
        z = -np.linspace(0.1, 1.0, 9)
        x2, z2 = sub.z_from_w(*sub.w_from_z(x, z))
        np.testing.assert_allclose(x2, x)
        np.testing.assert_allclose(z2, z)


def test_validated_example_report(validated_report):
    r = validated_report
    assert r.verdict is Verdict.EXISTS and r.c1 < r.c0
    assert all(r.sandwich_ok.values())
    assert r.c0 == min(r.thresholds["0_alpha"], r.thresholds["alpha_gamma"])
    assert r.c1 == max(r.thresholds["gamma_beta"], r.thresholds["beta_1"])
    data = json.loads(r.to_json())
    assert data["verdict"] == "Exists" and data["interval"]["open"] is True


def test_exists_implies_necessary_conditions(validated_triple, validated_report):
    assert validated_report.verdict is Verdict.EXISTS
    nec = th.necessary_conditions(validated_triple)
    assert nec.all
    assert nec.left >= validated_report.c0 - 1e-6
    assert nec.right <= validated_report.c1 + 1e-6


def test_speed_sign_consistency(validated_triple, validated_report):
    ss = th.speed_sign(validated_triple, validated_report)
    assert ss.sign is th.SpeedSign.ALL_NEGATIVE_OR_EMPTY
    assert validated_report.c0 < 0


def test_sufficient_condition_implies_exists(concave_triple, concave_report):
    assert th.sufficient_condition(concave_triple).holds
    assert concave_report.verdict is Verdict.EXISTS


def test_ramp_flux_moves_thresholds_monotonically(validated_triple):
    c0s, c1s = [], []
    for lam in (0.0, 1.0, 2.0):
        t = tr.add_flux(validated_triple, *tr.ramp_flux(lam, validated_triple.gamma))
        rep = th.numeric_thresholds(t, bisect_tol=1e-6)
        assert all(rep.sandwich_ok.values())
        c0s.append(rep.c0)
        c1s.append(rep.c1)
    # f' raised by lam on [0, gamma) and lowered by lam on (gamma, 1]
    np.testing.assert_allclose(np.diff(c0s), [1.0, 1.0], atol=1e-5)
    np.testing.assert_allclose(np.diff(c1s), [-1.0, -1.0], atol=1e-5)


def test_zero_flux_fails_first_necessary_condition():
    t = synthetic_triple([0.0])
    nec = th.necessary_conditions(t)
    assert nec.nec1_lhs == 0.0 and not nec.nec1


def test_convex_flux_on_middle_interval_has_no_front():
    t = synthetic_triple([0.0, 0.0, 2.0], label="convex")
    nec = th.necessary_conditions(t)
    assert not nec.nec1
    assert th.numeric_thresholds(t).verdict is Verdict.NOT_EXISTS


def test_decide_band():
    assert th.decide(1.0, 0.0, 1e-6) is Verdict.EXISTS
    assert th.decide(0.0, 1.0, 1e-6) is Verdict.NOT_EXISTS
    assert th.decide(1e-6, 0.0, 1e-6) is Verdict.INCONCLUSIVE
    assert th.decide(0.0, 1e-6, 1e-6) is Verdict.INCONCLUSIVE


def test_shape_errors_are_raised():
    bad = tr.polynomial_triple([0.0], [1.0], [0.0, 1.0, -1.0], 0.3, 0.8, 0.5)
    with pytest.raises(th.ShapeError):
        th.build_subproblems(bad)


def test_json_is_deterministic_and_round_trips():
    obj = {"b": np.float64(0.1), "a": [np.int64(3), np.bool_(True), float("inf")],
           "e": Verdict.EXISTS}
    text = th.dumps(obj)
    assert text == th.dumps(obj)
    back = json.loads(text)
    assert back["b"] == 0.1 and back["a"] == [3, True, "inf"] and back["e"] == "Exists"
