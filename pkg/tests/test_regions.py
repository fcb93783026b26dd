from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbwave import model, regions as rg, thresholds as th
from fbwave.regions import Outcome

SQRT3 = math.sqrt(3.0)


def test_tau_examples():
    assert rg.tau(0.8, 0.42, 0.0) == pytest.approx(0.3996, abs=1e-12)
    w, g = 0.7, 0.45
    assert rg.tau(w, g, 0.0) == pytest.approx(w * w + 9 * g * g - 3 * w * g + 5 * w - 21 * g + 4)


@settings(max_examples=200, deadline=None)
@given(w=st.floats(0, 1), g=st.floats(0, 1), sd=st.floats(-3, 3))
def test_tau_transcriptions_agree(w, g, sd):
    assert rg.tau(w, g, sd) == pytest.approx(rg.tau_expanded(w, g, sd), abs=1e-10)
    h = 1e-6
    fd = (rg.tau(w, g, sd + h) - rg.tau(w, g, sd - h)) / (2 * h)
    assert rg.dtau_dsd(w, g) == pytest.approx(fd, abs=1e-6)


def test_tau_increases_with_sd_on_triangle():
    rng = np.random.default_rng(7)
    n = 0
    while n < 500:
        w, g = rng.uniform(0, 1), rng.uniform(0, 1)
        if rg.in_T(w, g):
            assert rg.dtau_dsd(w, g) > 0
            n += 1


def test_tau_positive_on_R_grid():
    ws = np.linspace(SQRT3 - 1, 1, 24)[1:-1]
    count = 0
    for w in ws:
        for g in np.linspace((2 - w) / 3, 1 - 1 / SQRT3, 24)[1:-1]:
            assert rg.in_R(w, g)
            sds = np.linspace(0, 1.5, 21)
            assert np.all(rg.tau(w, g, sds) > 0)
            count += sds.size
    assert count >= 10_000


def _h_grid(w_lo, bounds):
    for w in np.linspace(w_lo, 1, 101)[1:-1]:
        lo, hi = bounds(w)
        for sd in np.linspace(lo, hi, 101)[1:-1]:
            yield w, sd, model.inflection_gamma(sd)


def test_H_positive_on_S_grid():
    for w, sd, g in _h_grid(rg.omega0(), rg.S_bounds):
        assert rg.in_S(w, sd)
        assert rg.H1(w, g) + sd * rg.H2(w, g) > 0


def test_Htilde_positive_on_St_grid():
    for w, sd, g in _h_grid(rg.omega0_tilde(), rg.St_bounds):
        assert rg.in_St(w, sd)
        assert rg.H1t(w, g) + sd * rg.H2t(w, g) > 0


def test_H_bounds():
    w = np.linspace(0, 1, 101)[1:-1, None]
    g = np.linspace(1 / 3, 2 / 3, 101)[None, 1:-1]
    assert np.all(rg.H1(w, g) > 2 / 3 + w)
    # the H2 bound is the minimum over gamma, attained at gamma = (4 - w)/6
    assert np.all(rg.H2(w, g) >= -((4 + w) / 6) ** 2 - 1e-15)
    wv = 0.5
    assert rg.H2(wv, (4 - wv) / 6) == pytest.approx(-((4 + wv) / 6) ** 2, abs=1e-15)


def test_membership_examples():
    assert rg.S_bounds(0.9) == pytest.approx((2.1111, 2.3490), abs=1e-4)
    assert rg.in_S(0.9, 2.2)
    assert rg.St_bounds(0.6) == pytest.approx((-1.4201, -0.6667), abs=1e-4)
    assert rg.in_St(0.6, -1.0)
    om = model.omega_of_d(10.0)
    assert om == pytest.approx(math.sqrt(2 / 3))
    lo, hi = rg.Rt_window(om)
    assert (lo, hi) == pytest.approx((1.3660, 1.5349), abs=1e-4)
    assert lo < 1.45 < hi


def test_root_certificates():
    assert rg.omega0() == pytest.approx(0.78, abs=0.01)
    assert rg.omega0_tilde() == pytest.approx(0.45, abs=0.01)
    lo, hi = rg.S_bounds(rg.omega0())
    assert lo == pytest.approx(hi, abs=1e-9)
    lo, hi = rg.St_bounds(rg.omega0_tilde())
    assert lo == pytest.approx(hi, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(d=st.floats(7.5, 40), gfrac=st.floats(0.01, 0.99))
def test_R_iff_Rt(d, gfrac):
    """(omega, gamma) in R  <=>  lambda_g / r_i in the R-tilde window."""
    w = model.omega_of_d(d)
    lo_g, hi_g = (2 - w) / 3, (2 + w) / 3
    g = lo_g + gfrac * (hi_g - lo_g)
    lam_over_r = (1 - g) / g
    rlo, rhi = rg.Rt_window(w)
    in_window = rlo < lam_over_r < rhi
    assert rg.in_R(w, g) == in_window


def test_concave_example_verdict(concave_params):
    v = rg.evaluate(concave_params)
    assert v.outcome("lmmk") is Outcome.APPLIES_YES
    assert v.outcome("mainmodel") is Outcome.APPLIES_YES
    assert v.theorems["lmmk"].inequality.lhs == pytest.approx(7.43, abs=0.01)
    # concave bridge: closed form equals the numerically evaluated left side
    assert v.concave_lhs == pytest.approx(v.ssigma_lhs, rel=1e-8)
    assert v.ssigma_rhs <= v.ssigma_rhs_bound
    assert v.outcome("convconc-e") is Outcome.HYPOTHESES_UNMET


def test_messi_and_negative_speeds():
    P = model.params_from_dimensionless(4.1, 2.0, 75.0, 0.0)
    v = rg.evaluate(P, numeric_ssigma=False)
    assert v.outcome("messi") is Outcome.APPLIES_YES
    assert v.outcome("modelc<0") is Outcome.APPLIES_YES
    assert rg.MESSI_D == pytest.approx(4.23, abs=0.01)


def test_positive_speed_example():
    P = model.params_from_dimensionless(10.0, 1 / 1.45, 70.0, 0.0)
    v = rg.evaluate(P, numeric_ssigma=False)
    assert v.in_R and v.in_Rt and v.in_Tg
    assert v.tau == pytest.approx(0.677, abs=1e-3)
    assert v.theorems["allk"].inequality.lhs == pytest.approx(66.2, abs=0.1)
    assert v.outcome("allk") is Outcome.APPLIES_YES
    assert rg.POSITIVE_WINDOW_D == pytest.approx(7.46, abs=0.01)


def test_invalid_parameters_leave_hypotheses_unmet(validated_params):
    v = rg.evaluate(validated_params.with_(C_g=6.0), numeric_ssigma=False)
    assert all(o.outcome is Outcome.HYPOTHESES_UNMET for o in v.theorems.values())
    v = rg.evaluate(validated_params.with_(D_i=3.0), numeric_ssigma=False)
    assert not v.in_Tg
    assert all(o.outcome is Outcome.HYPOTHESES_UNMET for o in v.theorems.values())


@settings(max_examples=4, deadline=None)
@given(mu=st.floats(0.8, 3.0), E=st.floats(40.0, 60.0))
def test_sufficient_conditions_imply_exists(mu, E):
    P = model.params_from_dimensionless(8.0, mu, E, 0.0)
    v = rg.evaluate(P, numeric_ssigma=False)
    rep = th.numeric_thresholds(model.coefficients(P), bisect_tol=1e-5)
    if v.outcome("lmmk") is Outcome.APPLIES_YES:
        assert rep.verdict is th.Verdict.EXISTS
    if v.outcome("modelc<0") is Outcome.APPLIES_YES and rep.verdict is th.Verdict.EXISTS:
        assert rep.c0 < 0


def test_axes_parsing():
    a, b = rg.parse_axes("r_i=0.005:0.2:5, lambda_g=0.01:0.2:4")
    assert (a.name, b.name, a.n, b.n) == ("r_i", "lambda_g", 5, 4)
    for bad in ("r_i=0:1:3", "r_i=0:1:3,foo=0:1:2", "r_i=0:1:3,r_i=0:1:2",
                "r_i=0:1:3,mu=0:1:3", "r_i=0:1,d=4:5:2", "r_i=0:1:0,d=4:5:2"):
        with pytest.raises(rg.AxisError):
            rg.parse_axes(bad)


def test_set_axis_keeps_companions(validated_params):
    P = validated_params.with_(C_i=0.3)
    sd0 = model.derive(P).sd
    Q = rg.set_axis(P, "d", 12.0)
    assert model.derive(Q).d == pytest.approx(12.0) and model.derive(Q).sd == pytest.approx(sd0)
    Q = rg.set_axis(P, "E_g", 20.0)
    assert model.derive(Q).E_g == pytest.approx(20.0) and model.derive(Q).sd == pytest.approx(sd0)
    Q = rg.set_axis(P, "mu", 2.0)
    assert model.derive(Q).mu == pytest.approx(2.0)


def test_scan_reproduces_nested_triangles(validated_params):
    axes = rg.parse_axes("r_i=0.005:0.2:20,lambda_g=0.005:0.2:20")
    inside = {}
    for d in (5.0, 8.0):
        base = rg.set_axis(validated_params, "d", d)
        cells = rg.classify_grid(axes, base)
        assert [(c.i, c.j) for c in cells] == [(i, j) for i in range(20) for j in range(20)]
        inside[d] = {(c.i, c.j) for c in cells if c.verdict.in_Tg}
    assert inside[5.0] and inside[8.0]
    assert inside[5.0] < inside[8.0]


def test_atlas_is_deterministic(validated_params):
    axes = rg.parse_axes("d=5:12:4,mu=0.5:3:3")
    cells = rg.classify_grid(axes, validated_params)
    text = rg.atlas_csv(cells, axes)
    assert text == rg.atlas_csv(rg.classify_grid(axes, validated_params, workers=2), axes)
    header = text.splitlines()[0].split(",")
    assert header[:2] == ["axis_d", "axis_mu"]
    assert len(set(header)) == len(header)
    assert len(text.splitlines()) == 1 + 12
