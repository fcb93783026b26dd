"""Closed-form region predicates and sufficient conditions for the model.

Everything here is an explicit inequality in the dimensionless quantities

    d = D_i/D_g,  mu = r_i/lambda_g,  E_g = |C_g| sqrt(D_g/lambda_g),  sd = C_i d/|C_g|,
    omega = sqrt((d-4)/(d-1)),

evaluated strictly; a comparison whose sides agree to 1e-12 (relative) is
additionally flagged as a boundary case. ``classify_grid`` sweeps two of
(r_i, lambda_g, d, mu, sd, E_g) and produces one :class:`CellResult` per cell.
"""
from __future__ import annotations

import csv
import enum
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import optimize

from . import model
from .model import Convexity, ModelParams

SQRT3 = math.sqrt(3.0)
BOUNDARY_RTOL = 1e-12
MESSI_D = (5.0 + 2.0 * SQRT3) / 2.0          # ~ 4.23
POSITIVE_WINDOW_D = 4.0 + 2.0 * SQRT3        # ~ 7.46: omega > sqrt(3) - 1
INFLECTION_TOL = 1e-9


class Outcome(enum.Enum):
    APPLIES_YES = "applies-yes"
    APPLIES_NO = "applies-no"
    HYPOTHESES_UNMET = "hypotheses-unmet"


THEOREMS = ("mainmodel", "lmmk", "allk", "modelc<0", "messi", "convconc-e", "concconv-e")

CONCLUSIONS = {
    "mainmodel": "wavefronts exist",
    "lmmk": "wavefronts exist",
    "allk": "J is empty or meets (0, inf)",
    "modelc<0": "J is empty or contained in (-inf, 0)",
    "messi": "the negative-speed condition holds",
    "convconc-e": "wavefronts exist",
    "concconv-e": "wavefronts exist",
}


@dataclass(frozen=True)
class Inequality:
    """lhs < rhs, evaluated strictly."""
    name: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return bool(self.lhs < self.rhs)

    @property
    def boundary(self) -> bool:
        scale = max(abs(self.lhs), abs(self.rhs), 1.0)
        return abs(self.lhs - self.rhs) <= BOUNDARY_RTOL * scale

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "boundary": self.boundary}


def _between(name: str, lo: float, x: float, hi: float) -> tuple[Inequality, Inequality]:
    return Inequality(f"{name}>lo", lo, x), Inequality(f"{name}<hi", x, hi)


# -- polynomials -------------------------------------------------------------

def tau(omega, gamma, sd):
    """(9/(|C_g| D_g)) inf_[0,gamma] delta(f, alpha) for a concave model f."""
    return ((1 - sd) * (omega ** 2 + 9 * gamma ** 2 - 3 * omega * gamma)
            + (5 - 2 * sd) * omega - 3 * (7 - 4 * sd) * gamma + 4 - sd)


def tau_expanded(omega, gamma, sd):
    """tau from the grouped contributions of C_g D_g and C_i D_i (independent transcription)."""
    cg = -4 / 9 - 5 / 9 * omega - omega ** 2 / 9 + (7 + omega) / 3 * gamma - gamma ** 2
    ci = -1 / 9 - 2 / 9 * omega - omega ** 2 / 9 + (4 + omega) / 3 * gamma - gamma ** 2
    # C_g D_g = -|C_g| D_g and C_i D_i = sd |C_g| D_g
    return 9 * (-cg + sd * ci)


def dtau_dsd(omega, gamma):
    return -omega ** 2 - 9 * gamma ** 2 + 3 * omega * gamma - 2 * omega + 12 * gamma - 1


def H1(omega, gamma):
    return -gamma ** 2 - gamma * (omega - 7) / 3 + 10 / 9 * omega


def H2(omega, gamma):
    return gamma ** 2 + gamma * (omega - 4) / 3 - 4 / 9 * omega


def H1t(omega, gamma):
    return gamma ** 2 - gamma * (omega + 7) / 3 + 7 / 9 * omega + 4 / 3


def H2t(omega, gamma):
    return -gamma ** 2 + gamma * (omega + 4) / 3 - omega / 9 - 1 / 3


def E_neg(omega, sd):
    """Denominator of the negative-speed condition."""
    return (1 + omega) ** 2 + sd * (1 - omega ** 2) - 3


def S_bounds(omega: float) -> tuple[float, float]:
    return 1 + 1 / omega, 12 * (2 + 3 * omega) / (4 + omega) ** 2


def St_bounds(omega: float) -> tuple[float, float]:
    return -16 * omega / (omega + 2) ** 2, 1 - 1 / omega


def in_T(omega: float, gamma: float) -> bool:
    return 0 < omega < 1 and (2 - omega) / 3 < gamma < (2 + omega) / 3


def in_R(omega: float, gamma: float) -> bool:
    return SQRT3 - 1 < omega < 1 and (2 - omega) / 3 < gamma < 1 - 1 / SQRT3


def Rt_window(omega: float) -> tuple[float, float]:
    """Open window for lambda_g / r_i."""
    return 1 / (SQRT3 - 1), (1 + omega) / (2 - omega)


def in_S(omega: float, sd: float) -> bool:
    lo, hi = S_bounds(omega)
    return lo < sd < hi


def in_St(omega: float, sd: float) -> bool:
    lo, hi = St_bounds(omega)
    return lo < sd < hi


def _root_in_unit(coefs) -> float:
    p = np.polynomial.Polynomial(coefs)
    return float(optimize.brentq(p, 1e-9, 1 - 1e-9))


def omega0() -> float:
    """Where the two bounds of S cross: root of w^3 - 27 w^2 + 16 in (0, 1)."""
    return _root_in_unit([16.0, 0.0, -27.0, 1.0])


def omega0_tilde() -> float:
    """Where the two bounds of S-tilde cross: root of w^3 + 19 w^2 - 4 in (0, 1)."""
    return _root_in_unit([-4.0, 0.0, 19.0, 1.0])


# -- verdicts ----------------------------------------------------------------

@dataclass
class TheoremOutcome:
    name: str
    outcome: Outcome
    hypotheses: dict[str, bool]
    inequality: Inequality | None
    conclusion: str

    def to_dict(self) -> dict:
        return {"outcome": self.outcome.value, "hypotheses": dict(self.hypotheses),
                "inequality": None if self.inequality is None else self.inequality.to_dict(),
                "conclusion": self.conclusion}


def _outcome(name: str, hyps: dict[str, bool], ineq: Inequality | None) -> TheoremOutcome:
    if not all(hyps.values()) or ineq is None:
        out = Outcome.HYPOTHESES_UNMET
    else:
        out = Outcome.APPLIES_YES if ineq.holds else Outcome.APPLIES_NO
    return TheoremOutcome(name, out, hyps, ineq, CONCLUSIONS[name])


@dataclass
class RegionVerdict:
    in_Tg: bool
    in_R: bool
    in_Rt: bool
    in_S: bool
    in_St: bool
    tau: float | None
    H1: float | None
    H2: float | None
    H1t: float | None
    H2t: float | None
    gamma_inflection: float | None
    ssigma_lhs: float | None
    ssigma_rhs: float | None
    ssigma_rhs_bound: float | None
    concave_lhs: float | None
    theorems: dict[str, TheoremOutcome] = field(default_factory=dict)
    boundary: list[str] = field(default_factory=list)

    def outcome(self, name: str) -> Outcome:
        return self.theorems[name].outcome

    def flags(self) -> dict[str, bool]:
        return {"in_Tg": self.in_Tg, "in_R": self.in_R, "in_Rt": self.in_Rt,
                "in_S": self.in_S, "in_St": self.in_St}

    def quantities(self) -> dict[str, float | None]:
        return {"tau": self.tau, "H1": self.H1, "H2": self.H2, "H1t": self.H1t, "H2t": self.H2t,
                "gamma_inflection": self.gamma_inflection, "ssigma_lhs": self.ssigma_lhs,
                "ssigma_rhs": self.ssigma_rhs, "ssigma_rhs_bound": self.ssigma_rhs_bound,
                "concave_lhs": self.concave_lhs}

    def to_dict(self) -> dict:
        return {"flags": self.flags(), "quantities": self.quantities(),
                "theorems": {k: v.to_dict() for k, v in self.theorems.items()},
                "boundary": list(self.boundary)}


def _unmet_all(reason: str) -> dict[str, TheoremOutcome]:
    return {n: _outcome(n, {reason: False}, None) for n in THEOREMS}


def stima_dx_bound(params: ModelParams) -> float:
    """Upper bound for 2 sup sqrt(Delta(Dg, alpha)) + 2 sup sqrt(Delta(Dg, beta))."""
    P = params
    d = P.D_i / P.D_g
    om = model.omega_of_d(d)
    return math.sqrt(P.D_g) * math.sqrt(d - 1) * (math.sqrt(P.r_i * (2 + om))
                                                  + math.sqrt(P.lambda_g * (1 + om)))


def concave_lhs(params: ModelParams) -> float:
    """inf_[0,g] delta(f, alpha) - sup_[g,1] delta(f, beta) when f is strictly concave."""
    dv = model.derive(params)
    return 2 * dv.omega / 3 * (dv.p * (dv.gamma - 2 / 3) - dv.q)


def evaluate(params: ModelParams, numeric_ssigma: bool = True) -> RegionVerdict:
    """All flags, quantities and theorem outcomes for one parameter set."""
    P = params
    validity = model.validate(P)
    try:
        dv = model.derive(P)
    except model.ParameterError as exc:
        return RegionVerdict(False, False, False, False, False, *([None] * 10),
                             theorems=_unmet_all(f"derivable: {exc}"))
    om, gm, d, mu, E_g, sd = dv.omega, dv.gamma, dv.d, dv.mu, dv.E_g, dv.sd
    valid = validity.all_ok
    ineqs: list[Inequality] = []

    # membership
    lam_over_r = P.lambda_g / P.r_i if P.r_i > 0 else math.inf
    w13 = _between("restr1-3", (1 - om) / (2 + om), lam_over_r, (1 + om) / (2 - om))
    argen = Inequality("argen", P.r_i * (2 + om) + P.lambda_g * (1 + om),
                       8 * P.C_g ** 2 * P.D_g / 81 * (d - 4) / (d - 1) ** 2)
    in_Tg = P.r_i > 0 and P.lambda_g > 0 and all(i.holds for i in w13) and argen.holds
    rlo, rhi = Rt_window(om)
    wRt = _between("Rt", rlo, lam_over_r, rhi)
    in_Rt = P.r_i > 0 and P.lambda_g > 0 and all(i.holds for i in wRt)
    ineqs += [*w13, argen, *wRt]

    conv = model.classify_convexity(P)
    concave = conv.kind is Convexity.STRICTLY_CONCAVE
    flag_S = flag_St = False
    g_inf = h1 = h2 = h1t = h2t = None
    if sd is not None and sd != 1.0:
        g_inf = model.inflection_gamma(sd)
        h1, h2, h1t, h2t = H1(om, g_inf), H2(om, g_inf), H1t(om, g_inf), H2t(om, g_inf)
    if sd is not None and om > 0:
        slo, shi = S_bounds(om)
        tlo, thi = St_bounds(om)
        sS, sSt = _between("S", slo, sd, shi), _between("St", tlo, sd, thi)
        flag_S, flag_St = all(i.holds for i in sS), all(i.holds for i in sSt)
        ineqs += [*sS, *sSt]
    t = tau(om, gm, sd) if sd is not None else None

    lhs = rhs = None
    if numeric_ssigma and validity.shape_ok:
        from .thresholds import sufficient_condition
        sc = sufficient_condition(model.coefficients(P))
        lhs, rhs = sc.lhs, sc.rhs
    bound = stima_dx_bound(P) if validity.shape_ok else None
    c_lhs = concave_lhs(P) if concave else None

    th: dict[str, TheoremOutcome] = {}
    base = {"valid": valid}
    sdv = sd if sd is not None else math.nan

    restr3 = None
    if valid:
        restr3 = Inequality(
            "restr3",
            (d - 1) / math.sqrt(d - 4) * (math.sqrt(mu * (2 + om)) + math.sqrt(1 + om))
            / (2 * mu + 5 + sdv * (mu - 2)) * (mu + 1),
            2 / 9 * E_g)
    th["mainmodel"] = _outcome("mainmodel", {**base, "concave": concave}, restr3)

    lpoi = None
    if valid:
        lpoi = Inequality("lpoi", math.sqrt(mu * (2 + om) + (1 + om)) * (d - 1) / math.sqrt(d - 4),
                          4 / (9 * math.sqrt(2)) * E_g)
    th["lmmk"] = _outcome("lmmk", {**base, "concave": concave}, lpoi)

    ppoo = None
    if valid and t is not None and t > 0:
        ppoo = Inequality("ppoo", 18 * math.sqrt(mu * (d - 1)) / t, E_g)
    th["allk"] = _outcome("allk", {**base, "concave": concave, "in_Rt": in_Rt,
                                   "omega_window": SQRT3 - 1 < om < 1}, ppoo)

    neg = None
    if valid and sd is not None:
        # cleared of the denominator E(omega, sd): holds automatically when E <= 0
        radicand = (d - 1) * om * (1 + om) * (2 - om) * ((1 + om) * mu - (2 - om))
        neg = Inequality("negspeeds", E_neg(om, sd),
                         math.sqrt(max(radicand, 0.0)) / E_g)
    th["modelc<0"] = _outcome("modelc<0", {**base, "concave": concave}, neg)

    messi = Inequality("messi", d, MESSI_D) if valid else None
    th["messi"] = _outcome("messi", {**base, "concave": concave}, messi)

    infl_ok = g_inf is not None and abs(gm - g_inf) <= INFLECTION_TOL
    formula = None
    if valid and h1 is not None and flag_S:
        formula = Inequality("formula", math.sqrt(d - 1) / (h1 + sd * h2), E_g / 4)
    th["convconc-e"] = _outcome("convconc-e", {
        **base, "convex_concave": conv.kind is Convexity.CONVEX_CONCAVE,
        "gamma_is_inflection": infl_ok, "in_S": flag_S}, formula)
    formula2 = None
    if valid and h1t is not None and flag_St:
        formula2 = Inequality("formula2.2",
                              5 * math.sqrt(d - 1) / ((1 - om) * (h1t + sd * h2t)), E_g)
    th["concconv-e"] = _outcome("concconv-e", {
        **base, "concave_convex": conv.kind is Convexity.CONCAVE_CONVEX,
        "gamma_is_inflection": infl_ok, "in_St": flag_St}, formula2)

    for o in th.values():
        if o.inequality is not None:
            ineqs.append(o.inequality)
    boundary = sorted({i.name for i in ineqs if i.boundary})
    return RegionVerdict(in_Tg, in_R(om, gm), in_Rt, flag_S, flag_St, t, h1, h2, h1t, h2t,
                         g_inf, lhs, rhs, bound, c_lhs, th, boundary)


# -- grids -------------------------------------------------------------------

AXES = ("r_i", "lambda_g", "d", "mu", "sd", "E_g")
# axes are applied in this order so that e.g. (lambda_g, mu) sets r_i = mu * lambda_g
_APPLY_ORDER = ("lambda_g", "d", "E_g", "sd", "r_i", "mu")


class AxisError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


def parse_axes(spec: str) -> tuple[Axis, Axis]:
    """Parse ``"axis1=lo:hi:n,axis2=lo:hi:n"``."""
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    if len(parts) != 2:
        raise AxisError(f"need exactly two axes, got {spec!r}")
    axes = []
    for part in parts:
        try:
            name, rng = part.split("=")
            lo, hi, n = rng.split(":")
            ax = Axis(name.strip(), float(lo), float(hi), int(n))
        except ValueError as exc:
            raise AxisError(f"bad axis {part!r}; expected name=lo:hi:n") from exc
        if ax.n < 1 or not (math.isfinite(ax.lo) and math.isfinite(ax.hi)):
            raise AxisError(f"bad axis range {part!r}")
        axes.append(ax)
    check_axes(axes)
    return axes[0], axes[1]


def check_axes(axes) -> None:
    names = [a.name for a in axes]
    for n in names:
        if n not in AXES:
            raise AxisError(f"unknown axis {n!r}; choose two of {AXES}")
    if len(set(names)) != len(names):
        raise AxisError("axes must be distinct")
    if {"r_i", "mu"} <= set(names):
        raise AxisError("r_i and mu cannot both be axes (mu = r_i/lambda_g)")


def _sd_of(P: ModelParams) -> float:
    return P.C_i * P.D_i / (P.D_g * abs(P.C_g)) if P.C_g != 0 else 0.0


def set_axis(P: ModelParams, name: str, v: float) -> ModelParams:
    """Move one coordinate, holding the natural companions fixed.

    lambda_g keeps C_g and r_i; d and E_g keep sd; sd keeps C_g and d; r_i and
    mu change k_i only.
    """
    v = float(v)
    if name == "lambda_g":
        return replace(P, lambda_g=v)
    if name == "r_i":
        return replace(P, k_i=P.lambda_i + v)
    if name == "mu":
        return replace(P, k_i=P.lambda_i + v * P.lambda_g)
    sd = _sd_of(P)
    if name == "d":
        Q = replace(P, D_i=v * P.D_g)
        return replace(Q, C_i=sd * abs(Q.C_g) * Q.D_g / Q.D_i)
    if name == "sd":
        if P.C_g == 0:
            raise AxisError("sd axis needs C_g != 0")
        return replace(P, C_i=v * abs(P.C_g) * P.D_g / P.D_i)
    if name == "E_g":
        if not P.lambda_g > 0:
            raise AxisError("E_g axis needs lambda_g > 0")
        sign = -1.0 if P.C_g <= 0 else 1.0
        Q = replace(P, C_g=sign * v * math.sqrt(P.lambda_g / P.D_g))
        return replace(Q, C_i=sd * abs(Q.C_g) * Q.D_g / Q.D_i)
    raise AxisError(f"unknown axis {name!r}")


@dataclass
class CellResult:
    i: int
    j: int
    values: tuple[float, float]
    params: ModelParams
    validity: dict
    verdict: RegionVerdict
    numeric: dict | None = None


def _cell(args) -> CellResult:
    i, j, names, vals, base, numeric, numeric_ssigma, inflection = args
    P = base
    for name in _APPLY_ORDER:
        if name in names:
            P = set_axis(P, name, vals[names.index(name)])
    if inflection:
        sd = _sd_of(P)
        if sd not in (0.0, 1.0):
            P = set_axis(P, "r_i", model.implied_r_i(sd, P.lambda_g))
    validity = model.validate(P)
    verdict = evaluate(P, numeric_ssigma=numeric_ssigma)
    num = None
    if numeric and validity.shape_ok:
        from .thresholds import numeric_thresholds
        try:
            rep = numeric_thresholds(model.coefficients(P))
            num = {"verdict": rep.verdict.value, "c0": rep.c0, "c1": rep.c1}
        except Exception as exc:          # recorded per cell, never fatal for a scan
            num = {"verdict": "error", "c0": None, "c1": None, "error": str(exc)}
    return CellResult(i, j, tuple(vals), P, validity.to_dict(), verdict, num)


def classify_grid(axes, base: ModelParams, numeric: bool = False, numeric_ssigma: bool = False,
                  inflection: bool = False, workers: int = 1) -> list[CellResult]:
    """Row-major sweep over two axes; other coordinates come from ``base``.

    ``inflection=True`` resets r_i in every cell so that gamma sits at the
    inflection point of f (the setting of the S and S-tilde results).
    """
    axes = list(axes)
    if len(axes) != 2:
        raise AxisError("classify_grid needs exactly two axes")
    check_axes(axes)
    names = [a.name for a in axes]
    jobs = [(i, j, names, (x, y), base, numeric, numeric_ssigma, inflection)
            for (i, x), (j, y) in itertools.product(enumerate(axes[0].values()),
                                                    enumerate(axes[1].values()))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_cell(job) for job in jobs]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def atlas_rows(cells: list[CellResult], axes) -> tuple[list[str], list[list[str]]]:
    names = [a.name for a in axes]
    header = [*(f"axis_{n}" for n in names), *model.PARAM_KEYS, "valid", "d_shape", "g_shape", "gamma_between",
              "c_g_negative", "in_Tg", "in_R", "in_Rt", "in_S", "in_St", "tau", "H1", "H2",
              "H1t", "H2t", "gamma_inflection", "ssigma_lhs", "ssigma_rhs", "ssigma_rhs_bound",
              "concave_lhs", *THEOREMS, "boundary", "numeric_verdict", "c0", "c1"]
    rows = []
    for c in cells:
        v = c.verdict
        val = c.validity
        num = c.numeric or {}
        rows.append([
            *(_fmt(float(x)) for x in c.values),
            *(_fmt(getattr(c.params, k)) for k in model.PARAM_KEYS),
            _fmt(all(x["passed"] for x in val.values())),
            *(_fmt(val[k]["passed"]) for k in ("d_shape", "g_shape", "gamma_between",
                                               "c_g_negative")),
            *(_fmt(x) for x in v.flags().values()),
            *(_fmt(x) for x in v.quantities().values()),
            *(v.theorems[t].outcome.value for t in THEOREMS),
            ";".join(v.boundary),
            _fmt(num.get("verdict")), _fmt(num.get("c0")), _fmt(num.get("c1")),
        ])
    return header, rows


def atlas_csv(cells: list[CellResult], axes) -> str:
    header, rows = atlas_rows(cells, axes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_atlas(path: str | Path, cells: list[CellResult], axes) -> None:
    Path(path).write_text(atlas_csv(cells, axes))
