"""Threshold speeds of the four sub-interval problems and the existence verdict.

On each of [0, alpha], [alpha, gamma], [gamma, beta], [beta, 1] the reduced
problem  z' = f'(phi) - c - D g / z  is brought to the half-interval form
w' = h - c~ - Q / w,  w < 0, by

    x = rho(phi)  (identity, or the reflection lo + hi - phi;  eps = drho/dphi),
    w(phi) = s_z * z(x),       c~ = s_z * eps * c,
    h(phi) = s_z * eps * f'(x),    Q(phi) = eps * (D g)(x).

The map is an involution. Its ``orientation`` s_z * eps tells whether the
native threshold bounds c from above (-1: c <= c*) or from below (+1).
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import calculus
from .singular_ode import SingularProblem, ThresholdResult, threshold_cstar
from .triple import EquationTriple

Func = Callable[[np.ndarray], np.ndarray]

SUBINTERVALS = ("0_alpha", "alpha_gamma", "gamma_beta", "beta_1")


class ShapeError(ValueError):
    pass


class SpeedSignContradiction(RuntimeError):
    pass


@dataclass(frozen=True)
class SubproblemMap:
    name: str
    lo: float
    hi: float
    reflect: bool
    z_sign: int
    problem: SingularProblem

    @property
    def eps(self) -> int:
        return -1 if self.reflect else 1

    @property
    def orientation(self) -> int:
        """+1: admissible c >= c*;  -1: admissible c <= c*."""
        return self.z_sign * self.eps

    def rho(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self.lo + self.hi - phi if self.reflect else phi

    def to_native_speed(self, c: float) -> float:
        return self.orientation * c

    def z_from_w(self, phi_t, w):
        """Original (x, z) from transformed samples (phi_t, w)."""
        return self.rho(phi_t), self.z_sign * np.asarray(w, dtype=float)

    def w_from_z(self, x, z):
        return self.rho(x), self.z_sign * np.asarray(z, dtype=float)


def transform_pair(h: Func, Q: Func, lo: float, hi: float, reflect: bool,
                   z_sign: int) -> tuple[Func, Func]:
    """Apply the sub-interval change of variables to a (f', D g) pair."""
    eps = -1 if reflect else 1
    s = z_sign * eps

    def rho(phi):
        if not isinstance(phi, float):
            phi = np.asarray(phi, dtype=float)
        return lo + hi - phi if reflect else phi

    return (lambda phi: s * h(rho(phi))), (lambda phi: eps * Q(rho(phi)))


_LAYOUT = {
    # name: (reflect, z_sign)
    "0_alpha": (True, 1),
    "alpha_gamma": (False, -1),
    "gamma_beta": (True, -1),
    "beta_1": (False, 1),
}


def _ends(triple: EquationTriple, name: str) -> tuple[float, float]:
    a, b, g = triple.alpha, triple.beta, triple.gamma
    return {"0_alpha": (0.0, a), "alpha_gamma": (a, g),
            "gamma_beta": (g, b), "beta_1": (b, 1.0)}[name]


def build_subproblem(triple: EquationTriple, name: str) -> SubproblemMap:
    lo, hi = _ends(triple, name)
    reflect, z_sign = _LAYOUT[name]
    eps = -1 if reflect else 1
    s = z_sign * eps
    h, Q = transform_pair(triple.df, triple.Dg, lo, hi, reflect, z_sign)

    def rho(phi):
        if not isinstance(phi, float):
            phi = np.asarray(phi, dtype=float)
        return lo + hi - phi if reflect else phi

    f = triple.f
    x1 = hi if reflect else lo     # rho(sigma1)
    f_x1 = float(f(x1))

    def dQ(phi):
        return triple.dDg(rho(phi))

    def F(phi):
        return s * (f(rho(phi)) - f_x1)

    prob = SingularProblem(h=h, Q=Q, sigma1=lo, sigma2=hi, dQ=dQ, F=F, label=name)
    return SubproblemMap(name, lo, hi, reflect, z_sign, prob)


def build_subproblems(triple: EquationTriple, check: bool = True) -> dict[str, SubproblemMap]:
    if check:
        rep = triple.check_shape()
        if not rep.ok:
            raise ShapeError("; ".join(rep.messages))
    return {name: build_subproblem(triple, name) for name in SUBINTERVALS}


# ---------------------------------------------------------------- bounds

def _endpoint_root(triple: EquationTriple, x: float) -> float:
    rad = float(triple.dD(x) * triple.g(x))
    if rad < 0:
        raise ShapeError(f"negative radicand D'(x) g(x) = {rad} at x = {x}")
    return math.sqrt(rad)


def _inf_delta_f(triple, base, a, b):
    return calculus.extremum("inf", "delta", triple.f, base, a, b, dF=triple.df).value


def _sup_delta_f(triple, base, a, b):
    return calculus.extremum("sup", "delta", triple.f, base, a, b, dF=triple.df).value


def _sup_sqrt_Delta(triple, base, a, b):
    return calculus.sup_sqrt_mean(triple.Dg, base, a, b, dF=triple.dDg)


@dataclass(frozen=True)
class AnalyticBounds:
    s: dict[str, float]
    Sigma: dict[str, float]

    def pair(self, name: str) -> tuple[float, float]:
        return self.s[name], self.Sigma[name]

    def to_dict(self) -> dict:
        return {name: {"s": self.s[name], "Sigma": self.Sigma[name]} for name in SUBINTERVALS}


def analytic_bounds(triple: EquationTriple) -> AnalyticBounds:
    """Lower (s) and upper (Sigma) estimates of the four thresholds in original variables."""
    a, b, g = triple.alpha, triple.beta, triple.gamma
    ra, rb = _endpoint_root(triple, a), _endpoint_root(triple, b)
    dfa, dfb = float(triple.df(a)), float(triple.df(b))
    s, S = {}, {}
    for name, (lo, hi) in (("0_alpha", (0.0, a)), ("alpha_gamma", (a, g))):
        inf_d = _inf_delta_f(triple, a, lo, hi)
        s[name] = inf_d - 2.0 * _sup_sqrt_Delta(triple, a, lo, hi)
        S[name] = min(inf_d, dfa - 2.0 * ra)
    for name, (lo, hi) in (("gamma_beta", (g, b)), ("beta_1", (b, 1.0))):
        sup_d = _sup_delta_f(triple, b, lo, hi)
        s[name] = max(sup_d, dfb + 2.0 * rb)
        S[name] = sup_d + 2.0 * _sup_sqrt_Delta(triple, b, lo, hi)
    return AnalyticBounds(s, S)


def native_bounds(bounds: AnalyticBounds, sub: SubproblemMap) -> tuple[float, float]:
    lo, hi = bounds.pair(sub.name)
    if sub.orientation > 0:
        return lo, hi
    return -hi, -lo


# --------------------------------------------------------------- verdicts

class Verdict(enum.Enum):
    EXISTS = "Exists"
    NOT_EXISTS = "NotExists"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ThresholdReport:
    thresholds: dict[str, float]
    certificates: dict[str, ThresholdResult]
    bounds: AnalyticBounds
    c0: float
    c1: float
    verdict: Verdict
    bisect_tol: float
    label: str = ""
    sandwich_ok: dict[str, bool] = field(default_factory=dict)

    @property
    def interval(self) -> tuple[float, float] | None:
        return (self.c1, self.c0) if self.verdict is Verdict.EXISTS else None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.c0 + self.c1)

    def to_dict(self) -> dict:
        certs = {}
        for name, cert in self.certificates.items():
            d = cert.as_dict()
            d["native_cstar"] = d.pop("cstar")
            certs[name] = d
        return {
            "label": self.label,
            "bisect_tol": self.bisect_tol,
            "thresholds": dict(self.thresholds),
            "bounds": self.bounds.to_dict(),
            "sandwich_ok": dict(self.sandwich_ok),
            "c0": self.c0,
            "c1": self.c1,
            "verdict": self.verdict.value,
            "interval": None if self.interval is None else {
                "lower": self.c1, "upper": self.c0, "open": True,
                "endpoints": "status unknown"},
            "certificates": certs,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def decide(c0: float, c1: float, bisect_tol: float) -> Verdict:
    gap = c0 - c1
    if gap > 2.0 * bisect_tol:
        return Verdict.EXISTS
    if gap < -2.0 * bisect_tol:
        return Verdict.NOT_EXISTS
    return Verdict.INCONCLUSIVE


def threshold_for(sub: SubproblemMap, bounds: AnalyticBounds, bisect_tol: float = 1e-6
                  ) -> tuple[float, ThresholdResult]:
    """Threshold of one sub-interval, returned in the original speed variable."""
    lower, upper = native_bounds(bounds, sub)
    res = threshold_cstar(sub.problem, bisect_tol=bisect_tol, bounds=(lower, upper))
    return sub.orientation * res.cstar, res


def numeric_thresholds(triple: EquationTriple, bisect_tol: float = 1e-6,
                       bounds: AnalyticBounds | None = None) -> ThresholdReport:
    subs = build_subproblems(triple)
    bounds = bounds if bounds is not None else analytic_bounds(triple)
    values, certs, ok = {}, {}, {}
    for name, sub in subs.items():
        values[name], certs[name] = threshold_for(sub, bounds, bisect_tol)
        lo, hi = bounds.pair(name)
        ok[name] = bool(lo - 2 * bisect_tol <= values[name] <= hi + 2 * bisect_tol)
    c0 = min(values["0_alpha"], values["alpha_gamma"])
    c1 = max(values["gamma_beta"], values["beta_1"])
    return ThresholdReport(values, certs, bounds, c0, c1, decide(c0, c1, bisect_tol),
                           bisect_tol, triple.label, ok)


# ------------------------------------------------------ closed-form tests

@dataclass(frozen=True)
class NecessaryConditions:
    left: float       # min{inf_[0,g] delta(f,a), f'(a) - 2 sqrt(D'(a) g(a))}
    right: float      # max{sup_[g,1] delta(f,b), f'(b) + 2 sqrt(D'(b) g(b))}
    nec0: bool
    nec1_lhs: float
    nec1_rhs: float
    nec1: bool
    nec2_value: float
    nec2: bool

    @property
    def all(self) -> bool:
        return self.nec0 and self.nec1 and self.nec2

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _sides(triple: EquationTriple) -> tuple[float, float, float, float, float, float]:
    a, b, g = triple.alpha, triple.beta, triple.gamma
    inf_a = _inf_delta_f(triple, a, 0.0, g)
    sup_b = _sup_delta_f(triple, b, g, 1.0)
    ra, rb = _endpoint_root(triple, a), _endpoint_root(triple, b)
    return inf_a, sup_b, float(triple.df(a)), float(triple.df(b)), ra, rb


def necessary_conditions(triple: EquationTriple) -> NecessaryConditions:
    inf_a, sup_b, dfa, dfb, ra, rb = _sides(triple)
    left = float(min(inf_a, dfa - 2 * ra))
    right = float(max(sup_b, dfb + 2 * rb))
    lhs1, rhs1 = float(dfa - dfb), float(2 * ra + 2 * rb)
    gap = float(inf_a - sup_b)
    return NecessaryConditions(left, right, left >= right, lhs1, rhs1, lhs1 >= rhs1,
                               gap, gap >= 0)


@dataclass(frozen=True)
class SufficientCondition:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs > self.rhs


def sufficient_condition(triple: EquationTriple) -> SufficientCondition:
    """inf_[0,g] delta(f,a) - sup_[g,1] delta(f,b)  >  2 sup sqrt(Delta(Dg,a)) + 2 sup sqrt(Delta(Dg,b))."""
    a, b, g = triple.alpha, triple.beta, triple.gamma
    inf_a = _inf_delta_f(triple, a, 0.0, g)
    sup_b = _sup_delta_f(triple, b, g, 1.0)
    rhs = 2 * _sup_sqrt_Delta(triple, a, 0.0, g) + 2 * _sup_sqrt_Delta(triple, b, g, 1.0)
    return SufficientCondition(inf_a - sup_b, rhs)


class SpeedSign(enum.Enum):
    ALL_POSITIVE_OR_EMPTY = "AllPositiveOrEmpty"
    ALL_NEGATIVE_OR_EMPTY = "AllNegativeOrEmpty"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SpeedSignReport:
    sign: SpeedSign
    positive_condition: bool
    negative_condition: bool
    some_positive_condition: bool   # J empty or J meets (0, inf)

    def to_dict(self) -> dict:
        return {"sign": self.sign.value, "positive_condition": self.positive_condition,
                "negative_condition": self.negative_condition,
                "some_positive_condition": self.some_positive_condition}


def speed_sign(triple: EquationTriple, report: ThresholdReport | None = None) -> SpeedSignReport:
    inf_a, sup_b, dfa, dfb, ra, rb = _sides(triple)
    pos = max(sup_b, dfb + 2 * rb) > 0
    neg = min(inf_a, dfa - 2 * ra) < 0
    a, g = triple.alpha, triple.gamma
    some_pos = inf_a > 2 * _sup_sqrt_Delta(triple, a, 0.0, g)
    if pos and not neg:
        sign = SpeedSign.ALL_POSITIVE_OR_EMPTY
    elif neg and not pos:
        sign = SpeedSign.ALL_NEGATIVE_OR_EMPTY
    else:
        sign = SpeedSign.INDETERMINATE
    out = SpeedSignReport(sign, bool(pos), bool(neg), bool(some_pos))
    if report is not None and report.verdict is Verdict.EXISTS:
        tol = 2 * report.bisect_tol
        if pos and report.c1 < -tol:
            raise SpeedSignContradiction(f"positive-speed condition but c1 = {report.c1}")
        if neg and report.c0 > tol:
            raise SpeedSignContradiction(f"negative-speed condition but c0 = {report.c0}")
        if some_pos and report.c0 <= -tol:
            raise SpeedSignContradiction(f"positive-speed lemma condition but c0 = {report.c0}")
    return out


# ----------------------------------------------------------------- JSON

def _round17(obj):
    if isinstance(obj, float):
        # repr of a float is already the shortest string that round-trips
        if not math.isfinite(obj):
            return None if math.isnan(obj) else str(obj)
        return obj
    if isinstance(obj, (np.floating,)):
        return _round17(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats use the shortest repr that round-trips exactly."""
    return json.dumps(_round17(obj), indent=2, sort_keys=True)
