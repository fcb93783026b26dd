"""Biased-movement population model: parameters, coefficients, diagnostics.

Isolated (i) and grouped (g) organisms with bias strengths C, diffusivities D,
birth rates lambda and death rates k give

    f(u) = -(C_i D_i + C_g D_g) u (1-u)^2 - C_g D_g u (1-u)
    D(u) = D_i (1 - 4u + 3u^2) + D_g (4u - 3u^2)
    g(u) = lambda_g u (1-u) + [lambda_i - lambda_g - (k_i - k_g)] u (1-u)^2 - k_g u
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from .triple import EquationTriple, polynomial_triple

PARAM_KEYS = ("C_i", "C_g", "D_i", "D_g", "lambda_i", "lambda_g", "k_i", "k_g")


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    C_i: float
    C_g: float
    D_i: float
    D_g: float
    lambda_i: float
    lambda_g: float
    k_i: float
    k_g: float

    @property
    def r_i(self) -> float:
        return self.k_i - self.lambda_i

    @property
    def p(self) -> float:
        return self.C_i * self.D_i + self.C_g * self.D_g

    @property
    def q(self) -> float:
        return self.C_g * self.D_g

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        if not isinstance(data, dict):
            raise ParameterError("parameter file must hold a JSON object")
        keys = set(data)
        unknown = keys - set(PARAM_KEYS)
        missing = set(PARAM_KEYS) - keys
        if unknown:
            raise ParameterError(f"unknown keys: {sorted(unknown)}")
        if missing:
            raise ParameterError(f"missing keys: {sorted(missing)}")
        vals = {}
        for k in PARAM_KEYS:
            v = data[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{k} must be a finite number, got {v!r}")
            vals[k] = float(v)
        return cls(**vals)


def load_params(path: str | Path) -> ModelParams:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"invalid JSON in {path}: {exc}") from exc
    return ModelParams.from_dict(data)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    reason: str


@dataclass(frozen=True)
class ValidityReport:
    d_shape: Check
    g_shape: Check
    gamma_between: Check
    c_g_negative: Check

    @property
    def checks(self) -> tuple[Check, ...]:
        return (self.d_shape, self.g_shape, self.gamma_between, self.c_g_negative)

    @property
    def shape_ok(self) -> bool:
        return self.d_shape.passed and self.g_shape.passed and self.gamma_between.passed

    @property
    def all_ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "reason": c.reason} for c in self.checks}


def omega_of_d(d: float) -> float:
    return math.sqrt((d - 4.0) / (d - 1.0))


def mu_window(omega: float) -> tuple[float, float]:
    """Open interval of mu = r_i/lambda_g for which alpha < gamma < beta."""
    return (2.0 - omega) / (1.0 + omega), (2.0 + omega) / (1.0 - omega)


def validate(params: ModelParams) -> ValidityReport:
    P = params
    if P.D_g > 0 and P.D_i > 4.0 * P.D_g:
        d_shape = Check("d_shape", True, "D_i > 4 D_g > 0")
    else:
        d_shape = Check("d_shape", False,
                        f"D needs D_i > 4 D_g > 0 (D_i={P.D_i}, D_g={P.D_g})")
    g_fail = []
    if P.k_g != 0.0:
        g_fail.append(f"k_g must be 0 (got {P.k_g})")
    if not P.lambda_g > 0:
        g_fail.append(f"lambda_g must be > 0 (got {P.lambda_g})")
    if not P.r_i > 0:
        g_fail.append(f"r_i = k_i - lambda_i must be > 0 (got {P.r_i})")
    g_shape = Check("g_shape", not g_fail, "; ".join(g_fail) or "k_g = 0, lambda_g > 0, r_i > 0")
    if d_shape.passed and g_shape.passed:
        om = omega_of_d(P.D_i / P.D_g)
        lo, hi = mu_window(om)
        mu = P.r_i / P.lambda_g
        inside = lo < mu < hi
        gamma_between = Check("gamma_between", inside,
                              f"mu={mu:.6g} {'in' if inside else 'not in'} ({lo:.6g}, {hi:.6g})")
    else:
        gamma_between = Check("gamma_between", False, "undefined: D or g shape invalid")
    neg = P.C_g < 0
    c_g = Check("c_g_negative", neg, "C_g < 0" if neg else
                f"C_g = {P.C_g} >= 0 rules out decreasing wavefronts")
    return ValidityReport(d_shape, g_shape, gamma_between, c_g)


@dataclass(frozen=True)
class DerivedParams:
    alpha: float
    beta: float
    gamma: float
    omega: float
    d: float
    s: float | None
    mu: float
    E_g: float
    p: float
    q: float
    r_i: float

    @property
    def sd(self) -> float | None:
        return None if self.s is None else self.s * self.d

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sd"] = self.sd
        return out


def derive(params: ModelParams) -> DerivedParams:
    P = params
    if not (P.D_g > 0 and P.D_i > 4.0 * P.D_g):
        raise ParameterError("derive needs D_i > 4 D_g > 0")
    if not P.lambda_g > 0:
        raise ParameterError("derive needs lambda_g > 0")
    d = P.D_i / P.D_g
    om = omega_of_d(d)
    r = P.r_i
    return DerivedParams(
        alpha=2.0 / 3.0 - om / 3.0,
        beta=2.0 / 3.0 + om / 3.0,
        gamma=r / (r + P.lambda_g),
        omega=om,
        d=d,
        s=P.C_i / abs(P.C_g) if P.C_g != 0 else None,
        mu=r / P.lambda_g,
        E_g=abs(P.C_g) * math.sqrt(P.D_g / P.lambda_g),
        p=P.p,
        q=P.q,
        r_i=r,
    )


def coefficient_polynomials(params: ModelParams) -> tuple[Polynomial, Polynomial, Polynomial]:
    """Expanded f, D, g as power-basis polynomials."""
    P = params
    u = Polynomial([0.0, 1.0])
    one = Polynomial([1.0])
    f = -P.p * u * (one - u) ** 2 - P.q * u * (one - u)
    D = P.D_i * (one - 4 * u + 3 * u ** 2) + P.D_g * (4 * u - 3 * u ** 2)
    g = (P.lambda_g * u * (one - u)
         + (P.lambda_i - P.lambda_g - (P.k_i - P.k_g)) * u * (one - u) ** 2
         - P.k_g * u)
    return f, D, g


def factored_forms(params: ModelParams):
    """f, D, g from the factored representation (needs a valid shape)."""
    P = params
    dv = derive(P)
    a, b, gm = dv.alpha, dv.beta, dv.gamma

    def f(u):
        return -P.p * u * (1 - u) ** 2 - P.q * u * (1 - u)

    def D(u):
        return 3.0 * (P.D_i - P.D_g) * (u - a) * (u - b)

    def g(u):
        return (P.r_i + P.lambda_g) * u * (1 - u) * (u - gm)

    return f, D, g


def coefficients(params: ModelParams) -> EquationTriple:
    f, D, g = coefficient_polynomials(params)
    dv = derive(params)
    return polynomial_triple(f.coef, D.coef, g.coef, dv.alpha, dv.beta, dv.gamma,
                             label="biased-movement model")


class Convexity(enum.Enum):
    STRICTLY_CONCAVE = "strictly_concave"
    STRICTLY_CONVEX = "strictly_convex"
    CONVEX_CONCAVE = "convex_concave"
    CONCAVE_CONVEX = "concave_convex"
    AFFINE = "affine"


@dataclass(frozen=True)
class ConvexityClass:
    kind: Convexity
    inflection: float | None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "inflection": self.inflection}


def classify_convexity(params: ModelParams) -> ConvexityClass:
    """Sign pattern of f''(u) = -6pu + 4p + 2q on (0, 1); f'' is affine in u."""
    p, q = params.p, params.q
    left, right = 2.0 * p + q, -p + q     # f''/2 at u = 0 and u = 1
    # sd = 3/2 makes 2p + q vanish only up to roundoff in C_i D_i
    tol = 1e-12 * max(abs(p), abs(q))
    left = 0.0 if abs(left) <= tol else left
    right = 0.0 if abs(right) <= tol else right
    infl = 2.0 / 3.0 + q / (3.0 * p) if p != 0 else None
    if left == 0 and right == 0:
        return ConvexityClass(Convexity.AFFINE, None)
    if left <= 0 and right <= 0:
        return ConvexityClass(Convexity.STRICTLY_CONCAVE, None)
    if left >= 0 and right >= 0:
        return ConvexityClass(Convexity.STRICTLY_CONVEX, None)
    if left > 0:
        return ConvexityClass(Convexity.CONVEX_CONCAVE, infl)
    return ConvexityClass(Convexity.CONCAVE_CONVEX, infl)


def inflection_gamma(sd: float) -> float:
    """Inflection point of f written through sd."""
    if sd == 1.0:
        raise ParameterError("sd = 1 makes the inflection formula singular")
    return (3.0 - 2.0 * sd) / (3.0 * (1.0 - sd))


def implied_r_i(sd: float, lambda_g: float) -> float:
    """r_i that puts the Allee zero exactly at the inflection point."""
    if sd == 0.0:
        raise ParameterError("sd = 0 has no inflection point")
    return (2.0 - 3.0 / sd) * lambda_g


@dataclass(frozen=True)
class InflectionMatch:
    matches: bool
    gamma_inflection: float
    implied_r_i: float
    implied_valid: bool


def inflection_matches_gamma(params: ModelParams, tol: float = 1e-9) -> InflectionMatch:
    """Whether gamma sits at the inflection point of f, plus the r_i that would put it there."""
    if params.C_g == 0:
        raise ParameterError("C_g = 0: sd undefined")
    dv = derive(params)
    sd = dv.sd
    if sd == 1.0:
        raise ParameterError("sd = 1 makes the inflection formula singular")
    g_inf = inflection_gamma(sd)
    r = implied_r_i(sd, params.lambda_g)
    return InflectionMatch(abs(dv.gamma - g_inf) <= tol, g_inf, r, r > 0)


def params_from_dimensionless(d: float, mu: float, E_g: float, sd: float,
                              D_g: float = 1.0, lambda_g: float = 1.0,
                              lambda_i: float = 0.0) -> ModelParams:
    """Raw parameters realising (d, mu, E_g, sd) with C_g < 0 and k_g = 0."""
    C_g = -E_g * math.sqrt(lambda_g / D_g)
    D_i = d * D_g
    r_i = mu * lambda_g
    C_i = sd * abs(C_g) / d
    return ModelParams(C_i=C_i, C_g=C_g, D_i=D_i, D_g=D_g, lambda_i=lambda_i,
                       lambda_g=lambda_g, k_i=lambda_i + r_i, k_g=0.0)


def as_jsonable_array(x) -> list[float]:
    return [float(v) for v in np.asarray(x).ravel()]
