"""Discrete biased-movement update and its consistency with the continuum model.

Sites jl on a periodic ring carry occupancies c_j. During one time step tau an
isolated organism (both neighbours empty) jumps with probability P_m^i, a
grouped one with P_m^g; the bias weights a, b (a + b = 2) split the jumps
between the two directions. Births and deaths act with P_b, P_d.

Two reading choices are exposed as switches, because the printed update does
not reproduce the continuum coefficients on its own:

``bias``
    ``"left"`` (default): a weights jumps toward j-1, matching the stated
    meaning of a ("bias toward the left if a - b > 0") and the sign of the
    continuum flux. ``"as_printed"``: a weights the inflow from j-1.
``reaction``
    ``"as_printed"`` (default): the displayed reaction terms verbatim; the two
    P_d^i terms cancel. ``"corrected"``: the last death term carries P_d^g,
    giving the death part -k_i u(1-u)^2 - k_g u + k_g u(1-u)^2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np

from .model import ModelParams, coefficient_polynomials

Bias = Literal["left", "as_printed"]
Reaction = Literal["as_printed", "corrected"]
Flux = Literal["model", "lattice"]

BIAS_SUM_TOL = 1e-12


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeRates:
    Pm_i: float
    Pm_g: float
    Pb_i: float = 0.0
    Pb_g: float = 0.0
    Pd_i: float = 0.0
    Pd_g: float = 0.0
    a_i: float = 1.0
    b_i: float = 1.0
    a_g: float = 1.0
    b_g: float = 1.0

    def check(self) -> None:
        for name in ("Pm_i", "Pm_g", "Pb_i", "Pb_g", "Pd_i", "Pd_g"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise LatticeError(f"probability {name}={v} outside [0, 1]")
        for s, (a, b) in (("i", (self.a_i, self.b_i)), ("g", (self.a_g, self.b_g))):
            if abs(a + b - 2.0) > BIAS_SUM_TOL:
                raise LatticeError(f"bias weights a^{s}+b^{s} = {a + b} != 2")
            if a < 0 or b < 0:
                raise LatticeError(f"bias weights must be non-negative (a^{s}={a}, b^{s}={b})")


def lattice_step(c, rates: LatticeRates, bias: Bias = "left",
                 reaction: Reaction = "as_printed") -> np.ndarray:
    """Increments delta c_j for one time step on a periodic ring."""
    rates.check()
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size < 5:
        raise LatticeError("state must be a 1-D array with at least 5 sites")
    r = rates
    cm1, cp1 = np.roll(c, 1), np.roll(c, -1)       # c_{j-1}, c_{j+1}
    # isolated occupancy at k, and availability of a move to the right / left
    T = c * (1 - cm1) * (1 - cp1)
    R = c * (1 - cp1)
    L = c * (1 - cm1)
    Tm1, Tp1 = np.roll(T, 1), np.roll(T, -1)
    Rm1, Lp1 = np.roll(R, 1), np.roll(L, -1)
    if bias == "left":
        right_i, left_i, right_g, left_g = r.b_i, r.a_i, r.b_g, r.a_g
    elif bias == "as_printed":
        right_i, left_i, right_g, left_g = r.a_i, r.b_i, r.a_g, r.b_g
    else:
        raise LatticeError(f"unknown bias convention {bias!r}")
    # written as differences so that uniform states give exactly zero
    iso_i = right_i * (Tm1 - T) + left_i * (Tp1 - T)
    iso_g = right_g * (Tm1 - T) + left_g * (Tp1 - T)
    pair_g = right_g * (Rm1 - R) + left_g * (Lp1 - L)
    move = 0.5 * r.Pm_i * iso_i + 0.5 * r.Pm_g * pair_g - 0.5 * r.Pm_g * iso_g
    return move + reaction_terms(c, rates, reaction)


def reaction_terms(c, rates: LatticeRates, reaction: Reaction = "as_printed") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    r = rates
    cm1, cp1 = np.roll(c, 1), np.roll(c, -1)
    cm2, cp2 = np.roll(c, 2), np.roll(c, -2)
    iso_birth = cm1 * (1 - c) * (1 - cm2) + cp1 * (1 - c) * (1 - cp2)
    pair_birth = cm1 * (1 - c) + cp1 * (1 - c)
    iso_here = c * (1 - cm1) * (1 - cp1)
    out = (0.5 * r.Pb_i * iso_birth + 0.5 * r.Pb_g * pair_birth - 0.5 * r.Pb_g * iso_birth
           - 0.5 * r.Pd_i * iso_here - 0.5 * r.Pd_g * c)
    if reaction == "as_printed":
        out = out + 0.5 * r.Pd_i * iso_here
    elif reaction == "corrected":
        out = out + 0.5 * r.Pd_g * iso_here
    else:
        raise LatticeError(f"unknown reaction reading {reaction!r}")
    return out


def diffusive_ratio(params: ModelParams) -> float:
    """Smallest l^2/tau >= 1 keeping both movement probabilities in [0, 1]."""
    return max(1.0, 2.0 * max(params.D_i, params.D_g))


def rates_for(params: ModelParams, l: float, ratio: float = 1.0,
              birth_factor: float = 2.0) -> tuple[LatticeRates, float]:
    """Probabilities and biases for spacing l with l^2/tau = ratio.

    P_m = 2 D tau / l^2, P_b = birth_factor * tau * lambda, P_d = 2 tau k and
    a = 1 + C l / 2, b = 1 - C l / 2 (so a - b = C sqrt(tau) when ratio = 1).
    """
    P = params
    tau = l * l / ratio
    rates = LatticeRates(
        Pm_i=2 * P.D_i * tau / l ** 2, Pm_g=2 * P.D_g * tau / l ** 2,
        Pb_i=birth_factor * tau * P.lambda_i, Pb_g=birth_factor * tau * P.lambda_g,
        Pd_i=2 * tau * P.k_i, Pd_g=2 * tau * P.k_g,
        a_i=1 + P.C_i * l / 2, b_i=1 - P.C_i * l / 2,
        a_g=1 + P.C_g * l / 2, b_g=1 - P.C_g * l / 2,
    )
    rates.check()
    return rates, tau


@dataclass(frozen=True)
class SmoothProfile:
    """Periodic test profile c(x) = m + A sin(2 pi x / L) + B cos(4 pi x / L)."""
    mean: float = 0.5
    A: float = 0.25
    B: float = 0.1
    length: float = 1.0

    def __post_init__(self):
        if not (0 < self.mean - abs(self.A) - abs(self.B) and self.mean + abs(self.A)
                + abs(self.B) < 1):
            raise LatticeError("profile range must lie inside (0, 1)")

    def derivatives(self, x):
        k = 2 * np.pi / self.length
        s1, c1 = np.sin(k * x), np.cos(k * x)
        s2, c2 = np.sin(2 * k * x), np.cos(2 * k * x)
        c = self.mean + self.A * s1 + self.B * c2
        cx = self.A * k * c1 - 2 * k * self.B * s2
        cxx = -self.A * k * k * s1 - 4 * k * k * self.B * c2
        return c, cx, cxx


def lattice_flux(params: ModelParams):
    """Flux produced in the limit by the movement rule (grouped = pairs minus isolated)."""
    P = params
    u = np.polynomial.Polynomial([0.0, 1.0])
    return (-(P.C_i * P.D_i - P.C_g * P.D_g) * u * (1 - u) ** 2 - P.C_g * P.D_g * u * (1 - u))


def continuum_rhs(params: ModelParams, c, cx, cxx, flux: Flux = "model"):
    """-f(c)_x + (D(c) c_x)_x + g(c) from exact space derivatives."""
    f, D, g = coefficient_polynomials(params)
    if flux == "lattice":
        f = lattice_flux(params)
    elif flux != "model":
        raise LatticeError(f"unknown flux {flux!r}")
    df, dD = f.deriv(), D.deriv()
    return -df(c) * cx + dD(c) * cx ** 2 + D(c) * cxx + g(c)


@dataclass(frozen=True)
class LevelRow:
    level: int
    l: float
    max_error: float
    observed_order: float | None


@dataclass
class ConsistencyResult:
    rows: list[LevelRow]
    order: float
    ratio: float
    bias: str
    reaction: str
    birth_factor: float
    flux: str
    in_unit_interval: bool = True
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"order": self.order, "ratio": self.ratio, "bias": self.bias,
                "reaction": self.reaction, "birth_factor": self.birth_factor, "flux": self.flux,
                "in_unit_interval": self.in_unit_interval,
                "levels": [r.__dict__ for r in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "l", "max_error", "observed_order"])
        for r in self.rows:
            w.writerow([r.level, repr(r.l), repr(r.max_error),
                        "" if r.observed_order is None else repr(r.observed_order)])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def consistency_order(params: ModelParams, profile: SmoothProfile | None = None,
                      levels: int = 4, l0: float = 1 / 32, bias: Bias = "left",
                      reaction: Reaction = "corrected", birth_factor: float | None = None,
                      flux: Flux = "model", ratio: float | None = None) -> ConsistencyResult:
    """Observed order of max_j |delta c_j / tau - RHS(jl)| as l = l0 / 2^k.

    ``birth_factor`` defaults to 2 for the printed reaction (P_b = 2 tau lambda)
    and to 1 for the corrected one, whose births then tend to lambda u(1-u)^k.
    """
    if levels < 2:
        raise LatticeError("need at least two refinement levels")
    profile = profile or SmoothProfile()
    if birth_factor is None:
        birth_factor = 2.0 if reaction == "as_printed" else 1.0
    ratio = diffusive_ratio(params) if ratio is None else float(ratio)
    rows: list[LevelRow] = []
    inside = True
    errs = []
    for k in range(levels):
        l = l0 / 2 ** k
        n = round(profile.length / l)
        if abs(n * l - profile.length) > 1e-9 * profile.length:
            raise LatticeError("l0 must divide the profile period")
        x = np.arange(n) * l
        c, cx, cxx = profile.derivatives(x)
        rates, tau = rates_for(params, l, ratio, birth_factor)
        dc = lattice_step(c, rates, bias, reaction)
        new = c + dc
        inside &= bool(np.all((new >= 0) & (new <= 1)))
        err = float(np.max(np.abs(dc / tau - continuum_rhs(params, c, cx, cxx, flux))))
        errs.append(err)
        order = math.log2(errs[-2] / err) if k > 0 and err > 0 and errs[-2] > 0 else None
        rows.append(LevelRow(k, l, err, order))
    lv = np.arange(levels, dtype=float)
    with np.errstate(divide="ignore"):
        slope = np.polyfit(lv, np.log2(np.maximum(errs, 1e-300)), 1)[0]
    return ConsistencyResult(rows, float(-slope), ratio, bias, reaction, birth_factor, flux,
                             inside)


def reaction_limit(params: ModelParams, reaction: Reaction = "as_printed",
                   birth_factor: float = 2.0) -> Callable:
    """Pointwise limit of (reaction terms)/tau on a constant state."""
    P = params

    def g_lat(u):
        u = np.asarray(u, dtype=float)
        births = birth_factor * (P.lambda_i * u * (1 - u) ** 2
                                 + P.lambda_g * (u * (1 - u) - u * (1 - u) ** 2))
        deaths = -P.k_g * u
        if reaction == "corrected":
            deaths = deaths - P.k_i * u * (1 - u) ** 2 + P.k_g * u * (1 - u) ** 2
        return births + deaths
    return g_lat
