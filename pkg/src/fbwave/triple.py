"""Coefficient triples (f, D, g) of u_t + f(u)_x = (D(u) u_x)_x + g(u).

An :class:`EquationTriple` is the general interface used by the threshold and
profile machinery; the biased-movement model is only one way to build one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

Func = Callable[[np.ndarray], np.ndarray]


class Horner:
    """Polynomial evaluator with a cheap scalar path (the ODE right-hand sides
    call coefficients one point at a time, where Polynomial.__call__ dominates)."""

    __slots__ = ("coef", "_rev")

    def __init__(self, coef: Sequence[float]):
        self.coef = np.asarray(coef, dtype=float)
        self._rev = tuple(float(c) for c in self.coef[::-1])

    def __call__(self, x):
        if isinstance(x, float):
            acc = 0.0
            for c in self._rev:
                acc = acc * x + c
            return acc
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coef)

    @classmethod
    def of(cls, p: Polynomial) -> "Horner":
        return cls(p.coef)

    def poly(self) -> Polynomial:
        return Polynomial(self.coef)

    def deriv(self) -> "Horner":
        return Horner.of(self.poly().deriv())

    def integ(self) -> "Horner":
        return Horner.of(self.poly().integ())

    def __repr__(self) -> str:
        return f"Horner({list(self.coef)})"


@dataclass(frozen=True)
class ShapeReport:
    d_shape: bool
    g_shape: bool
    ordering: bool
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.d_shape and self.g_shape and self.ordering


@dataclass(frozen=True)
class EquationTriple:
    """Vectorised evaluators for f, D, g and their derivatives on [0, 1].

    ``alpha`` and ``beta`` are the interior zeros of D, ``gamma`` the interior
    zero of g, with 0 < alpha < gamma < beta < 1.
    """

    f: Func
    df: Func
    D: Func
    dD: Func
    g: Func
    dg: Func
    alpha: float
    beta: float
    gamma: float
    label: str = field(default="", compare=False)
    Dg_product: Func | None = field(default=None, compare=False, repr=False)
    dDg_product: Func | None = field(default=None, compare=False, repr=False)

    def Dg(self, u):
        if self.Dg_product is not None:
            return self.Dg_product(u)
        return self.D(u) * self.g(u)

    def dDg(self, u):
        if self.dDg_product is not None:
            return self.dDg_product(u)
        return self.dD(u) * self.g(u) + self.D(u) * self.dg(u)

    def check_shape(self, n: int = 2000) -> ShapeReport:
        """Sample-based check of assumptions (D) and (g) plus the zero ordering."""
        a, b, gm = self.alpha, self.beta, self.gamma
        msgs = []
        ordering = bool(0.0 < a < gm < b < 1.0)
        if not ordering:
            msgs.append(f"need 0 < alpha < gamma < beta < 1, got {a}, {gm}, {b}")
        u = np.linspace(0.0, 1.0, n)
        Du = np.asarray(self.D(u), dtype=float)
        gu = np.asarray(self.g(u), dtype=float)
        outer = (u < a) | (u > b)
        inner = (u > a) & (u < b)
        d_shape = bool(np.all(Du[outer] > 0) and np.all(Du[inner] < 0))
        if not d_shape:
            msgs.append("D must be > 0 on [0,alpha) U (beta,1] and < 0 on (alpha,beta)")
        scale = max(1.0, float(np.max(np.abs(gu))))
        ends = [float(self.g(0.0)), float(self.g(gm)), float(self.g(1.0))]
        g_zero = all(abs(v) <= 1e-12 * scale for v in ends)
        lo = (u > 0) & (u < gm)
        hi = (u > gm) & (u < 1)
        g_shape = bool(g_zero and np.all(gu[lo] < 0) and np.all(gu[hi] > 0))
        if not g_shape:
            msgs.append("g must vanish at 0, gamma, 1 and be < 0 on (0,gamma), > 0 on (gamma,1)")
        return ShapeReport(d_shape, g_shape, ordering, tuple(msgs))


def _poly(coeffs: Sequence[float]) -> Polynomial:
    return Polynomial(np.asarray(coeffs, dtype=float))


def polynomial_triple(f: Sequence[float], D: Sequence[float], g: Sequence[float],
                      alpha: float, beta: float, gamma: float,
                      label: str = "polynomial") -> EquationTriple:
    """Build a triple from ascending power-basis coefficients."""
    pf, pD, pg = _poly(f), _poly(D), _poly(g)
    pDg = pD * pg
    H = Horner.of
    return EquationTriple(
        f=H(pf), df=H(pf.deriv()), D=H(pD), dD=H(pD.deriv()), g=H(pg), dg=H(pg.deriv()),
        alpha=float(alpha), beta=float(beta), gamma=float(gamma), label=label,
        Dg_product=H(pDg), dDg_product=H(pDg.deriv()),
    )


def ramp_flux(lam: float, gamma: float) -> tuple[Func, Func]:
    """Lipschitz flux equal to lam*u on [0,gamma] and -lam*(u - 2 gamma) on [gamma,1]."""

    def f(u):
        u = np.asarray(u, dtype=float)
        return np.where(u <= gamma, lam * u, -lam * (u - 2.0 * gamma))

    def df(u):
        u = np.asarray(u, dtype=float)
        return np.where(u < gamma, lam, -lam) * np.ones_like(u)

    return f, df


def with_flux(triple: EquationTriple, f: Func, df: Func, label: str | None = None) -> EquationTriple:
    """Same D and g, different convective flux."""
    return EquationTriple(
        f=f, df=df, D=triple.D, dD=triple.dD, g=triple.g, dg=triple.dg,
        alpha=triple.alpha, beta=triple.beta, gamma=triple.gamma,
        label=label if label is not None else triple.label,
        Dg_product=triple.Dg_product, dDg_product=triple.dDg_product,
    )


def add_flux(triple: EquationTriple, f2: Func, df2: Func) -> EquationTriple:
    f1, df1 = triple.f, triple.df
    return with_flux(triple, lambda u: f1(u) + f2(u), lambda u: df1(u) + df2(u))
