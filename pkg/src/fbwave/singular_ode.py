"""Singular half-interval problem  z' = h(phi) - c - Q(phi)/z,  z < 0 on (s1, s2).

Q > 0 inside and vanishes at both ends, so the right side is 0/0 there. The
extremal solution zeta_c with zeta_c(s2) = 0 is started on the indicial slope
at s2 and integrated leftwards. The threshold

    c* = sup { c : zeta_c(s1) < 0 }

is found by bisection. Deciding whether zeta_c(s1) = 0 by looking at the value
at s1 is hopeless near c* (the value can be exponentially small), so the
classification compares zeta_c with the steepest solution leaving s1 along the
strong eigendirection of the node there: solutions never cross, and zeta_c
reaches s1 at zero exactly when it lies above that steepest one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import solve_ivp

from . import calculus

Func = Callable[[np.ndarray], np.ndarray]

RTOL = 1e-10
ATOL = 1e-12

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class SingularODEError(RuntimeError):
    """Base class for solver failures."""


class IndicialError(SingularODEError):
    pass


class StepUnderflowError(SingularODEError):
    pass


class BracketError(SingularODEError):
    pass


class SandwichViolation(SingularODEError):
    pass


class NonMonotoneError(SingularODEError):
    pass


class Terminal(enum.Enum):
    REACHES_NEGATIVE = "reaches_negative"
    TOUCHES_ZERO_INTERIOR = "touches_zero_interior"
    TOUCHES_ZERO_AT_SIGMA1 = "touches_zero_at_sigma1"


class EndpointHit(enum.Enum):
    HITS_ENDPOINT = "hits_endpoint"
    CROSSES_ZERO_EARLY = "crosses_zero_early"
    MISSES_ENDPOINT = "misses_endpoint"


@dataclass(frozen=True)
class SingularProblem:
    """Data (h, Q, sigma1, sigma2) of the half-interval problem.

    ``dQ`` is the derivative of Q (central differences if omitted) and ``F``
    an antiderivative of h, used only for the analytic bounds.
    """

    h: Func
    Q: Func
    sigma1: float
    sigma2: float
    dQ: Func | None = None
    F: Func | None = None
    label: str = field(default="", compare=False)

    @property
    def width(self) -> float:
        return self.sigma2 - self.sigma1

    def dQ_at(self, x: float) -> float:
        if self.dQ is not None:
            return float(self.dQ(x))
        return float(calculus.central_diff(self.Q, x))

    def antiderivative(self) -> Func:
        if self.F is not None:
            return self.F
        s1, h = self.sigma1, self.h
        t = 0.5 * (_GL_X + 1.0)
        w = 0.5 * _GL_W

        def F(phi):
            phi = np.asarray(phi, dtype=float)
            pts = s1 + np.multiply.outer(phi - s1, t)
            return (phi - s1) * (np.asarray(h(pts)) @ w)

        return F

    def q_scale(self, n: int = 513) -> float:
        u = np.linspace(self.sigma1, self.sigma2, n)
        return float(np.max(np.abs(self.Q(u))))

    def check(self, n: int = 1000) -> None:
        """Raise ValueError unless Q > 0 inside, Q = 0 at the ends, and the end slopes have the right sign."""
        if not self.sigma1 < self.sigma2:
            raise ValueError("need sigma1 < sigma2")
        u = np.linspace(self.sigma1, self.sigma2, n)[1:-1]
        if not np.all(self.Q(u) > 0):
            raise ValueError("Q must be positive inside (sigma1, sigma2)")
        qs = max(self.q_scale(), 1.0)
        for end in (self.sigma1, self.sigma2):
            if abs(float(self.Q(end))) > 1e-12 * qs:
                raise ValueError(f"Q must vanish at {end}")
        if self.dQ_at(self.sigma1) < -1e-12 * qs or self.dQ_at(self.sigma2) > 1e-12 * qs:
            raise ValueError("need Q'(sigma1) >= 0 and Q'(sigma2) <= 0")

    def default_eps(self) -> float:
        return 1e-6 * self.width

    def default_zero_band(self) -> float:
        return 1e-9 * self.q_scale() / self.width


@dataclass
class BranchSolution:
    """A computed solution branch with dense output over [phi_lo, phi_hi]."""

    c: float
    phi: np.ndarray          # ascending
    z: np.ndarray
    dense: Callable[[np.ndarray], np.ndarray]
    phi_lo: float
    phi_hi: float
    start: tuple[float, float]
    end: tuple[float, float]
    indicial_slope: float | None = None

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        flat = np.clip(phi.ravel(), self.phi_lo, self.phi_hi)
        return np.asarray(self.dense(flat), dtype=float).reshape(phi.shape)

    def integral_residual(self, problem: SingularProblem) -> float:
        """max |z(phi) - z(phi_ref) - int (h - c) + int Q/z| over the step points."""
        x = self.phi
        if len(x) < 2:
            return 0.0
        a, b = x[:-1], x[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        zn = self(nodes)
        integrand = problem.h(nodes) - self.c - problem.Q(nodes) / zn
        cell = (integrand @ _GL_W) * half
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        resid = (self.z - self.z[0]) - cum
        return float(np.max(np.abs(resid)))


@dataclass
class ZetaResult:
    branch: BranchSolution
    terminal: Terminal
    value_at_sigma1: float
    touch_point: float | None = None


@dataclass
class InteriorBranch:
    branch: BranchSolution
    hit: EndpointHit
    endpoint_value: float
    cross_point: float | None = None


@dataclass
class ThresholdResult:
    cstar: float
    bracket: tuple[float, float]
    lower_bound: float
    upper_bound: float
    iterations: int

    def as_dict(self) -> dict:
        return {
            "cstar": self.cstar,
            "bracket": list(self.bracket),
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "iterations": self.iterations,
        }


def indicial_slope_sigma2(problem: SingularProblem, c: float) -> float:
    """Nonnegative root of L^2 - (h(s2) - c) L + Q'(s2) = 0."""
    b = float(problem.h(problem.sigma2)) - c
    q2 = problem.dQ_at(problem.sigma2)
    disc = b * b - 4.0 * q2
    if disc < 0:
        raise IndicialError(f"complex indicial root at sigma2 (Q'(s2)={q2} > 0)")
    return 0.5 * (b + math.sqrt(disc))


def strong_root_sigma1(problem: SingularProblem, c: float) -> float | None:
    """Most negative root of m^2 - (h(s1) - c) m + Q'(s1) = 0, or None if no negative real root."""
    b = float(problem.h(problem.sigma1)) - c
    q1 = max(problem.dQ_at(problem.sigma1), 0.0)
    disc = b * b - 4.0 * q1
    if disc < 0 or b >= 0:
        return None
    return 0.5 * (b - math.sqrt(disc))


def _solve(problem: SingularProblem, c: float, phi0: float, z0: float, phi1: float,
           zero_band: float, rtol: float, atol: float):
    h, Q = problem.h, problem.Q

    def rhs(phi, z):
        return [float(h(phi)) - c - float(Q(phi)) / z[0]]

    def hits_zero(phi, z):
        return z[0] + zero_band

    hits_zero.terminal = True
    hits_zero.direction = 1.0

    sol = solve_ivp(rhs, (phi0, phi1), [z0], method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=hits_zero)
    if sol.status == -1:
        # z -> 0- makes -Q/z blow up, so the stepper may stall just short of the
        # zero band; that is a touch of zero, not a solver failure
        z = sol.y[0]
        if z[-1] < 0 and abs(z[-1]) <= max(1e-4 * float(np.max(np.abs(z))), 1e3 * zero_band):
            sol.status = 1
            sol.t_events = [np.array([sol.t[-1]])]
            return sol
        raise StepUnderflowError(sol.message)
    return sol


def _branch(sol, c: float, slope: float | None) -> BranchSolution:
    t = np.asarray(sol.t, dtype=float)
    z = np.asarray(sol.y[0], dtype=float)
    order = np.argsort(t)
    dense = sol.sol

    def ev(x):
        return dense(x)[0]

    return BranchSolution(
        c=c, phi=t[order], z=z[order], dense=ev,
        phi_lo=float(t.min()), phi_hi=float(t.max()),
        start=(float(t[0]), float(z[0])), end=(float(t[-1]), float(z[-1])),
        indicial_slope=slope,
    )


def _touched(sol) -> float | None:
    if sol.status == 1 and len(sol.t_events[0]):
        return float(sol.t_events[0][0])
    return None


def steepest_from_sigma1(problem: SingularProblem, c: float, phi_to: float,
                         eps_start: float | None = None, rtol: float = RTOL,
                         atol: float = ATOL) -> tuple[BranchSolution | None, float | None]:
    """Solution leaving s1 on the strong eigendirection, integrated rightwards to ``phi_to``.

    Returns (branch, touch) where touch is the abscissa where z reached the
    zero band before ``phi_to`` (None otherwise); branch is None when no
    negative real root exists at s1, i.e. nothing can leave s1 with z < 0.
    """
    mu = strong_root_sigma1(problem, c)
    if mu is None:
        return None, None
    eps = eps_start if eps_start is not None else problem.default_eps()
    phi0 = problem.sigma1 + eps
    sol = _solve(problem, c, phi0, mu * eps, phi_to, problem.default_zero_band(), rtol, atol)
    return _branch(sol, c, mu), _touched(sol)


def _attaches_left(problem: SingularProblem, c: float, phi_a: float, z_a: float,
                   eps_start: float | None, rtol: float, atol: float) -> bool:
    """Does the solution through (phi_a, z_a) reach s1 with z -> 0?"""
    steep, touch = steepest_from_sigma1(problem, c, phi_a, eps_start, rtol, atol)
    if steep is None or touch is not None:
        return False
    return z_a >= float(steep(phi_a))


def integrate_zeta(problem: SingularProblem, c: float, eps_start: float | None = None,
                   rtol: float = RTOL, atol: float = ATOL, to_sigma1: bool = True,
                   stop_at: float | None = None) -> ZetaResult:
    """Extremal solution zeta_c, from the indicial start at s2 leftwards.

    With ``stop_at`` the integration ends at that abscissa (used by the
    threshold bisection); otherwise it runs to s1 + eps_start.
    """
    eps = eps_start if eps_start is not None else problem.default_eps()
    lam = indicial_slope_sigma2(problem, c)
    band = problem.default_zero_band()
    if eps_start is None and lam > 0:
        # on short intervals with a flat indicial slope, lam * eps can fall inside
        # the zero band; move the start inwards (error is O(eps^2))
        eps = min(max(eps, 1e3 * band / lam), 1e-3 * problem.width)
    phi0 = problem.sigma2 - eps
    z0 = -lam * eps if lam > 0 else -min(eps, band * 10)
    phi_end = stop_at if stop_at is not None else problem.sigma1 + eps
    sol = _solve(problem, c, phi0, z0, phi_end, band, rtol, atol)
    branch = _branch(sol, c, lam)
    touch = _touched(sol)
    if touch is not None:
        # leftward, -Q/z repels z from 0, so an interior touch is a numerical artefact
        if float(problem.Q(touch)) > band * problem.width:
            return ZetaResult(branch, Terminal.TOUCHES_ZERO_INTERIOR, float("nan"), touch)
        return ZetaResult(branch, Terminal.TOUCHES_ZERO_AT_SIGMA1, 0.0, touch)
    phi_m = 0.5 * (problem.sigma1 + problem.sigma2) if stop_at is None else stop_at
    z_m = float(branch(phi_m))
    touches = _attaches_left(problem, c, phi_m, z_m, eps, rtol, atol)
    end_val = branch.z[0] if to_sigma1 and stop_at is None else float("nan")
    if touches:
        return ZetaResult(branch, Terminal.TOUCHES_ZERO_AT_SIGMA1, 0.0)
    return ZetaResult(branch, Terminal.REACHES_NEGATIVE, float(end_val))


def reaches_sigma1(problem: SingularProblem, c: float, eps_start: float | None = None,
                   rtol: float = RTOL, atol: float = ATOL) -> bool:
    """True iff zeta_c(s1) = 0, i.e. c >= c*."""
    if strong_root_sigma1(problem, c) is None:
        return False
    phi_m = 0.5 * (problem.sigma1 + problem.sigma2)
    res = integrate_zeta(problem, c, eps_start, rtol, atol, stop_at=phi_m)
    return res.terminal is Terminal.TOUCHES_ZERO_AT_SIGMA1


def estimate_bounds(problem: SingularProblem) -> tuple[float, float]:
    """Lower and upper estimates of c* from the difference-quotient sandwich."""
    s1, s2 = problem.sigma1, problem.sigma2
    F = problem.antiderivative()
    sup_dq = calculus.extremum("sup", "delta", F, s1, s1, s2, dF=problem.h).value
    q1 = max(problem.dQ_at(s1), 0.0)
    lower = max(sup_dq, float(problem.h(s1)) + 2.0 * math.sqrt(q1))
    upper = sup_dq + 2.0 * calculus.sup_sqrt_mean(problem.Q, s1, s1, s2, dF=problem.dQ)
    return lower, upper


def threshold_cstar(problem: SingularProblem, bracket_hint: tuple[float, float] | None = None,
                    bisect_tol: float = 1e-6, eps_start: float | None = None,
                    rtol: float = RTOL, atol: float = ATOL,
                    bounds: tuple[float, float] | None = None) -> ThresholdResult:
    """Bisection for c* on the classification of :func:`reaches_sigma1`."""
    lower, upper = bounds if bounds is not None else estimate_bounds(problem)
    lo, hi = bracket_hint if bracket_hint is not None else (lower - 1.0, upper + 1.0)

    def touches(c):
        return reaches_sigma1(problem, c, eps_start, rtol, atol)

    if touches(lo) or not touches(hi):
        raise BracketError(f"bracket [{lo}, {hi}] does not separate the classification")
    it = 0
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if touches(mid):
            hi = mid
        else:
            lo = mid
        it += 1
    cstar = 0.5 * (lo + hi)
    if not (lower - bisect_tol <= cstar <= upper + bisect_tol):
        raise SandwichViolation(
            f"c*={cstar} outside analytic bounds [{lower}, {upper}] (tol {bisect_tol})")
    return ThresholdResult(cstar, (lo, hi), lower, upper, it)


def check_monotone(problem: SingularProblem, cstar: float, halfwidth: float = 0.5,
                   n: int = 50, **kw) -> list[tuple[float, bool]]:
    """Scan n speeds around c* and verify the classification switches exactly once."""
    cs = np.linspace(cstar - halfwidth, cstar + halfwidth, n)
    flags = [(float(c), reaches_sigma1(problem, float(c), **kw)) for c in cs]
    seq = [f for _, f in flags]
    switches = sum(1 for x, y in zip(seq, seq[1:]) if x != y)
    if switches > 1 or (seq and seq[0] and not all(seq)) or (seq and not seq[-1]):
        raise NonMonotoneError(f"classification not monotone around c*={cstar}: {seq}")
    return flags


def branch_from_interior(problem: SingularProblem, c: float, anchor: float, z_a: float,
                         direction: Literal["left", "right"],
                         eps_start: float | None = None, rtol: float = RTOL,
                         atol: float = ATOL) -> InteriorBranch:
    """Integrate from (anchor, z_a), z_a < 0, toward s1 ('left') or s2 ('right')."""
    if not z_a < 0:
        raise ValueError("anchor value must be negative")
    if not problem.sigma1 < anchor <= problem.sigma2:
        raise ValueError("anchor must lie in (sigma1, sigma2]")
    eps = eps_start if eps_start is not None else problem.default_eps()
    band = problem.default_zero_band()
    if direction == "left":
        sol = _solve(problem, c, anchor, z_a, problem.sigma1 + eps, band, rtol, atol)
        branch = _branch(sol, c, None)
        touch = _touched(sol)
        if touch is not None and float(problem.Q(touch)) > band * problem.width:
            return InteriorBranch(branch, EndpointHit.CROSSES_ZERO_EARLY, float("nan"), touch)
        ok = touch is not None or _attaches_left(problem, c, anchor, z_a, eps, rtol, atol)
        if ok:
            mu = branch.z[0] / (branch.phi[0] - problem.sigma1)
            branch.indicial_slope = float(mu)
            return InteriorBranch(branch, EndpointHit.HITS_ENDPOINT, 0.0)
        return InteriorBranch(branch, EndpointHit.MISSES_ENDPOINT, float(branch.z[0]))
    if direction != "right":
        raise ValueError("direction must be 'left' or 'right'")
    sol = _solve(problem, c, anchor, z_a, problem.sigma2 - eps, band, rtol, atol)
    branch = _branch(sol, c, None)
    touch = _touched(sol)
    if touch is not None and problem.sigma2 - touch > 2 * eps:
        return InteriorBranch(branch, EndpointHit.CROSSES_ZERO_EARLY, float("nan"), touch)
    z_end = float(branch.z[-1])
    lam = indicial_slope_sigma2(problem, c)
    # tolerance: a few times the extremal value at s2 - eps
    if touch is not None or abs(z_end) <= 10.0 * max(lam, 1.0) * eps + band:
        return InteriorBranch(branch, EndpointHit.HITS_ENDPOINT, 0.0)
    return InteriorBranch(branch, EndpointHit.MISSES_ENDPOINT, z_end)


def fisher_problem(k: float = 1.0, m: float = 0.0) -> SingularProblem:
    """h = m, Q = k phi (1 - phi) on [0, 1]; the classical minimal speed is m + 2 sqrt(k)."""
    from numpy.polynomial import Polynomial

    Q = Polynomial([0.0, k, -k])
    h = Polynomial([m])
    return SingularProblem(h=h, Q=Q, sigma1=0.0, sigma2=1.0, dQ=Q.deriv(),
                           F=h.integ(), label="fisher")
