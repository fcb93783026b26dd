"""Difference quotients, their integral means, and extrema over intervals.

For a scalar function F and base point phi0::

    delta(F, phi0)(phi) = (F(phi) - F(phi0)) / (phi - phi0)
    Delta(F, phi0)(phi) = mean of delta(F, phi0) over [phi0, phi]

both extended continuously by F'(phi0) at phi = phi0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import integrate, optimize

Func = Callable[[np.ndarray], np.ndarray]

FD_STEP = 1e-6
SCAN_POINTS = 4096
# below this distance from phi0 the quotient is replaced by a trapezoid of F'
_NEAR = 1e-6
# below this interval length the integral mean uses fixed Gauss-Legendre
_SHORT = 1e-2

_GL_T, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


class QuadratureError(RuntimeError):
    pass


def central_diff(F: Func, x, h: float = FD_STEP):
    x = np.asarray(x, dtype=float)
    return (F(x + h) - F(x - h)) / (2.0 * h)


def _deriv(F: Func, dF: Func | None) -> Func:
    if dF is not None:
        return dF
    return lambda x: central_diff(F, x)


def diff_quotient(F: Func, phi0: float, phi, dF: Func | None = None):
    """delta(F, phi0)(phi), vectorised in phi."""
    dF = _deriv(F, dF)
    phi = np.asarray(phi, dtype=float)
    h = phi - phi0
    near = np.abs(h) < _NEAR
    safe = np.where(near, 1.0, h)
    out = (F(phi) - F(phi0)) / safe
    if np.any(near):
        trap = 0.5 * (dF(np.full_like(phi, phi0)) + dF(phi))
        out = np.where(near, trap, out)
    return out if out.ndim else float(out)


def _mean_gl(F: Func, phi0: float, phi: np.ndarray, dF: Func | None) -> np.ndarray:
    # Delta(phi) = int_0^1 delta(phi0 + t (phi - phi0)) dt, Gauss-Legendre in t
    phi = np.asarray(phi, dtype=float)
    pts = phi0 + np.multiply.outer(phi - phi0, _GL_T)
    vals = diff_quotient(F, phi0, pts, dF)
    return np.asarray(vals) @ _GL_W


def integral_mean(F: Func, phi0: float, phi: float, quadrature_tol: float = 1e-12,
                  dF: Func | None = None) -> float:
    """Delta(F, phi0)(phi) by adaptive quadrature."""
    phi = float(phi)
    width = abs(phi - phi0)
    if width < _NEAR:
        return float(diff_quotient(F, phi0, phi, dF))
    if width < _SHORT:
        # 32-point Gauss-Legendre is exact to roundoff here; adaptive quadrature
        # only reports the cancellation floor of the difference quotient
        return float(_mean_gl(F, phi0, np.array(phi), dF))
    val, err = integrate.quad(lambda s: float(diff_quotient(F, phi0, s, dF)),
                              phi0, phi, epsabs=quadrature_tol * width,
                              epsrel=1e-13, limit=200)
    mean, mean_err = val / (phi - phi0), err / width
    if not np.isfinite(val) or mean_err > 10 * max(quadrature_tol, 1e-13 * abs(mean)):
        raise QuadratureError(f"integral mean did not converge: value={mean}, err={mean_err}")
    return mean


@dataclass(frozen=True)
class Extremum:
    value: float
    argument: float
    tolerance: float


def extremum(kind: Literal["sup", "inf"], quotient: Literal["delta", "Delta"],
             F: Func, phi0: float, a: float, b: float,
             dF: Func | None = None, n: int = SCAN_POINTS,
             tol: float = 1e-8) -> Extremum:
    """Supremum or infimum of delta(F, phi0) or Delta(F, phi0) over [a, b].

    Dense uniform scan followed by a bounded scalar polish around the best
    scan point. The closed interval is used; half-open intervals in the
    estimates coincide with it by continuity of the extension.
    """
    if not a <= b:
        raise ValueError(f"empty interval [{a}, {b}]")
    sign = 1.0 if kind == "sup" else -1.0
    if kind not in ("sup", "inf") or quotient not in ("delta", "Delta"):
        raise ValueError(f"bad extremum request {kind!r}/{quotient!r}")

    if quotient == "delta":
        def vec(x):
            return np.asarray(diff_quotient(F, phi0, x, dF), dtype=float)

        def point(x):
            return float(diff_quotient(F, phi0, x, dF))
    else:
        def vec(x):
            return _mean_gl(F, phi0, x, dF)

        def point(x):
            return integral_mean(F, phi0, x, quadrature_tol=tol * 1e-2, dF=dF)

    if a == b:
        v = point(a)
        return Extremum(v, a, tol)
    xs = np.linspace(a, b, n)
    vals = sign * vec(xs)
    k = int(np.argmax(vals))
    best_x, best_v = xs[k], vals[k]
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, n - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: -sign * point(x), bounds=(lo, hi),
                                       method="bounded",
                                       options={"xatol": 1e-12 * max(1.0, abs(b - a))})
        if -res.fun > best_v:
            best_x, best_v = float(res.x), float(-res.fun)
    for edge in (lo, hi):
        v = sign * point(edge)
        if v > best_v:
            best_x, best_v = float(edge), v
    return Extremum(float(sign * best_v), float(best_x), tol)


def sup_sqrt_mean(F: Func, phi0: float, a: float, b: float, dF: Func | None = None) -> float:
    """sup of sqrt(Delta(F, phi0)) over the part of [a, b] where Delta >= 0."""
    ext = extremum("sup", "Delta", F, phi0, a, b, dF=dF)
    if ext.value < 0:
        raise ValueError("integral mean is negative on the whole interval; sqrt undefined")
    return float(np.sqrt(ext.value))
