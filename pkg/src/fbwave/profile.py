"""Wavefront profiles: assemble z on [0, 1], integrate xi = int D/z, check residuals.

For an admissible speed c the reduced problem has a solution z < 0 on
(0, alpha) U (beta, 1) and z > 0 on (alpha, beta). The outer pieces are the
extremal solutions of their sub-interval problems; the two middle pieces are
shot from a common value z(gamma) > 0 toward alpha and beta. The profile is
phi' = z(phi)/D(phi), i.e. xi(phi) = int D/z, normalised so xi(gamma) = 0.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .singular_ode import (BranchSolution, EndpointHit, Terminal, branch_from_interior,
                           integrate_zeta, steepest_from_sigma1)
from .thresholds import (SubproblemMap, ThresholdReport, Verdict, build_subproblems,
                         numeric_thresholds)
from .triple import EquationTriple

BOUNDARY_TOL = 1e-4
DEFAULT_BAND = 1e-2

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class ProfileError(RuntimeError):
    pass


class InfeasibleRequest(ProfileError):
    """Speed outside the admissible interval, or z(gamma) not attachable."""


@dataclass
class Piece:
    sub: SubproblemMap
    branch: BranchSolution
    zero_lo: bool      # z vanishes at the left end of the *original* interval
    zero_hi: bool

    @property
    def lo(self) -> float:
        return self.sub.lo

    @property
    def hi(self) -> float:
        return self.sub.hi

    def z(self, x):
        """z in original variables, extended linearly to its zeros inside eps of an end."""
        x = np.asarray(x, dtype=float)
        t = self.sub.rho(x)
        b = self.branch
        out = self.sub.z_sign * b(t)
        # transformed coordinates of the zero ends
        for zero, end in ((self.zero_lo, self.lo), (self.zero_hi, self.hi)):
            if not zero:
                continue
            t_end = float(self.sub.rho(end))
            if abs(t_end - b.phi_lo) < abs(t_end - b.phi_hi):
                t_edge, z_edge = b.phi_lo, float(b.z[0])
            else:
                t_edge, z_edge = b.phi_hi, float(b.z[-1])
            gap = abs(t_edge - t_end)
            near = np.abs(t - t_end) < gap
            if np.any(near):
                lin = self.sub.z_sign * z_edge * np.abs(t - t_end) / gap
                out = np.where(near, lin, out)
        return out

    def endpoint_gaps(self) -> tuple[float, float]:
        """|z| at the last computed points next to the zero ends."""
        b = self.branch
        vals = []
        for zero, end in ((self.zero_lo, self.lo), (self.zero_hi, self.hi)):
            if not zero:
                vals.append(float("nan"))
                continue
            t_end = float(self.sub.rho(end))
            vals.append(abs(float(b.z[0] if abs(t_end - b.phi_lo) < abs(t_end - b.phi_hi)
                                  else b.z[-1])))
        return vals[0], vals[1]


@dataclass
class ZAssembly:
    c: float
    z_gamma: float
    z_gamma_max: float
    pieces: dict[str, Piece]
    alpha: float
    beta: float
    gamma: float

    def z(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = np.zeros_like(phi)
        for p in self.pieces.values():
            mask = (phi >= p.lo) & (phi <= p.hi)
            if np.any(mask):
                out = np.where(mask, p.z(np.where(mask, phi, 0.5 * (p.lo + p.hi))), out)
        return out if out.ndim else float(out)

    def sign_pattern_ok(self, n: int = 2001) -> bool:
        u = np.linspace(0, 1, n)[1:-1]
        zu = self.z(u)
        outer = (u < self.alpha) | (u > self.beta)
        inner = (u > self.alpha) & (u < self.beta)
        return bool(np.all(zu[outer] < 0) and np.all(zu[inner] > 0))

    def endpoint_gaps(self) -> dict[str, float]:
        g = {}
        for name, p in self.pieces.items():
            lo, hi = p.endpoint_gaps()
            g[f"{name}_lo"], g[f"{name}_hi"] = lo, hi
        return {k: v for k, v in g.items() if not math.isnan(v)}

    def integral_residual(self, triple: EquationTriple, n_cells: int = 4000) -> float:
        """max |z(phi) - f(phi) + c phi + int_0^phi D g / z| over a grid of [0, 1]."""
        edges = _graded_grid(triple, n_cells // 4)
        a, b = edges[:-1], edges[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        zn = self.z(nodes)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(zn != 0, triple.Dg(nodes) / zn, 0.0)
        cum = np.concatenate([[0.0], np.cumsum((ratio @ _GL_W) * half)])
        resid = self.z(edges) - (triple.f(edges) - self.c * edges - cum)
        return float(np.max(np.abs(resid)))


def _graded(lo: float, hi: float, n: int, left: bool, right: bool) -> np.ndarray:
    """n+1 points on [lo, hi] clustered (quadratically) toward the flagged ends."""
    s = np.linspace(0.0, 1.0, n + 1)
    if left and right:
        t = 0.5 * (1 - np.cos(np.pi * s))
    elif left:
        t = s ** 2
    elif right:
        t = 1 - (1 - s) ** 2
    else:
        t = s
    return lo + (hi - lo) * t


def _graded_grid(triple: EquationTriple, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Grid clustered toward the zeros 0, alpha, beta, 1 of z.

    gamma is not a zero of z and z is smooth across it, so [alpha, beta] is
    graded as one piece: refining there would only expose the difference
    stencils to roundoff.
    """
    a, b = triple.alpha, triple.beta
    parts = [_graded(lo, a, n, True, True), _graded(a, b, 2 * n, True, True),
             _graded(b, hi, n, True, True)]
    return np.unique(np.concatenate(parts))


def _zeta_piece(sub: SubproblemMap, c: float) -> Piece:
    native = sub.to_native_speed(c)
    res = integrate_zeta(sub.problem, native)
    if res.terminal is not Terminal.TOUCHES_ZERO_AT_SIGMA1:
        raise InfeasibleRequest(
            f"extremal solution on {sub.name} does not vanish at both ends at c = {c} "
            f"({res.terminal.value})")
    return Piece(sub, res.branch, True, True)


def _steep_end_value(sub: SubproblemMap, c: float) -> float:
    """Value at sigma2 of the steepest solution leaving sigma1 (the lowest attachable value)."""
    native = sub.to_native_speed(c)
    steep, touch = steepest_from_sigma1(sub.problem, native, sub.problem.sigma2)
    if steep is None or touch is not None:
        raise InfeasibleRequest(f"no solution on {sub.name} vanishes at its left end at c = {c}")
    return float(steep.z[-1])


def assemble_z(triple: EquationTriple, c: float, zgamma: float | str = "auto",
               report: ThresholdReport | None = None) -> ZAssembly:
    """Solution of the reduced problem on [0, 1] at speed c.

    ``zgamma="auto"`` picks half of the largest attachable z(gamma)
    (:func:`zgamma_max`); a number is used as z(gamma) directly.
    """
    if report is not None:
        if report.verdict is not Verdict.EXISTS:
            raise InfeasibleRequest(f"no admissible speeds (verdict {report.verdict.value})")
        if not report.c1 < c < report.c0:
            raise InfeasibleRequest(f"c = {c} outside ({report.c1}, {report.c0})")
    subs = build_subproblems(triple)
    outer_lo = _zeta_piece(subs["0_alpha"], c)
    outer_hi = _zeta_piece(subs["beta_1"], c)
    zmax = min(-_steep_end_value(subs["alpha_gamma"], c), -_steep_end_value(subs["gamma_beta"], c))
    if zgamma == "auto":
        zg = 0.5 * zmax
    else:
        zg = float(zgamma)
    if not 0 < zg <= zmax:
        raise InfeasibleRequest(f"attachment infeasible: z(gamma) = {zg} not in (0, {zmax}]")
    pieces = {"0_alpha": outer_lo}
    for name in ("alpha_gamma", "gamma_beta"):
        sub = subs[name]
        res = branch_from_interior(sub.problem, sub.to_native_speed(c), sub.problem.sigma2,
                                   -zg, "left")
        if res.hit is not EndpointHit.HITS_ENDPOINT:
            raise InfeasibleRequest(f"attachment infeasible on {name}: {res.hit.value}")
        # zero end is alpha for [alpha, gamma] and beta for [gamma, beta]
        pieces[name] = Piece(sub, res.branch, name == "alpha_gamma", name == "gamma_beta")
    pieces["beta_1"] = outer_hi
    return ZAssembly(c, zg, zmax, pieces, triple.alpha, triple.beta, triple.gamma)


def zgamma_max(triple: EquationTriple, c: float) -> float:
    subs = build_subproblems(triple)
    return min(-_steep_end_value(subs["alpha_gamma"], c), -_steep_end_value(subs["gamma_beta"], c))


@dataclass
class ResidualStats:
    classical_max: float
    classical_l2: float
    integral_max: float
    band: float
    n_used: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class WaveProfile:
    c: float
    z_gamma: float
    xi: np.ndarray        # ascending
    phi: np.ndarray       # strictly decreasing
    z: np.ndarray
    xi_alpha: float
    xi_gamma: float
    xi_beta: float
    slope_gamma: float
    boundary_tol: float
    residuals: ResidualStats | None = None
    pointwise_residual: np.ndarray | None = field(default=None, repr=False)

    @property
    def phi_at_xi_min(self) -> float:
        return float(self.phi[0])

    @property
    def phi_at_xi_max(self) -> float:
        return float(self.phi[-1])

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.phi) < 0) and np.all(np.diff(self.xi) > 0))

    @property
    def boundary_ok(self) -> bool:
        return (self.phi_at_xi_min >= 1 - self.boundary_tol
                and self.phi_at_xi_max <= self.boundary_tol)

    def shifted(self, dx: float) -> "WaveProfile":
        return WaveProfile(self.c, self.z_gamma, self.xi + dx, self.phi.copy(), self.z.copy(),
                           self.xi_alpha + dx, self.xi_gamma + dx, self.xi_beta + dx,
                           self.slope_gamma, self.boundary_tol)

    def summary(self) -> dict:
        out = {
            "c": self.c, "z_gamma": self.z_gamma, "slope_gamma": self.slope_gamma,
            "xi_alpha": self.xi_alpha, "xi_gamma": self.xi_gamma, "xi_beta": self.xi_beta,
            "phi_at_xi_min": self.phi_at_xi_min, "phi_at_xi_max": self.phi_at_xi_max,
            "n_samples": int(len(self.xi)), "monotone": self.monotone,
            "boundary_ok": self.boundary_ok, "boundary_tol": self.boundary_tol,
            "note": "the exact profile reaches 0 and 1 only as xi -> +inf and -inf; tails truncated",
        }
        if self.residuals is not None:
            out["residuals"] = self.residuals.to_dict()
        return out

    def write_csv(self, path: str | Path) -> None:
        res = self.pointwise_residual
        with open(path, "w", newline="") as fh:
            fh.write(f"# c={self.c!r}\n# z_gamma={self.z_gamma!r}\n")
            fh.write(f"# xi_alpha={self.xi_alpha!r}\n# xi_gamma={self.xi_gamma!r}\n"
                     f"# xi_beta={self.xi_beta!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["xi", "phi", "z", "residual"])
            for i in range(len(self.xi)):
                r = "" if res is None or not np.isfinite(res[i]) else repr(float(res[i]))
                w.writerow([repr(float(self.xi[i])), repr(float(self.phi[i])),
                            repr(float(self.z[i])), r])


def build_profile(triple: EquationTriple, assembly: ZAssembly, n_per_piece: int = 4000,
                  boundary_tol: float = BOUNDARY_TOL) -> WaveProfile:
    """Sample phi(xi) from xi(phi) = int_gamma^phi D/z."""
    tail = 0.5 * boundary_tol
    grid = _graded_grid(triple, n_per_piece, lo=tail, hi=1.0 - tail)
    a, b = grid[:-1], grid[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    zn = assembly.z(nodes)
    if np.any(zn == 0):
        raise ProfileError("z vanishes at a quadrature node away from the junctions")
    dxi = ((triple.D(nodes) / zn) @ _GL_W) * half
    if not np.all(np.isfinite(dxi)):
        raise ProfileError("xi quadrature diverged at a junction")
    xi = np.concatenate([[0.0], np.cumsum(dxi)])
    xi = xi - float(np.interp(triple.gamma, grid, xi))

    def at(x):
        return float(np.interp(x, grid, xi))

    z_grid = assembly.z(grid)
    order = np.argsort(xi)
    prof = WaveProfile(
        c=float(assembly.c), z_gamma=float(assembly.z_gamma),
        xi=xi[order], phi=grid[order], z=np.asarray(z_grid)[order],
        xi_alpha=at(triple.alpha), xi_gamma=0.0, xi_beta=at(triple.beta),
        slope_gamma=assembly.z_gamma / float(triple.D(triple.gamma)),
        boundary_tol=boundary_tol,
    )
    if not (math.isfinite(prof.xi_alpha) and math.isfinite(prof.xi_beta)):
        raise ProfileError("junction abscissa is not finite")
    return prof


def classical_residual(triple: EquationTriple, xi: np.ndarray, phi: np.ndarray, c: float):
    """(D(phi) phi')' + (c - f'(phi)) phi' + g(phi) by second-order finite differences."""
    dphi = np.gradient(phi, xi, edge_order=2)
    flux = triple.D(phi) * dphi
    return np.gradient(flux, xi, edge_order=2) + (c - triple.df(phi)) * dphi + triple.g(phi)


def residual_check(triple: EquationTriple, profile: WaveProfile, assembly: ZAssembly | None = None,
                   band: float = DEFAULT_BAND) -> ResidualStats:
    res = classical_residual(triple, profile.xi, profile.phi, profile.c)
    keep = (np.abs(profile.phi - triple.alpha) > band) & (np.abs(profile.phi - triple.beta) > band)
    keep[[0, -1]] = False
    used = res[keep]
    point = np.where(keep, res, np.nan)
    integ = assembly.integral_residual(triple) if assembly is not None else float("nan")
    stats = ResidualStats(float(np.max(np.abs(used))), float(np.sqrt(np.mean(used ** 2))),
                          integ, band, int(keep.sum()))
    profile.residuals = stats
    profile.pointwise_residual = point
    return stats


def recovered_z(triple: EquationTriple, profile: WaveProfile) -> np.ndarray:
    """z re-derived from the sampled profile as D(phi) * dphi/dxi."""
    return triple.D(profile.phi) * np.gradient(profile.phi, profile.xi, edge_order=2)


def profile_at_midpoint(triple: EquationTriple, bisect_tol: float = 1e-6, zgamma="auto",
                        report: ThresholdReport | None = None, **kw):
    report = report if report is not None else numeric_thresholds(triple, bisect_tol)
    if report.verdict is not Verdict.EXISTS:
        raise InfeasibleRequest(f"no admissible speeds (verdict {report.verdict.value})")
    asm = assemble_z(triple, report.midpoint, zgamma, report)
    prof = build_profile(triple, asm, **kw)
    residual_check(triple, prof, asm)
    return report, asm, prof
