"""Command-line front end.

    fbwave analyze   --input params.json [--output report.json]
    fbwave threshold --input params.json [--bisect-tol 1e-6]
    fbwave profile   --input params.json --output profile.csv [--c C] [--zgamma Z]
    fbwave scan      --input base.json --grid "r_i=0.01:0.3:40,lambda_g=0.01:0.3:40" --output atlas.csv
    fbwave lattice-check --input params.json --output convergence.csv
    fbwave generic   --input triple.json

Exit status: 0 success, 1 invalid input, 2 infeasible request, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__, lattice, model, profile, regions, thresholds
from .calculus import QuadratureError
from .singular_ode import SingularODEError, SingularProblem, threshold_cstar
from .thresholds import dumps
from .triple import polynomial_triple

COMMANDS = ("analyze", "threshold", "profile", "scan", "lattice-check", "generic")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3


class InvalidInput(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input: Path | None
    output: Path | None
    bisect_tol: float = 1e-6
    band: float = profile.DEFAULT_BAND
    boundary_tol: float = profile.BOUNDARY_TOL
    grid: str | None = None
    workers: int = 1
    c: float | None = None
    zgamma: str = "auto"
    numeric: bool = False
    levels: int = 4
    l0: float = 1 / 32
    bias: str = "left"
    reaction: str = "corrected"
    flux: str = "model"

    def check(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidInput(f"unknown command {self.command!r}; choose from {COMMANDS}")
        for name in ("bisect_tol", "band", "boundary_tol", "l0"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"--{name.replace('_', '-')} must be positive")
        if self.c is not None and self.command != "profile":
            raise InvalidInput("--c is only accepted by the profile command")
        if self.command != "scan" and self.input is None:
            raise InvalidInput(f"{self.command} needs --input")
        if self.command == "scan" and (self.grid is None or self.input is None):
            raise InvalidInput("scan needs --input (base parameters) and --grid")
        if self.command in ("profile", "scan", "lattice-check") and self.output is None:
            raise InvalidInput(f"{self.command} needs --output")
        if self.workers < 1:
            raise InvalidInput("--workers must be >= 1")
        if self.levels < 2:
            raise InvalidInput("--levels must be >= 2")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbwave", description=__doc__.splitlines()[0])
    p.add_argument("cmd", nargs="?", choices=COMMANDS, help="command (or use --command)")
    p.add_argument("--command", dest="command_flag", choices=COMMANDS)
    p.add_argument("--input", type=Path)
    p.add_argument("--output", type=Path)
    p.add_argument("--bisect-tol", type=float, default=1e-6)
    p.add_argument("--band", type=float, default=profile.DEFAULT_BAND,
                   help="half-width of the bands around alpha, beta skipped by the residual check")
    p.add_argument("--boundary-tol", type=float, default=profile.BOUNDARY_TOL)
    p.add_argument("--grid", help='two axes, "axis1=lo:hi:n,axis2=lo:hi:n"')
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--c", type=float, help="profile speed (default: midpoint of (c1, c0))")
    p.add_argument("--zgamma", default="auto", help='z(gamma) value or "auto" (half the maximum)')
    p.add_argument("--numeric", action="store_true", help="scan: also compute numeric thresholds")
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--l0", type=float, default=1 / 32)
    p.add_argument("--bias", choices=("left", "as_printed"), default="left")
    p.add_argument("--reaction", choices=("as_printed", "corrected"), default="corrected")
    p.add_argument("--flux", choices=("model", "lattice"), default="model")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    command = ns.cmd or ns.command_flag
    if command is None:
        raise InvalidInput("no command given")
    if ns.cmd and ns.command_flag and ns.cmd != ns.command_flag:
        raise InvalidInput("positional command and --command disagree")
    cfg = RunConfig(command, ns.input, ns.output, ns.bisect_tol, ns.band, ns.boundary_tol,
                    ns.grid, ns.workers, ns.c, ns.zgamma, ns.numeric, ns.levels, ns.l0,
                    ns.bias, ns.reaction, ns.flux)
    cfg.check()
    return cfg


def _load_json(path: Path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InvalidInput(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"invalid JSON in {path}: {exc}") from exc


def _params(cfg: RunConfig) -> model.ModelParams:
    return model.ModelParams.from_dict(_load_json(cfg.input))


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        path.write_text(text if text.endswith("\n") else text + "\n")


def _zgamma(value: str):
    if value == "auto":
        return "auto"
    try:
        z = float(value)
    except ValueError as exc:
        raise InvalidInput(f'--zgamma must be a number or "auto", got {value!r}') from exc
    return z


def analyze(cfg: RunConfig) -> dict:
    P = _params(cfg)
    validity = model.validate(P)
    out: dict = {"params": P.to_dict(), "validity": validity.to_dict()}
    try:
        out["derived"] = model.derive(P).to_dict()
    except model.ParameterError as exc:
        out["derived"] = None
        out["derived_error"] = str(exc)
    out["convexity"] = model.classify_convexity(P).to_dict()
    out["regions"] = regions.evaluate(P, numeric_ssigma=validity.shape_ok).to_dict()
    if validity.shape_ok:
        triple = model.coefficients(P)
        out["analytic_bounds"] = thresholds.analytic_bounds(triple).to_dict()
        out["necessary_conditions"] = thresholds.necessary_conditions(triple).to_dict()
    else:
        out["analytic_bounds"] = out["necessary_conditions"] = None
    return out


def threshold(cfg: RunConfig) -> dict:
    P = _params(cfg)
    validity = model.validate(P)
    if not validity.shape_ok:
        raise InvalidInput(f"parameters do not give the required shapes: {validity.to_dict()}")
    triple = model.coefficients(P)
    rep = thresholds.numeric_thresholds(triple, cfg.bisect_tol)
    out = rep.to_dict()
    out["speed_sign"] = thresholds.speed_sign(triple, rep).to_dict()
    return out


def run_profile(cfg: RunConfig) -> dict:
    P = _params(cfg)
    validity = model.validate(P)
    if not validity.shape_ok:
        raise InvalidInput(f"parameters do not give the required shapes: {validity.to_dict()}")
    triple = model.coefficients(P)
    rep = thresholds.numeric_thresholds(triple, cfg.bisect_tol)
    if rep.verdict is not thresholds.Verdict.EXISTS:
        raise profile.InfeasibleRequest(f"no admissible speeds (verdict {rep.verdict.value})")
    c = rep.midpoint if cfg.c is None else cfg.c
    asm = profile.assemble_z(triple, c, _zgamma(cfg.zgamma), rep)
    prof = profile.build_profile(triple, asm, boundary_tol=cfg.boundary_tol)
    profile.residual_check(triple, prof, asm, band=cfg.band)
    prof.write_csv(cfg.output)
    out = prof.summary()
    out.update({"c0": rep.c0, "c1": rep.c1, "z_gamma_max": asm.z_gamma_max,
                "sign_pattern_ok": asm.sign_pattern_ok(), "endpoint_gaps": asm.endpoint_gaps(),
                "csv": str(cfg.output)})
    return out


def scan(cfg: RunConfig) -> dict:
    base = _params(cfg)
    try:
        axes = regions.parse_axes(cfg.grid)
    except regions.AxisError as exc:
        raise InvalidInput(str(exc)) from exc
    cells = regions.classify_grid(axes, base, numeric=cfg.numeric, workers=cfg.workers)
    regions.write_atlas(cfg.output, cells, axes)
    return {"cells": len(cells), "axes": [a.__dict__ for a in axes], "csv": str(cfg.output),
            "in_Tg": sum(c.verdict.in_Tg for c in cells)}


def lattice_check(cfg: RunConfig) -> dict:
    P = _params(cfg)
    try:
        res = lattice.consistency_order(P, levels=cfg.levels, l0=cfg.l0, bias=cfg.bias,
                                        reaction=cfg.reaction, flux=cfg.flux)
    except lattice.LatticeError as exc:
        raise InvalidInput(str(exc)) from exc
    res.write_csv(cfg.output)
    return res.to_dict()


def _coeffs(data: dict, key: str) -> list[float]:
    v = data.get(key)
    if not isinstance(v, list) or not v or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise InvalidInput(f"{key!r} must be a non-empty list of numbers (ascending powers)")
    return [float(x) for x in v]


def _number(data: dict, key: str) -> float:
    v = data.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidInput(f"{key!r} must be a number")
    return float(v)


def generic(cfg: RunConfig) -> dict:
    """Half-interval problem {h, Q, sigma1, sigma2} or full triple {f, D, g, alpha, beta, gamma}."""
    from numpy.polynomial import Polynomial

    data = _load_json(cfg.input)
    if not isinstance(data, dict):
        raise InvalidInput("generic input must be a JSON object")
    if "h" in data or "Q" in data:
        allowed = {"h", "Q", "sigma1", "sigma2", "label"}
        if set(data) - allowed:
            raise InvalidInput(f"unknown keys {sorted(set(data) - allowed)}")
        h, Q = Polynomial(_coeffs(data, "h")), Polynomial(_coeffs(data, "Q"))
        s1 = _number(data, "sigma1") if "sigma1" in data else 0.0
        s2 = _number(data, "sigma2") if "sigma2" in data else 1.0
        prob = SingularProblem(h=h, Q=Q, sigma1=s1, sigma2=s2, dQ=Q.deriv(), F=h.integ(),
                               label=str(data.get("label", "generic")))
        try:
            prob.check()
        except ValueError as exc:
            raise InvalidInput(str(exc)) from exc
        res = threshold_cstar(prob, bisect_tol=cfg.bisect_tol)
        return {"kind": "half_interval", "threshold": res.as_dict()}
    allowed = {"f", "D", "g", "alpha", "beta", "gamma", "label"}
    if set(data) - allowed:
        raise InvalidInput(f"unknown keys {sorted(set(data) - allowed)}")
    triple = polynomial_triple(_coeffs(data, "f"), _coeffs(data, "D"), _coeffs(data, "g"),
                               _number(data, "alpha"), _number(data, "beta"),
                               _number(data, "gamma"), label=str(data.get("label", "generic")))
    shape = triple.check_shape()
    if not shape.ok:
        raise InvalidInput(f"triple does not have the required shape: {shape}")
    nec = thresholds.necessary_conditions(triple)
    rep = thresholds.numeric_thresholds(triple, cfg.bisect_tol)
    out = rep.to_dict()
    out["kind"] = "triple"
    out["necessary_conditions"] = nec.to_dict()
    return out


HANDLERS = {"analyze": analyze, "threshold": threshold, "profile": run_profile, "scan": scan,
            "lattice-check": lattice_check, "generic": generic}


def run(cfg: RunConfig) -> int:
    try:
        result = HANDLERS[cfg.command](cfg)
    except (InvalidInput, model.ParameterError, thresholds.ShapeError) as exc:
        return _fail(EXIT_INVALID, "invalid input", exc, cfg)
    except profile.InfeasibleRequest as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible request", exc, cfg)
    except (SingularODEError, QuadratureError, profile.ProfileError,
            thresholds.SpeedSignContradiction, ArithmeticError) as exc:
        return _fail(EXIT_NUMERICAL, "numerical failure", exc, cfg)
    text = dumps(result)
    if cfg.command in ("profile", "scan", "lattice-check"):
        _emit(text, cfg.output.with_suffix(cfg.output.suffix + ".json"))
    else:
        _emit(text, cfg.output)
    return EXIT_OK


def _fail(code: int, kind: str, exc: BaseException, cfg: RunConfig | None) -> int:
    cert = {"status": kind, "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    text = dumps(cert)
    sys.stderr.write(text + "\n")
    if cfg is not None and cfg.output is not None and code == EXIT_NUMERICAL:
        try:
            cfg.output.with_suffix(cfg.output.suffix + ".failure.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:           # argparse: usage errors are invalid input
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = config_from_args(ns)
    except InvalidInput as exc:
        return _fail(EXIT_INVALID, "invalid input", exc, None)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
