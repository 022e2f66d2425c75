"""Command-line front end: JSON run configs in, CSV and JSON reports out.

Usage::

    python3 -m semifrac solve-diffusion --config run.json --out results/

Exit codes: 0 on success, 2 when input is rejected (bad config, inadmissible
theta, sign or domain violations), 3 on numerical failure. A machine-readable
``report.json`` is written to the output directory in every case.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .admissible import AdmissibleTheta, regime_of, theta_from_dict, with_alpha
from .derivatives import GLParams, caputo_eval, fourier_oracle, gaussian, gl_difference, gl_zolotarev, write_derivative_csv
from .diffusion import (
    density_oracle,
    solve,
    stability_number,
    tail_diagnostics,
    validate_problem,
    write_slice_csv,
    write_solution,
)
from .errors import (
    AdmissibilityError,
    DecayError,
    DivergenceError,
    DomainError,
    InstabilityError,
    ParseError,
    QuadratureError,
    RangeError,
    RegimeError,
    SemifracError,
    SignError,
    SmoothnessError,
    WindowError,
)
from .logchar import log_grid, omega_weights, psi_eval, shift_dn, write_psi_csv, zolotarev_continuity_error

COMMANDS = ("validate-theta", "eval-psi", "eval-derivative", "solve-diffusion", "density",
            "continuity-check", "diagnostics")
METHODS = ("gl", "caputo", "fourier", "all")
EXIT_OK, EXIT_REJECTED, EXIT_NUMERICAL = 0, 2, 3

# name -> (low, high, integer); bounds are inclusive except OPEN_AT_ZERO / OPEN_ABOVE
RANGES: dict[str, tuple[float, float, bool]] = {
    "h": (0.0, 1.0, False),
    "J": (1, 10_000_000, True),
    "dt": (0.0, 1.0, False),
    "grid_b": (0.0, 1000.0, False),
    "ghost": (1, 100_000, True),
    "T1": (0.0, 1e6, False),
    "T2": (0.0, 1e6, False),
    "n_points": (2, 1_000_000, True),
    "workers": (1, 256, True),
    "D1": (-1e6, 1e6, False),
    "D2": (-1e6, 1e6, False),
    "v": (-1e6, 1e6, False),
}
OPEN_AT_ZERO = {"h", "dt", "grid_b", "T1", "T2"}
OPEN_ABOVE = {"h"}


@dataclass
class RunConfig:
    """Fully resolved run configuration."""

    command: str
    out: str = "out"
    theta: object = None  # path to a theta JSON file or the inline object
    theta2: object = None
    h: float = 0.01
    J: int = 200
    dt: float = 0.01
    grid_b: float = 5.0
    ghost: int = 50
    T1: float = 0.01
    T2: float = 1.0
    times: list = field(default_factory=list)
    method: str = "all"
    D1: float = -1.0
    D2: float = 0.0
    v: float = 0.0
    side: str = "positive"
    n_points: int = 201
    alpha_seq: list = field(default_factory=lambda: [0.8, 0.9, 0.99, 0.999])
    tail_window: list = field(default_factory=lambda: [1.0, None])
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


KEYS = {f.name for f in fields(RunConfig)}


def _check_range(name: str, value, source: str):
    lo, hi, integer = RANGES[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{source}: {name} must be a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise RangeError(f"{source}: {name} must be an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    low_ok = value > lo if name in OPEN_AT_ZERO else value >= lo
    high_ok = value < hi if name in OPEN_ABOVE else value <= hi
    if not (math.isfinite(value) and low_ok and high_ok):
        left = "(" if name in OPEN_AT_ZERO else "["
        right = ")" if name in OPEN_ABOVE else "]"
        raise RangeError(f"{source}: {name} = {value!r} outside {left}{lo}, {hi}{right}")
    return value


def _parse_times(value, source: str) -> list[float]:
    if isinstance(value, str):
        try:
            value = [float(s) for s in value.split(",") if s.strip()]
        except ValueError as exc:
            raise ParseError(f"{source}: times must be comma-separated numbers ({exc})") from None
    if not isinstance(value, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in value):
        raise ParseError(f"{source}: times must be a list of numbers")
    out = [float(t) for t in value]
    if any(not (t > 0 and math.isfinite(t)) for t in out):
        raise RangeError(f"{source}: times must be positive")
    return out


def _apply(cfg: dict, key: str, value, source: str) -> None:
    if key not in KEYS:
        raise ParseError(f"{source}: unknown key {key!r}")
    if key in RANGES:
        value = _check_range(key, value, source)
    elif key == "times":
        value = _parse_times(value, source)
    elif key == "method":
        if value not in METHODS:
            raise ParseError(f"{source}: method must be one of {', '.join(METHODS)}, got {value!r}")
    elif key == "command":
        if value not in COMMANDS:
            raise ParseError(f"{source}: unknown command {value!r}")
    elif key == "side":
        if value not in ("positive", "negative"):
            raise ParseError(f"{source}: side must be 'positive' or 'negative'")
    elif key == "alpha_seq":
        if not isinstance(value, list) or not value:
            raise ParseError(f"{source}: alpha_seq must be a non-empty list")
        value = [float(a) for a in value]
        if any(not (0 < a < 2) or a == 1 for a in value):
            raise RangeError(f"{source}: alpha_seq entries must lie in (0, 2) without 1")
    elif key == "tail_window":
        if not (isinstance(value, list) and len(value) == 2):
            raise ParseError(f"{source}: tail_window must be [lo, hi] (hi may be null)")
    elif key == "out":
        if not isinstance(value, str) or not value:
            raise ParseError(f"{source}: out must be a path")
    cfg[key] = value


def parse_config(path: str | None = None, overrides: dict | None = None, command: str | None = None) -> RunConfig:
    """Merge a JSON config file with flag overrides into a :class:`RunConfig`.

    Unknown keys raise :class:`ParseError` (with the JSON line for syntax
    errors); out-of-range numbers raise :class:`RangeError`.
    """
    cfg: dict = {}
    if path is not None:
        if not os.path.exists(path):
            raise ParseError(f"config file not found: {path}")
        with open(path) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ParseError(f"{path}: top level must be a JSON object")
        base = os.path.dirname(os.path.abspath(path))
        for key, value in data.items():
            _apply(cfg, key, value, path)
        for key in ("theta", "theta2"):
            if isinstance(cfg.get(key), str) and not os.path.isabs(cfg[key]):
                cfg[key] = os.path.join(base, cfg[key])
    for key, value in (overrides or {}).items():
        if value is not None:
            _apply(cfg, key, value, f"--{key.replace('_', '-')}")
    if command is not None:
        if "command" in cfg and cfg["command"] != command:
            raise ParseError(f"command {command!r} conflicts with config command {cfg['command']!r}")
        _apply(cfg, "command", command, "command line")
    if "command" not in cfg:
        raise ParseError("no command given")
    rc = RunConfig(**cfg)
    if rc.T2 <= rc.T1:
        raise RangeError(f"T2 = {rc.T2} must exceed T1 = {rc.T1}")
    return rc


def _load_theta(spec) -> AdmissibleTheta:
    if spec is None:
        raise ParseError("this command needs 'theta' (a path or an inline object)")
    if isinstance(spec, str):
        if not os.path.exists(spec):
            raise ParseError(f"theta file not found: {spec}")
        with open(spec) as fh:
            try:
                spec = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{fh.name}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(spec, dict) or not {"alpha", "c", "coeffs"} <= set(spec):
        raise ParseError("theta must have keys alpha, c, coeffs")
    extra = set(spec) - {"alpha", "c", "coeffs"}
    if extra:
        raise ParseError(f"unknown theta key(s): {', '.join(sorted(extra))}")
    try:
        return theta_from_dict(spec)
    except SemifracError:
        raise
    except (TypeError, ValueError, KeyError, IndexError) as exc:
        raise ParseError(f"malformed theta: {exc}") from None


def _x_grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(-cfg.grid_b, cfg.grid_b, cfg.n_points)


def _problem(cfg: RunConfig):
    th1 = _load_theta(cfg.theta)
    th2 = _load_theta(cfg.theta2) if cfg.theta2 is not None else th1
    return validate_problem(v=cfg.v, D1=cfg.D1, D2=cfg.D2, theta1=th1 if cfg.D1 != 0 else None,
                            theta2=th2 if cfg.D2 != 0 else None, alpha=th1.alpha, c=th1.c, b=cfg.grid_b,
                            T1=cfg.T1, T2=cfg.T2, dt=cfg.dt, h=cfg.h, ghost=cfg.ghost)


# --- commands ------------------------------------------------------------------

def _cmd_validate_theta(cfg: RunConfig, report: dict) -> list[str]:
    th = _load_theta(cfg.theta)
    report.update(alpha=th.alpha, c=th.c, K=th.K, regime=regime_of(th.alpha), content_hash=th.content_hash())
    return []


def _cmd_eval_psi(cfg: RunConfig, report: dict) -> list[str]:
    th = _load_theta(cfg.theta)
    w = omega_weights(th)
    g = log_grid()
    x = np.concatenate([-g[::-1], [0.0], g])
    path = os.path.join(cfg.out, "psi.csv")
    write_psi_csv(path, x, psi_eval(w, x))
    return [path]


SWEEP_CHUNK = 64


def _sweep(fn, x: np.ndarray, workers: int):
    """Evaluate ``fn`` on fixed 64-point blocks of ``x``.

    The block layout never depends on ``workers`` (adaptive vector quadrature
    refines per block), so results are bitwise independent of the worker count.
    """
    blocks = [x[i:i + SWEEP_CHUNK] for i in range(0, len(x), SWEEP_CHUNK)]
    if workers <= 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, blocks))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def _cmd_eval_derivative(cfg: RunConfig, report: dict) -> list[str]:
    th = _load_theta(cfg.theta)
    f = gaussian()
    x = _x_grid(cfg)
    params = GLParams(h=cfg.h, J=cfg.J)
    w = omega_weights(th)
    cols: dict[str, np.ndarray] = {}
    if cfg.method in ("gl", "all"):
        gl = gl_zolotarev if regime_of(th.alpha) == "zolotarev" else gl_difference
        cols["gl"] = _sweep(lambda xs: gl(th, f, xs, params, side=cfg.side), x, cfg.workers)
    if cfg.method in ("caputo", "all"):
        cols["caputo"], err = _sweep(lambda xs: caputo_eval(th, f, xs, side=cfg.side, return_error=True), x, cfg.workers)
        report["caputo_max_error_estimate"] = float(err.max())
    if cfg.method in ("fourier", "all"):
        cols["fourier"], err = _sweep(lambda xs: fourier_oracle(w, f.f_hat, xs, side=cfg.side, return_error=True),
                                      x, cfg.workers)
        report["fourier_max_error_estimate"] = float(err.max())
    if "gl" in cols and "caputo" in cols:
        cols["abs_gl_minus_caputo"] = np.abs(cols["gl"] - cols["caputo"])
        report["max_abs_gl_minus_caputo"] = float(cols["abs_gl_minus_caputo"].max())
    path = os.path.join(cfg.out, "derivative.csv")
    write_derivative_csv(path, x, cols)
    return [path]


def _solve(cfg: RunConfig, report: dict):
    pr = _problem(cfg)
    times = sorted({pr.T1, *(cfg.times or [pr.T2])})
    for t in times:
        if not pr.T1 <= t <= pr.T2 + 1e-12:
            raise RangeError(f"output time {t} outside [T1, T2] = [{pr.T1}, {pr.T2}]")
    report["stability_number"] = stability_number(pr)
    sol = solve(pr, workers=cfg.workers)
    return pr, sol, times


def _cmd_solve_diffusion(cfg: RunConfig, report: dict) -> list[str]:
    pr, sol, times = _solve(cfg, report)
    report["mass_T2"] = float(sol.mass[-1])
    report["min_p"] = float(sol.min_value.min())
    return write_solution(sol, times, cfg.out) + [os.path.join(cfg.out, "manifest.json")]


def _cmd_density(cfg: RunConfig, report: dict) -> list[str]:
    pr = _problem(cfg)
    x = _x_grid(cfg)
    paths = []
    worst = 0.0
    for t in cfg.times or [pr.T2]:
        p, err = density_oracle(pr, t, x, return_error=True)
        worst = max(worst, float(err.max()))
        path = os.path.join(cfg.out, f"density_t{t:.4f}.csv")
        write_slice_csv(path, x, p)
        paths.append(path)
    report["max_error_estimate"] = worst
    return paths


def _cmd_continuity_check(cfg: RunConfig, report: dict) -> list[str]:
    th = _load_theta(cfg.theta)
    fam = with_alpha(th, 1.0) if th.alpha != 1.0 else th
    x = _x_grid(cfg)
    errs = zolotarev_continuity_error(fam, cfg.alpha_seq, x)
    path = os.path.join(cfg.out, "continuity.csv")
    with open(path, "w", newline="") as fh:
        fh.write("alpha_n,error,d_series,d_quadrature\r\n")
        for an, e in zip(cfg.alpha_seq, errs):
            tn = with_alpha(fam, an)
            fh.write(f"{an:.12e},{e:.12e},{shift_dn(tn, 'series'):.12e},{shift_dn(tn, 'quadrature'):.12e}\r\n")
    report["errors"] = errs
    report["strictly_decreasing"] = all(b < a for a, b in zip(errs, errs[1:]))
    return [path]


def _cmd_diagnostics(cfg: RunConfig, report: dict) -> list[str]:
    pr, sol, times = _solve(cfg, report)
    lo, hi = cfg.tail_window
    window = (float(lo), float(hi if hi is not None else pr.b))
    rows = [tail_diagnostics(sol, t, window).as_dict() for t in times if t > pr.T1]
    path = os.path.join(cfg.out, "diagnostics.csv")
    cols = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\r\n")
        for r in rows:
            fh.write(",".join(f"{r[c]:.12e}" if isinstance(r[c], float) else str(r[c]) for c in cols) + "\r\n")
    report["tails"] = rows
    report["log_period_expected"] = math.log(pr.c) / pr.alpha
    return [path]


HANDLERS = {
    "validate-theta": _cmd_validate_theta,
    "eval-psi": _cmd_eval_psi,
    "eval-derivative": _cmd_eval_derivative,
    "solve-diffusion": _cmd_solve_diffusion,
    "density": _cmd_density,
    "continuity-check": _cmd_continuity_check,
    "diagnostics": _cmd_diagnostics,
}

REJECTED = (ParseError, RangeError, AdmissibilityError, SignError, DomainError, RegimeError, SmoothnessError, WindowError)
NUMERICAL = (InstabilityError, QuadratureError, DivergenceError, DecayError)


def _error_report(exc: Exception) -> dict:
    if isinstance(exc, AdmissibilityError):
        return exc.report()
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, InstabilityError):
        out["step"] = exc.step
    if isinstance(exc, QuadratureError) and exc.estimate is not None:
        out["estimate"] = exc.estimate
    return out


def run(cfg: RunConfig) -> int:
    """Execute one command; writes ``config.resolved.json`` and ``report.json`` to ``cfg.out``."""
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "config.resolved.json"), "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
    report: dict = {"command": cfg.command}
    status = EXIT_OK
    try:
        report["outputs"] = [os.path.basename(p) for p in HANDLERS[cfg.command](cfg, report)]
        report["ok"] = True
    except REJECTED as exc:
        report.update(ok=False, **_error_report(exc))
        status = EXIT_REJECTED
    except NUMERICAL as exc:
        report.update(ok=False, **_error_report(exc))
        status = EXIT_NUMERICAL
    with open(os.path.join(cfg.out, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, default=float)
    if status != EXIT_OK:
        print(f"{report['error']}: {report['message']}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semifrac", description="Semi-fractional derivatives and diffusion.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (default: out)")
    ap.add_argument("--h", type=float, help="grid / GL step")
    ap.add_argument("--J", type=int, help="GL truncation index")
    ap.add_argument("--dt", type=float, help="time step")
    ap.add_argument("--grid-b", type=float, dest="grid_b", help="half-width of the reporting domain")
    ap.add_argument("--times", help="comma-separated output times")
    ap.add_argument("--method", choices=METHODS, help="derivative evaluator(s)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in ("out", "h", "J", "dt", "grid_b", "times", "method")}
    try:
        cfg = parse_config(args.config, overrides, args.command)
    except (ParseError, RangeError) as exc:
        out = args.out or "out"
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "report.json"), "w") as fh:
            json.dump({"command": args.command, "ok": False, **_error_report(exc)}, fh, indent=2)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
