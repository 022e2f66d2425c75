"""Semi-fractional diffusion: explicit finite differences and a Fourier oracle.

The equation is

    dp/dt = -v dp/dx + D1 (positive derivative) p + D2 (negative derivative) p

with ``D1, D2 <= 0`` for ``alpha < 1`` and ``>= 0`` for ``alpha >= 1``. Space
uses the Grunwald-Letnikov sums on the grid itself (``h`` equals the grid
spacing), time uses explicit Euler.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, signal

from .admissible import AdmissibleTheta, LevySpec, StPetersburgTheta, classical_theta, regime_of
from .errors import (
    DivergenceError,
    DomainError,
    InstabilityError,
    QuadratureError,
    SignError,
    StabilityWarning,
    WindowError,
)
from .logchar import OmegaWeights, omega_weights, psi_total
from .special import binomial_weights


@dataclass(frozen=True)
class DiffusionProblem:
    """Validated problem data; build it with :func:`validate_problem`."""

    v: float
    D1: float
    D2: float
    theta1: AdmissibleTheta | None
    theta2: AdmissibleTheta | None
    alpha: float
    c: float
    b: float
    T1: float
    T2: float
    dt: float = 0.01
    h: float = 0.01
    ghost: int = 50

    @property
    def n_interior(self) -> int:
        return int(round(self.b / self.h))

    @property
    def n_half(self) -> int:
        return self.n_interior + self.ghost

    def grid(self) -> np.ndarray:
        """Ghost-extended grid ``h * (-N..N)``, exactly symmetric."""
        return self.h * np.arange(-self.n_half, self.n_half + 1, dtype=float)

    @property
    def n_steps(self) -> int:
        return int(round((self.T2 - self.T1) / self.dt))

    def weights(self) -> tuple[OmegaWeights | None, OmegaWeights | None]:
        w1 = omega_weights(self.theta1) if (self.theta1 is not None and self.D1 != 0) else None
        w2 = omega_weights(self.theta2) if (self.theta2 is not None and self.D2 != 0) else None
        return w1, w2

    def to_dict(self) -> dict:
        return {
            "v": self.v, "D1": self.D1, "D2": self.D2,
            "theta1": None if self.theta1 is None else self.theta1.to_dict(),
            "theta2": None if self.theta2 is None else self.theta2.to_dict(),
            "alpha": self.alpha, "c": self.c, "b": self.b, "T1": self.T1, "T2": self.T2,
            "dt": self.dt, "h": self.h, "ghost": self.ghost,
        }


def validate_problem(*, v: float = 0.0, D1: float, D2: float, theta1=None, theta2=None,
                     alpha: float | None = None, c: float | None = None, b: float, T1: float, T2: float,
                     dt: float = 0.01, h: float = 0.01, ghost: int = 50) -> DiffusionProblem:
    """Check the sign rule, shared ``(alpha, c)`` and the grid parameters."""
    thetas = [t for t in (theta1, theta2) if t is not None]
    if not thetas:
        raise DomainError("at least one admissible function is required")
    for t in thetas:
        if not isinstance(t, AdmissibleTheta):
            raise DomainError("the solver needs Fourier-represented admissible functions")
    alpha = thetas[0].alpha if alpha is None else float(alpha)
    c = thetas[0].c if c is None else float(c)
    for t in thetas:
        if not (math.isclose(t.alpha, alpha, rel_tol=0, abs_tol=1e-15) and math.isclose(t.c, c, rel_tol=1e-15)):
            raise DomainError(f"theta has (alpha, c) = ({t.alpha}, {t.c}), problem has ({alpha}, {c})")
    if D1 != 0 and theta1 is None:
        raise DomainError("D1 != 0 needs theta1")
    if D2 != 0 and theta2 is None:
        raise DomainError("D2 != 0 needs theta2")
    if D1 + D2 == 0:
        raise SignError("D1 + D2 must be nonzero")
    if alpha < 1 and (D1 > 0 or D2 > 0):
        raise SignError(f"alpha = {alpha} < 1 needs D1, D2 <= 0 (got {D1}, {D2})")
    if alpha >= 1 and (D1 < 0 or D2 < 0):
        raise SignError(f"alpha = {alpha} >= 1 needs D1, D2 >= 0 (got {D1}, {D2})")
    if not b > 0:
        raise DomainError("b must be positive")
    if not (0 < T1 < T2):
        raise DomainError("need 0 < T1 < T2")
    if not (dt > 0 and 0 < h < 1):
        raise DomainError("need dt > 0 and 0 < h < 1")
    if int(ghost) != ghost or ghost < 1:
        raise DomainError("ghost must be a positive integer")
    return DiffusionProblem(float(v), float(D1), float(D2), theta1, theta2, alpha, c,
                            float(b), float(T1), float(T2), float(dt), float(h), int(ghost))


# --- drift ---------------------------------------------------------------------

def _g(regime: str, r: float) -> float:
    if regime == "sub":
        return r / (1.0 + r * r)
    if regime == "super":
        return -(r ** 3) / (1.0 + r * r)
    # r/(1+r^2) - sin r = -r^3/(1+r^2) + (r - sin r)
    if r < 1e-2:
        r2 = r * r
        rms = r * r2 / 6.0 * (1.0 - r2 / 20.0 * (1.0 - r2 / 42.0))
    else:
        rms = r - math.sin(r)
    return -(r ** 3) / (1.0 + r * r) + rms


def _tail_fn(theta, alpha: float):
    if isinstance(theta, AdmissibleTheta):
        from .derivatives import _fast_series
        th = _fast_series(theta)
    else:
        th = theta
    return lambda r: r ** (-alpha) * float(th(math.log(r)))


def _drift_integral(T_full, regime: str, lo: float, hi: float, kinks) -> tuple[float, float]:
    """``int_lo^hi g'(r) T(r) dr``, split at kinks; cos parts by the weighted rule."""
    pts = [lo] + sorted(k for k in kinks if lo < k < hi) + [hi]
    val = err = 0.0
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=400)
    for a, b in zip(pts[:-1], pts[1:]):
        # the cos-weighted rule samples endpoints; keep them on this side of a kink
        d = 1e-10 * (b - a)
        T = (lambda a_, b_, d_: lambda r: T_full(min(max(r, a_ + d_), b_ - d_)))(a, b, d)
        if regime == "sub" or (regime == "zolotarev" and a >= 1.0):
            res = integrate.quad(lambda r: (1.0 - r * r) / (1.0 + r * r) ** 2 * T(r), a, b, **opts)
            val, err = val + res[0], err + res[1]
            if regime == "zolotarev":
                res = integrate.quad(T, a, b, weight="cos", wvar=1.0, **opts)
                val, err = val - res[0], err + res[1]
        elif regime == "super":
            res = integrate.quad(lambda r: -(3 * r * r + r ** 4) / (1.0 + r * r) ** 2 * T(r), a, b, **opts)
            val, err = val + res[0], err + res[1]
        else:
            # r < 1: 1 - cos r = 2 sin^2(r/2) avoids cancellation
            res = integrate.quad(
                lambda r: (-(3 * r * r + r ** 4) / (1.0 + r * r) ** 2 + 2.0 * math.sin(0.5 * r) ** 2) * T(r),
                a, min(b, 1.0), **opts)
            val, err = val + res[0], err + res[1]
            if b > 1.0:
                v2, e2 = _drift_integral(T_full, regime, 1.0, b, [])
                val, err = val + v2, err + e2
    return val, err


def drift_one_side(theta, alpha: float, regime: str, *, max_doublings: int = 200, rtol: float = 1e-10,
                   eps0: float = math.exp(0.5), R0: float = math.exp(0.5)) -> tuple[float, list[float]]:
    """``int_(0,inf) g dphi`` for ``phi(r, inf) = r^-alpha theta(log r)`` by cutoff doubling.

    Uses ``int_(a,b] g dphi = g(a)T(a) - g(b)T(b) + int_a^b g' T`` so atoms of a
    discrete measure need no special handling. Cutoffs ``eps0 / 2^n`` and
    ``R0 2^n`` avoid the lattice ``2^k``. Returns the value and the history.
    """
    if regime not in ("sub", "zolotarev", "super"):
        raise ValueError(f"unknown regime {regime!r}")
    T = _tail_fn(theta, alpha)
    kinks_of = getattr(theta, "kinks", lambda lo, hi: [])

    def kinks(lo, hi):
        return [math.exp(u) for u in kinks_of(math.log(lo), math.log(hi))]

    eps, R = eps0, R0
    inner = 0.0
    if R > eps:
        inner, _ = _drift_integral(T, regime, eps, R, kinks(eps, R))
    history = [_g(regime, eps) * T(eps) - _g(regime, R) * T(R) + inner]
    quiet = 0
    for _ in range(max_doublings):
        e_new, r_new = eps / 2.0, R * 2.0
        add_lo, _ = _drift_integral(T, regime, e_new, eps, kinks(e_new, eps))
        add_hi, _ = _drift_integral(T, regime, R, r_new, kinks(R, r_new))
        inner += add_lo + add_hi
        eps, R = e_new, r_new
        val = _g(regime, eps) * T(eps) - _g(regime, R) * T(R) + inner
        if not math.isfinite(val):
            raise DivergenceError("drift integral overflowed", history)
        step = abs(val - history[-1])
        history.append(val)
        quiet = quiet + 1 if step <= rtol * max(1.0, abs(val)) else 0
        if quiet >= 3:
            return val, history
    raise DivergenceError(
        f"compensated integral not Cauchy after {max_doublings} cutoff doublings "
        f"(last increment {abs(history[-1] - history[-2]):.3g})",
        history,
    )


def compute_drift(spec: LevySpec, alpha: float, regime: str | None = None, v: float = 0.0) -> float:
    """Drift ``a = v + int g dphi`` over both half-lines of the Levy measure.

    ``regime`` picks the compensator: ``sub`` ``y/(1+y^2)``, ``zolotarev``
    ``y/(1+y^2) - sin y``, ``super`` ``y/(1+y^2) - y``.
    """
    regime = regime or regime_of(alpha)
    a = v
    if spec.theta_pos is not None and spec.weight_pos > 0:
        a += spec.weight_pos * drift_one_side(spec.theta_pos, alpha, regime)[0]
    if spec.theta_neg is not None and spec.weight_neg > 0:
        # g is odd, so the mirrored half-line contributes with a minus sign
        a -= spec.weight_neg * drift_one_side(spec.theta_neg, alpha, regime)[0]
    return a


# --- initial condition -------------------------------------------------------

def _gil_pelaez_cdf(phi, y: float) -> float:
    """``F(y) = 1/2 - (1/pi) int_0^inf Im(exp(-iky) phi(k)) / k dk``."""
    opts = dict(epsabs=1e-13, limit=400)
    if y == 0.0:
        val, err = integrate.quad(lambda k: np.imag(phi(k)) / k, 0.0, np.inf, **opts)
        return 0.5 - val / math.pi
    ay = abs(y)
    k0 = min(1.0, 2.0 * math.pi / ay)
    near, e1 = integrate.quad(lambda k: np.imag(np.exp(-1j * k * y) * phi(k)) / k, 0.0, k0, **opts)
    s = 1.0 if y > 0 else -1.0
    # Im(e^{-iky} phi) = cos(k|y|) Im phi - s sin(k|y|) Re phi
    fc, e2 = integrate.quad(lambda k: np.imag(phi(k)) / k, k0, np.inf, weight="cos", wvar=ay, epsabs=1e-13, limlst=200)
    fs, e3 = integrate.quad(lambda k: np.real(phi(k)) / k, k0, np.inf, weight="sin", wvar=ay, epsabs=1e-13, limlst=200)
    est = e1 + e2 + e3
    if est > 1e-7:
        raise QuadratureError(f"CDF inversion error estimate {est:.3g} at y = {y:.6g}", est)
    return 0.5 - (near + fc - s * fs) / math.pi


def _series_cdf(A: complex, alpha: float, y: float, tol: float = 1e-16, max_terms: int = 400) -> float:
    """CDF of ``exp(-A k^alpha)`` (``k > 0``, Hermitian extension) for ``alpha < 1``.

    Term-by-term Fourier inversion of the exponential series; it converges
    for every ``y != 0`` when ``alpha < 1`` and fast once ``|A| |y|^-alpha`` is small.
    """
    ay = abs(y)
    sgn = -1.0 if y > 0 else 1.0  # (i y)^-(s+1) = |y|^-(s+1) exp(sgn i pi (s+1)/2)
    unit = -A / abs(A)
    total = 0.0
    small = 0
    for n in range(1, max_terms + 1):
        lt = n * math.log(abs(A)) + math.lgamma(n * alpha) - math.lgamma(n + 1.0) - n * alpha * math.log(ay)
        z = unit ** n * np.exp(sgn * 0.5j * math.pi * (n * alpha + 1.0))
        term = math.exp(lt) * z.real
        total += term
        small = small + 1 if math.exp(lt) < tol * max(abs(total), 1e-300) else 0
        if small >= 3:
            break
    else:
        raise QuadratureError(f"stable series did not converge at y = {y:.6g}")
    tail = total / math.pi  # 1 - F(y) for y > 0, F(y) for y < 0
    return 1.0 - tail if y > 0 else tail


def initial_condition(problem: DiffusionProblem, x=None) -> np.ndarray:
    """Stable density at ``T1`` of the constant-theta problem, as cell averages.

    The initial law solves the same equation with classical (constant) theta
    on each side and ``v = 0``. Each grid value is ``(F(x + h/2) - F(x - h/2)) / h``.
    For ``alpha < 1``, ``F`` comes from Gil-Pelaez inversion near the peak
    and from the convergent stable series in the far field; the law is
    strictly stable, so ``F_T1(x) = F_1(x T1^(-1/alpha))``. For ``alpha > 1``
    the averages are a single Fourier inversion weighted by the cell's sinc.
    """
    x = problem.grid() if x is None else np.asarray(x, dtype=float)
    h, a = problem.h, problem.alpha
    cl = omega_weights(classical_theta(a))
    w1 = cl if problem.D1 != 0 else None
    w2 = cl if problem.D2 != 0 else None
    if a != 1.0:
        scale = problem.T1 ** (-1.0 / a)

        def phi(k):
            return np.exp(psi_total(w1, w2, problem.D1, problem.D2, 0.0, k))
    else:
        scale = 1.0

        def phi(k):
            return np.exp(problem.T1 * psi_total(w1, w2, problem.D1, problem.D2, 0.0, k))

    symmetric = problem.D1 == problem.D2 and np.array_equal(x, -x[::-1])
    if a > 1.0:
        def psi_T1(k):
            return problem.T1 * psi_total(w1, w2, problem.D1, problem.D2, 0.0, k)

        def cell(xs):
            return fourier_density(psi_T1, 1.0, xs, weight=lambda k: np.sinc(k * h / (2.0 * math.pi)))
        if not symmetric:
            return cell(x)
        n = len(x)
        right = cell(x[n // 2:])
        return np.concatenate([right[1:][::-1], right]) if n % 2 else np.concatenate([right[::-1], right])

    # psi_total(k) = -A k^alpha on k > 0 for the classical problem
    A = -complex(psi_total(w1, w2, problem.D1, problem.D2, 0.0, 1.0))
    # beyond this the series ratio |A| |y|^-alpha is at most 1/2
    y_series = (2.0 * abs(A)) ** (1.0 / a) if a < 1.0 else math.inf

    def cdf(e: float) -> float:
        y = e * scale
        if abs(y) >= y_series:
            return _series_cdf(A, a, y)
        return _gil_pelaez_cdf(phi, y)

    edges = np.concatenate([x - h / 2.0, [x[-1] + h / 2.0]])
    if symmetric:
        n = len(x)
        half = edges[n // 2:]
        F_half = np.array([cdf(e) for e in half])
        p_half = (F_half[1:] - F_half[:-1]) / h
        return np.concatenate([p_half[1:][::-1], p_half]) if n % 2 else np.concatenate([p_half[::-1], p_half])
    F = np.array([cdf(e) for e in edges])
    return (F[1:] - F[:-1]) / h


# --- solver ------------------------------------------------------------------

@dataclass
class DensitySolution:
    """Space-time density with per-step diagnostics."""

    x_grid: np.ndarray
    t_grid: np.ndarray
    p: np.ndarray
    mass: np.ndarray
    mass_domain: np.ndarray
    min_value: np.ndarray
    b: float
    problem: DiffusionProblem | None = field(default=None, repr=False)

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.t_grid - t)))
        if abs(self.t_grid[i] - t) > 1e-9:
            raise DomainError(f"t = {t} is not a solver time step")
        return i

    def at(self, t: float, domain_only: bool = True) -> tuple[np.ndarray, np.ndarray]:
        i = self.index_of(t)
        if not domain_only:
            return self.x_grid, self.p[i]
        m = np.abs(self.x_grid) <= self.b + 1e-9
        return self.x_grid[m], self.p[i, m]


def _gl_weights(w: OmegaWeights, h: float, M: int) -> list[tuple[complex, np.ndarray, bool]]:
    # (scale_k, binomial weights, doubled) for k >= 0; k < 0 follows by conjugation
    from .derivatives import gl_mode_scales
    scales = gl_mode_scales(w, h)
    z = w.exponents
    K = w.K
    out = [(scales[K], binomial_weights(z[K], M), False)]
    for k in range(1, K + 1):
        if scales[K + k] != 0:
            out.append((scales[K + k], binomial_weights(z[K + k], M), True))
    return out


def _apply_side(modes, p: np.ndarray, side: str, lo: int, hi: int, window: int | None) -> np.ndarray:
    """GL operator on ``p`` for indices ``lo..hi-1``; j ascending, fixed order."""
    n = len(p)
    out = np.zeros(hi - lo)
    for scale, bw, doubled in modes:
        acc = np.zeros(hi - lo, dtype=complex)
        jmax = (hi - 1 if side == "positive" else n - 1 - lo)
        if window is not None:
            jmax = min(jmax, window)
        for j in range(jmax + 1):
            if side == "positive":
                s = max(lo, j)
                if s >= hi:
                    break
                acc[s - lo:] += bw[j] * p[s - j:hi - j]
            else:
                e = min(hi, n - j)
                if e <= lo:
                    break
                acc[:e - lo] += bw[j] * p[lo + j:e + j]
        term = scale * acc
        out = out + (2.0 * term.real if doubled else term.real)
    return out


def stability_number(problem: DiffusionProblem) -> float:
    """``dt (|D1|+|D2|) h^-alpha sum_k |omega_k| S_J``, a CFL-like heuristic."""
    M = 2 * problem.n_half
    worst = 0.0
    for w in problem.weights():
        if w is None:
            continue
        om = w.omega if w.regime != "zolotarev" else w.omega1
        s = sum(abs(om[i]) * np.abs(binomial_weights(w.exponents[i], M)).sum() for i in range(len(om)) if om[i] != 0)
        worst = max(worst, s)
    return problem.dt * (abs(problem.D1) + abs(problem.D2)) * problem.h ** (-problem.alpha) * worst


def solve(problem: DiffusionProblem, *, workers: int = 1, gl_window: int | None = None,
          p0: np.ndarray | None = None) -> DensitySolution:
    """Explicit Euler with GL space operators on the ghost-extended grid.

    ``gl_window`` limits the inner sums to that many neighbours; ``None``
    sums to the edge of the extended grid. ``workers`` splits every spatial
    sweep into blocks; the per-point summation order never changes, so the
    result is bitwise independent of it.
    """
    if regime_of(problem.alpha) == "zolotarev":
        raise DomainError("the grid solver covers alpha != 1")
    x = problem.grid()
    n = len(x)
    h, dt = problem.h, problem.dt
    p = initial_condition(problem, x) if p0 is None else np.array(p0, dtype=float)
    w1, w2 = problem.weights()
    M = n - 1
    modes1 = _gl_weights(w1, h, M) if w1 is not None else None
    modes2 = _gl_weights(w2, h, M) if w2 is not None else None
    cfl = stability_number(problem)
    if cfl > 1.0:
        warnings.warn(f"stability heuristic {cfl:.3g} > 1; explicit stepping may blow up", StabilityWarning, stacklevel=2)

    nblk = max(1, int(workers))
    bounds = np.linspace(0, n, nblk + 1).astype(int)
    blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    pool = ThreadPoolExecutor(max_workers=nblk) if nblk > 1 else None

    def rhs_block(pc: np.ndarray, lo: int, hi: int) -> np.ndarray:
        r = np.zeros(hi - lo)
        if modes1 is not None:
            r = r + problem.D1 * _apply_side(modes1, pc, "positive", lo, hi, gl_window)
        if modes2 is not None:
            r = r + problem.D2 * _apply_side(modes2, pc, "negative", lo, hi, gl_window)
        if problem.v != 0.0:
            pe = np.concatenate([[0.0], pc, [0.0]])
            i = np.arange(lo, hi) + 1
            d = (pe[i] - pe[i - 1]) / h if problem.v > 0 else (pe[i + 1] - pe[i]) / h
            r = r - problem.v * d
        return r

    def rhs(pc: np.ndarray) -> np.ndarray:
        if pool is None:
            return rhs_block(pc, 0, n)
        parts = list(pool.map(lambda bl: rhs_block(pc, *bl), blocks))
        return np.concatenate(parts)

    dom = np.abs(x) <= problem.b + 1e-9
    steps = problem.n_steps
    P = np.empty((steps + 1, n))
    P[0] = p
    sup = [float(np.abs(p).max())]
    try:
        for s in range(1, steps + 1):
            p = p + dt * rhs(p)
            if not np.all(np.isfinite(p)):
                raise InstabilityError(f"non-finite density at step {s}", s)
            sup.append(float(np.abs(p).max()))
            if s >= 10 and sup[-1] >= 2.0 * sup[-11]:
                raise InstabilityError(f"sup norm doubled within 10 steps at step {s}", s)
            P[s] = p
    finally:
        if pool is not None:
            pool.shutdown()
    t = problem.T1 + dt * np.arange(steps + 1)
    mass = np.trapezoid(P, x, axis=1)
    mass_dom = np.trapezoid(P[:, dom], x[dom], axis=1)
    return DensitySolution(x, t, P, mass, mass_dom, P.min(axis=1), problem.b, problem)


# --- Fourier oracle --------------------------------------------------------------

_GL_HI = np.polynomial.legendre.leggauss(16)
_GL_LO = np.polynomial.legendre.leggauss(12)


def _k_max(psi, t: float) -> float:
    k = np.geomspace(1e-2, 1e9, 4000)
    mag = np.exp(t * np.real(psi(k)))
    alive = np.nonzero(mag > 1e-17)[0]
    if alive[-1] == len(k) - 1:
        raise QuadratureError("characteristic function does not decay by k = 1e9")
    return float(k[alive[-1] + 1])


def fourier_density(psi, t: float, x, *, max_nodes: int = 4_000_000, return_error: bool = False, weight=None):
    """``(1/pi) int_0^inf Re(exp(-ikx) exp(t psi(k)) w(k)) dk`` on composite Gauss-Legendre panels.

    Panels are geometric toward ``k = 0`` (down to 1e-12) and at most one
    oscillation of ``exp(-ikx)`` wide elsewhere; the error estimate is the
    difference between 16- and 12-point rules. ``weight`` is an optional
    real multiplier ``w(k)`` bounded by 1, such as a cell-average sinc.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kmax = _k_max(psi, t)
    xmax = max(1.0, float(np.abs(x).max()))
    dk = min(2.0 * math.pi / xmax, 0.25)
    k1 = min(kmax, dk)
    edges = list(np.geomspace(1e-12, k1, int(math.ceil(math.log(k1 / 1e-12) / math.log(1.5))) + 1))
    if kmax > k1:
        m = int(math.ceil((kmax - k1) / dk))
        edges += list(np.linspace(k1, kmax, m + 1)[1:])
    edges = np.array([0.0] + edges)
    a, b = edges[:-1], edges[1:]
    if len(a) * 16 > max_nodes:
        raise QuadratureError(f"{len(a) * 16} quadrature nodes needed; time too small for this grid")

    def rule(nodes, wts):
        kk = (0.5 * (b - a)[:, None] * nodes[None, :] + 0.5 * (a + b)[:, None]).ravel()
        ww = (0.5 * (b - a)[:, None] * wts[None, :]).ravel()
        ph = ww * np.exp(t * psi(kk))
        if weight is not None:
            ph = ph * weight(kk)
        out = np.empty(len(x))
        for i0 in range(0, len(x), 64):
            xs = x[i0:i0 + 64]
            out[i0:i0 + 64] = (np.exp(-1j * np.outer(xs, kk)) @ ph).real
        return out / math.pi

    hi = rule(*_GL_HI)
    lo = rule(*_GL_LO)
    err = np.abs(hi - lo)
    if err.max() > 1e-7:
        raise QuadratureError(f"density inversion error estimate {err.max():.3g}", float(err.max()))
    return (hi, err) if return_error else hi


def density_oracle(problem: DiffusionProblem, t: float, x_grid, *, from_initial: bool = False, return_error: bool = False):
    """``p(x, t)`` from ``exp(t psi_total)``, independent of the grid solver.

    With ``from_initial=True`` the transform is that of the solver's actual
    initial value problem: the constant-theta law at ``T1`` evolved for
    ``t - T1`` under the semistable operator.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    w1, w2 = problem.weights()
    if not from_initial:
        def psi(k):
            return psi_total(w1, w2, problem.D1, problem.D2, problem.v, k)
        return fourier_density(psi, t, x_grid, return_error=return_error)
    cl = omega_weights(classical_theta(problem.alpha))
    c1 = cl if problem.D1 != 0 else None
    c2 = cl if problem.D2 != 0 else None
    s = t - problem.T1

    def psi(k):
        return (problem.T1 * psi_total(c1, c2, problem.D1, problem.D2, 0.0, k)
                + s * psi_total(w1, w2, problem.D1, problem.D2, problem.v, k))
    return fourier_density(psi, 1.0, x_grid, return_error=return_error)


# --- tail diagnostics ------------------------------------------------------------

@dataclass(frozen=True)
class TailReport:
    t: float
    slope: float
    intercept: float
    amplitude: float
    period: float
    convexity_changes_right: int
    convexity_changes_left: int
    n_points: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def convexity_changes(p: np.ndarray, rel_floor: float = 1e-9, p_floor: float | None = None) -> int:
    """Sign changes of the second difference.

    Second differences below ``rel_floor`` times their maximum, and (if
    ``p_floor`` is given) those centred on points with ``p <= p_floor``, are
    treated as noise and skipped.
    """
    p = np.asarray(p, dtype=float)
    if len(p) < 3:
        return 0
    d2 = p[2:] - 2.0 * p[1:-1] + p[:-2]
    floor = rel_floor * max(float(np.abs(d2).max()), 1e-300)
    keep = np.abs(d2) > floor
    if p_floor is not None:
        keep &= p[1:-1] > p_floor
    s = np.sign(d2[keep])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def dominant_log_period(u: np.ndarray, r: np.ndarray, periods=None) -> float:
    """Period in ``u = log x`` with the largest Lomb-Scargle power of residuals ``r``."""
    if periods is None:
        periods = np.geomspace(0.1, 50.0, 2000)
    freqs = 2.0 * math.pi / periods
    power = signal.lombscargle(u, r - r.mean(), freqs)
    return float(periods[int(np.argmax(power))])


def tail_diagnostics(solution: DensitySolution, t: float, window: tuple[float, float] | None = None) -> TailReport:
    """Log-log slope, residual oscillation and convexity changes on ``[1, b]``."""
    x, p = solution.at(t)
    lo, hi = window or (1.0, solution.b)
    right = (x >= lo) & (x <= hi)
    left = (x <= -lo) & (x >= -hi)
    ok = right & (p > 0)
    if ok.sum() < 16:
        raise WindowError(f"only {int(ok.sum())} positive tail points in [{lo}, {hi}]")
    u = np.log(x[ok])
    lp = np.log(p[ok])
    slope, intercept = np.polyfit(u, lp, 1)
    r = lp - (slope * u + intercept)
    amp = 0.5 * float(r.max() - r.min())
    period = dominant_log_period(u, r)
    p_floor = 1e-8 * float(p.max())  # ignore a tail that is numerically zero
    return TailReport(float(t), float(slope), float(intercept), amp, period,
                      convexity_changes(p[right], p_floor=p_floor),
                      convexity_changes(p[left][::-1], p_floor=p_floor), int(ok.sum()))


# --- output --------------------------------------------------------------------

def write_slice_csv(path, x, p) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "p"])
        for xi, pi in zip(np.asarray(x, dtype=float), np.asarray(p, dtype=float)):
            w.writerow([f"{xi:.12e}", f"{pi:.12e}"])


def write_solution(solution: DensitySolution, times, out_dir, extra: dict | None = None) -> list[str]:
    """One ``x,p`` CSV per time plus ``manifest.json``; returns the CSV paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for t in times:
        x, p = solution.at(t)
        path = os.path.join(out_dir, f"p_t{t:.4f}.csv")
        write_slice_csv(path, x, p)
        paths.append(path)
    pr = solution.problem
    manifest = {
        "problem": pr.to_dict() if pr is not None else None,
        "theta_hashes": {
            "theta1": pr.theta1.content_hash() if pr is not None and pr.theta1 is not None else None,
            "theta2": pr.theta2.content_hash() if pr is not None and pr.theta2 is not None else None,
        },
        "outputs": [os.path.basename(q) for q in paths],
        "diagnostics": [
            {"step": i, "t": float(t), "mass": float(m), "mass_domain": float(md), "min": float(mn)}
            for i, (t, m, md, mn) in enumerate(zip(solution.t_grid, solution.mass, solution.mass_domain, solution.min_value))
        ],
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return paths


__all__ = [
    "DiffusionProblem", "DensitySolution", "TailReport", "validate_problem", "compute_drift",
    "drift_one_side", "initial_condition", "solve", "density_oracle", "fourier_density",
    "tail_diagnostics", "convexity_changes", "stability_number", "write_slice_csv", "write_solution",
    "StPetersburgTheta",
]
