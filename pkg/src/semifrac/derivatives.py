"""Semi-fractional derivatives by three independent routes.

* Grunwald-Letnikov sums over shifted samples (``gl_difference``,
  ``gl_zolotarev``).
* Adaptive quadrature of the Caputo forms (``caputo_eval``).
* Fourier inversion of the spectral symbol times ``f_hat`` (``fourier_oracle``).

Negative-side derivatives are positive-side derivatives of the reflected
function ``y -> f(-y)`` evaluated at ``-x``; every evaluator uses that rule,
so the two sides share one code path.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .admissible import AdmissibleTheta, eval_gamma_fn, gamma_coeffs, regime_of
from .errors import DecayError, DomainError, QuadratureError, RegimeError, SmoothnessError, TruncationWarning
from .logchar import OmegaWeights, derivative_symbol, omega_weights
from .special import binomial_weights

EULER_GAMMA = 0.57721566409015329
IMAG_RTOL = 1e-10
CAPUTO_MAX_ERR = 1e-7
QUAD_ABS = 1e-11


@dataclass(frozen=True)
class GLParams:
    """Space step ``h`` and inner-sum truncation ``J`` (K comes from theta)."""

    h: float = 0.01
    J: int = 200

    def __post_init__(self):
        if not (0.0 < self.h < 1.0):
            raise DomainError(f"h must lie in (0, 1), got {self.h}")
        if int(self.J) != self.J or self.J < 1:
            raise DomainError(f"J must be a positive integer, got {self.J}")
        if self.J * self.h < 2.0:
            warnings.warn(
                f"J*h = {self.J * self.h:.3g} < 2: the inner sum covers a short window",
                TruncationWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class SampledFunction:
    """A test function with optional derivatives, transform and decay exponent.

    All callables must accept numpy arrays. ``decay_beta`` declares
    ``f'(y) = O(|y|**-beta)`` in the direction the Zolotarev sums walk.
    """

    f: Callable
    df: Callable | None = None
    d2f: Callable | None = None
    f_hat: Callable | None = None
    decay_beta: float | None = None

    def __call__(self, x):
        return self.f(x)

    def reflected(self) -> "SampledFunction":
        """``y -> f(-y)`` with its derivatives and transform."""
        f, df, d2f, fh = self.f, self.df, self.d2f, self.f_hat
        return SampledFunction(
            f=lambda y: f(-np.asarray(y, dtype=float)),
            df=None if df is None else (lambda y: -df(-np.asarray(y, dtype=float))),
            d2f=None if d2f is None else (lambda y: d2f(-np.asarray(y, dtype=float))),
            f_hat=None if fh is None else (lambda k: fh(-np.asarray(k, dtype=float))),
            decay_beta=self.decay_beta,
        )

    def shifted(self, s: float) -> "SampledFunction":
        """``y -> f(y - s)``."""
        f, df, d2f, fh = self.f, self.df, self.d2f, self.f_hat
        return SampledFunction(
            f=lambda y: f(np.asarray(y, dtype=float) - s),
            df=None if df is None else (lambda y: df(np.asarray(y, dtype=float) - s)),
            d2f=None if d2f is None else (lambda y: d2f(np.asarray(y, dtype=float) - s)),
            f_hat=None if fh is None else (lambda k: np.exp(1j * np.asarray(k, dtype=float) * s) * fh(k)),
            decay_beta=self.decay_beta,
        )


def gaussian() -> SampledFunction:
    """``exp(-x**2)`` with derivatives and ``f_hat(k) = sqrt(pi) exp(-k**2 / 4)``."""
    return SampledFunction(
        f=lambda x: np.exp(-np.square(x)),
        df=lambda x: -2.0 * np.asarray(x) * np.exp(-np.square(x)),
        d2f=lambda x: (4.0 * np.square(x) - 2.0) * np.exp(-np.square(x)),
        f_hat=lambda k: math.sqrt(math.pi) * np.exp(-np.square(k) / 4.0) + 0j,
        decay_beta=4.0,
    )


def _require_fourier_theta(theta) -> AdmissibleTheta:
    if not isinstance(theta, AdmissibleTheta):
        raise SmoothnessError(f"{type(theta).__name__} has no Fourier representation; GL and spectral paths need one")
    return theta


def _oriented(f: SampledFunction, x, side: str):
    if side == "positive":
        return f, np.asarray(x, dtype=float)
    if side == "negative":
        return f.reflected(), -np.asarray(x, dtype=float)
    raise ValueError(f"unknown side {side!r}")


# --- Grunwald-Letnikov -------------------------------------------------------

def gl_mode_scales(weights: OmegaWeights, h: float) -> np.ndarray:
    """``omega_k h**(i k ct - alpha)`` per mode (``omega_{k,1}`` when Zolotarev)."""
    w = weights.omega if weights.regime != "zolotarev" else weights.omega1
    K = weights.K
    p = np.exp((1j * weights.ks * weights.c_tilde - weights.alpha) * math.log(h))
    p[K] = h ** (-weights.alpha)  # real power on the k = 0 mode
    return w * p


def gl_inner_terms(weights: OmegaWeights, f: SampledFunction, x, params: GLParams, side: str = "positive") -> np.ndarray:
    """``binom(z_k, j) (-1)**j f(x -+ j h)`` with shape ``(len(x), 2K+1, J+1)``."""
    g, xs = _oriented(f, x, side)
    xs = np.atleast_1d(xs)
    j = np.arange(params.J + 1)
    samples = np.asarray(g.f(xs[:, None] - j[None, :] * params.h), dtype=float)
    z = weights.exponents if weights.regime != "zolotarev" else 1.0 - 1j * weights.ks * weights.c_tilde
    bw = np.stack([binomial_weights(zk, params.J) for zk in z])
    return bw[None, :, :] * samples[:, None, :]


def _kahan_rows(terms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # compensated sum over the last axis, j ascending
    s = np.zeros(terms.shape[:-1], dtype=terms.dtype)
    comp = np.zeros_like(s)
    for j in range(terms.shape[-1]):
        y = terms[..., j] - comp
        t = s + y
        comp = (t - s) - y
        s = t
    return s, terms[..., -1]


def _pair_sum_modes(v: np.ndarray, K: int) -> np.ndarray:
    acc = v[..., K].copy()
    for k in range(1, K + 1):
        acc = acc + (v[..., K + k] + v[..., K - k])
    return acc


def _real_checked(total: np.ndarray) -> np.ndarray:
    resid = np.abs(total.imag)
    bound = IMAG_RTOL * np.maximum(1.0, np.abs(total.real))
    if np.any(resid > bound):
        i = int(np.argmax(resid - bound))
        raise AssertionError(f"GL sum not real: imaginary residue {resid.flat[i]:.3g}")
    return total.real


def _gl_sum(weights: OmegaWeights, f: SampledFunction, x, params: GLParams, side: str) -> np.ndarray:
    inner = gl_inner_terms(weights, f, x, params, side)
    sums, last = _kahan_rows(inner)
    big = np.abs(last) > 1e-8 * np.abs(sums)
    if np.any(big & (np.abs(last) > 0)):
        warnings.warn(
            f"last inner GL term exceeds 1e-8 of the running sum at {int(big.any(axis=1).sum())} point(s); increase J",
            TruncationWarning,
            stacklevel=3,
        )
    return _pair_sum_modes(gl_mode_scales(weights, params.h)[None, :] * sums, weights.K)


def gl_difference(theta, f: SampledFunction, x, params: GLParams | None = None, side: str = "positive"):
    """Truncated Grunwald-Letnikov double sum for ``alpha != 1``."""
    theta = _require_fourier_theta(theta)
    if regime_of(theta.alpha) == "zolotarev":
        raise RegimeError("use gl_zolotarev for alpha = 1")
    params = params or GLParams()
    w = omega_weights(theta)
    out = _real_checked(_gl_sum(w, f, x, params, side))
    return out if np.ndim(x) else float(out[0])


def _delta2(c0: float, g: SampledFunction, xs: np.ndarray, h: float, max_terms: int, chunk: int = 4096) -> np.ndarray:
    if g.df is None:
        raise DomainError("Zolotarev sums need f'")
    if g.decay_beta is None or g.decay_beta <= 0:
        raise DecayError("Zolotarev sums need a decay exponent beta > 0 for f'")
    n_ind = int(math.floor(1.0 / h + 1e-9))  # j <= 1/h, tie included
    d0 = np.asarray(g.df(xs), dtype=float)
    acc = np.zeros_like(xs)
    comp = np.zeros_like(xs)
    quiet = np.zeros(xs.shape, dtype=int)  # consecutive negligible tail terms
    done = np.zeros(xs.shape, dtype=bool)
    envelope: list[np.ndarray] = []
    j0 = 1
    while not done.all():
        if j0 > max_terms:
            raise DecayError(f"Delta^2 tail did not decay within {max_terms} terms")
        j = np.arange(j0, j0 + chunk, dtype=float)
        y = xs[:, None] - j[None, :] * h
        dj = np.asarray(g.df(y), dtype=float)
        envelope.append(np.abs(dj) * np.abs(y) ** g.decay_beta)
        ind = (j <= n_ind)[None, :]
        terms = (np.where(ind, d0[:, None], 0.0) - dj) / j[None, :]
        for m in range(chunk):
            live = ~done
            if not live.any():
                break
            t = terms[:, m]
            yk = t - comp
            s = acc + yk
            comp = np.where(live, (s - acc) - yk, comp)
            acc = np.where(live, s, acc)
            past = j[m] > n_ind
            small = np.abs(dj[:, m]) / j[m] < 1e-12 * np.maximum(np.abs(acc), 1e-300)
            quiet = np.where(live & past & small, quiet + 1, np.where(live, 0, quiet))
            done = done | (quiet >= 64)
        j0 += chunk
        n = len(envelope)
        if done.all() or (n >= 2 and n & (n - 1) == 0):
            _check_envelope(envelope)
    return -c0 * EULER_GAMMA * d0 + c0 * acc


def _check_envelope(envelope: list[np.ndarray]) -> None:
    # |f'(y)| |y|^beta must stay bounded: no later chunk may exceed the first one by 10x
    ref = np.maximum(envelope[0].max(axis=1), 1e-300)
    later = np.concatenate(envelope[1:], axis=1) if len(envelope) > 1 else None
    if later is not None and np.any(later.max(axis=1) > 10.0 * ref):
        raise DecayError("f' samples do not follow the declared |y|^-beta decay over the truncation window")


def gl_zolotarev_parts(theta, f: SampledFunction, x, params: GLParams | None = None,
                       side: str = "positive", max_terms: int = 2_000_000):
    """``(Delta1, Delta2)`` of the Zolotarev Grunwald-Letnikov formula."""
    theta = _require_fourier_theta(theta)
    if regime_of(theta.alpha) != "zolotarev":
        raise RegimeError("gl_zolotarev needs alpha = 1")
    params = params or GLParams()
    w = omega_weights(theta)
    g, xs = _oriented(f, x, side)
    xs = np.atleast_1d(xs)
    if g.df is None:
        raise DomainError("Zolotarev sums need f'")
    d1 = _gl_sum(w, f, x, params, side)
    d1 = d1 + _pair_sum_modes(w.omega2[None, :] * np.asarray(g.df(xs), dtype=float)[:, None], w.K)
    d1 = _real_checked(d1)
    d2 = _delta2(w.c0, g, xs, params.h, max_terms)
    if np.ndim(x):
        return d1, d2
    return float(d1[0]), float(d2[0])


def gl_zolotarev(theta, f: SampledFunction, x, params: GLParams | None = None, side: str = "positive"):
    """Zolotarev Grunwald-Letnikov approximation ``Delta1 + Delta2`` (alpha = 1)."""
    d1, d2 = gl_zolotarev_parts(theta, f, x, params, side)
    return d1 + d2


# --- Caputo forms --------------------------------------------------------------

def _fast_series(theta: AdmissibleTheta, coeffs: np.ndarray | None = None) -> Callable[[float], float]:
    # scalar evaluator of sum_k a_k exp(i k ct x) for quad integrands
    cs = theta.coeffs if coeffs is None else coeffs
    K, ct = theta.K, theta.c_tilde
    a0 = float(cs[K].real)
    modes = [(k * ct, 2.0 * cs[K + k].real, -2.0 * cs[K + k].imag) for k in range(1, K + 1) if cs[K + k] != 0]

    def ev(x: float) -> float:
        s = a0
        for w, cr, ci in modes:
            s += cr * math.cos(w * x) + ci * math.sin(w * x)
        return s

    return ev


class _Acc:
    def __init__(self):
        self.value = 0.0
        self.err = 0.0

    def add(self, res):
        self.value += res[0]
        self.err += res[1]


def _quad(fn, a, b, acc: _Acc, **kw):
    acc.add(integrate.quad(fn, a, b, epsabs=QUAD_ABS, epsrel=1e-12, limit=500, **kw))


def _near_zero(fn_u, u0: float, period: float, decay: float, acc: _Acc) -> None:
    """``int_{u0}^inf fn_u(u) du`` for an integrand decaying like ``exp(-decay u)``.

    Panels end on period multiples of theta(-u); stops once the remaining
    mass bound ``exp(-decay u)/decay`` is below 1e-16 of the running value.
    """
    u = u0
    m = 0
    while True:
        part = _Acc()
        _quad(fn_u, u, u + period, part)
        acc.add((part.value, part.err))
        u += period
        m += 1
        if math.exp(-decay * u) / decay < 1e-16 * max(1.0, abs(acc.value)) and m >= 2:
            return
        if m > 100_000:
            raise QuadratureError("near-zero panels did not converge", acc.err)


def _far_panels(fn, y0: float, acc: _Acc, breaks=()) -> None:
    """``int_{y0}^inf fn`` on doubling panels until three consecutive panels vanish."""
    lo, hi = y0, 2.0 * y0
    quiet = 0
    while True:
        part = _Acc()
        pts = [b for b in breaks if lo < b < hi]
        _quad(fn, lo, hi, part, points=pts or None)
        acc.add((part.value, part.err))
        quiet = quiet + 1 if abs(part.value) < 1e-15 * max(1.0, abs(acc.value)) else 0
        if quiet >= 3 and hi > 64.0 * y0:
            return
        lo, hi = hi, 2.0 * hi
        if lo > 1e15:
            raise QuadratureError("far-field panels did not converge", acc.err)


def _geometric_power_integral(tau: Callable[[float], float], alpha: float, q: float, y0: float, toward: str) -> tuple[float, float]:
    """``int y^-alpha tau(log y) dy`` over ``(0, y0]`` or ``[y0, inf)`` by period scaling."""
    acc = _Acc()
    nodes = np.geomspace(y0 / q if toward == "zero" else y0, y0 if toward == "zero" else y0 * q, 9)
    for u, v in zip(nodes[:-1], nodes[1:]):
        _quad(lambda y: y ** (-alpha) * tau(math.log(y)), u, v, acc)
    ratio = q ** (1.0 - alpha)
    factor = 1.0 / (1.0 - 1.0 / ratio) if toward == "zero" else 1.0 / (1.0 - ratio)
    return acc.value * factor, acc.err * abs(factor)


def _df_increment(g: SampledFunction, x: float, d0: float):
    """``y -> f'(x - y) - f'(x)``, switching to ``-f''(x) y`` where the difference cancels."""
    df = g.df
    if g.d2f is None:
        return lambda y: float(df(x - y)) - d0
    slope = float(g.d2f(x))
    return lambda y: -slope * y if y < 1e-8 else float(df(x - y)) - d0


def _caputo_positive(theta: AdmissibleTheta, g: SampledFunction, x: float, form: str) -> tuple[float, float]:
    a = theta.alpha
    regime = regime_of(a)
    P = theta.period
    q = math.exp(P)
    th = _fast_series(theta)
    y0 = 1.0
    u0 = -math.log(y0)
    acc = _Acc()
    breaks = (x,) if x > y0 else ()
    if regime == "sub":
        if g.df is None:
            raise DomainError("alpha < 1 Caputo form needs f'")
        df = g.df
        d0 = float(df(x))
        # f'(x) int_0^y0 y^-a theta + int_0^y0 (f'(x-y) - f'(x)) y^-a theta
        val, err = _geometric_power_integral(th, a, q, y0, "zero")
        acc.add((d0 * val, abs(d0) * err))
        inc = _df_increment(g, x, d0)
        _near_zero(lambda u: inc(math.exp(-u)) * math.exp(-u * (1.0 - a)) * th(-u),
                   u0, P, 2.0 - a, acc)
        _far_panels(lambda y: float(df(x - y)) * y ** (-a) * th(math.log(y)), y0, acc, breaks)
    elif regime == "super" and form == "theta":
        if g.df is None:
            raise DomainError("alpha > 1 theta-form needs f'")
        df = g.df
        d0 = float(df(x))
        inc = _df_increment(g, x, d0)
        _near_zero(lambda u: -inc(math.exp(-u)) * math.exp(-u * (1.0 - a)) * th(-u),
                   u0, P, 2.0 - a, acc)
        val, err = _geometric_power_integral(th, a, q, y0, "infinity")
        acc.add((d0 * val, abs(d0) * err))
        _far_panels(lambda y: -float(df(x - y)) * y ** (-a) * th(math.log(y)), y0, acc, breaks)
    elif regime == "super":
        if g.d2f is None:
            raise DomainError("alpha > 1 gamma-form needs f''")
        d2f = g.d2f
        gm = _fast_series(theta, gamma_coeffs(theta))
        _near_zero(lambda u: float(d2f(x - math.exp(-u))) * math.exp(-u * (2.0 - a)) * gm(-u),
                   u0, P, 2.0 - a, acc)
        _far_panels(lambda y: float(d2f(x - y)) * y ** (1.0 - a) * gm(math.log(y)), y0, acc, breaks)
    else:
        if g.df is None:
            raise DomainError("Zolotarev Caputo form needs f'")
        df = g.df
        d0 = float(df(x))
        inc = _df_increment(g, x, d0)
        # d0 cos y - f'(x - y) = -(f'(x - y) - d0) - 2 d0 sin^2(y / 2)
        _near_zero(lambda u: (-inc(math.exp(-u)) - 2.0 * d0 * math.sin(0.5 * math.exp(-u)) ** 2) * th(-u),
                   u0, P, 1.0, acc)
        if d0 != 0.0:
            res = integrate.quad(lambda y: th(math.log(y)) / y, y0, np.inf, weight="cos", wvar=1.0,
                                 epsabs=QUAD_ABS, limlst=200)
            acc.add((d0 * res[0], abs(d0) * res[1]))
        _far_panels(lambda y: -float(df(x - y)) * th(math.log(y)) / y, y0, acc, breaks)
    return acc.value, acc.err


def caputo_eval(theta, f: SampledFunction, x, side: str = "positive", form: str = "theta",
                return_error: bool = False):
    """Caputo form of the semi-fractional derivative by adaptive quadrature.

    ``form`` selects the theta- or gamma-kernel for ``alpha`` in (1, 2). The
    integrable singularity at ``y = 0`` is handled in ``u = -log y`` with
    panel ends on theta's period; power tails use exact period scaling.
    Raises :class:`QuadratureError` if the summed error estimate exceeds 1e-7.
    """
    theta = _require_fourier_theta(theta)
    if form not in ("theta", "gamma"):
        raise ValueError(f"unknown form {form!r}")
    if form == "gamma" and regime_of(theta.alpha) != "super":
        raise RegimeError("the gamma form exists for alpha in (1, 2) only")
    g, xs = _oriented(f, x, side)
    vals, errs = [], []
    for xi in np.atleast_1d(xs):
        v, e = _caputo_positive(theta, g, float(xi), form)
        if not math.isfinite(v) or e > CAPUTO_MAX_ERR:
            raise QuadratureError(f"Caputo quadrature error estimate {e:.3g} at x = {xi:.6g}", e)
        vals.append(v)
        errs.append(e)
    if np.ndim(x):
        out = np.array(vals)
        return (out, np.array(errs)) if return_error else out
    return (vals[0], errs[0]) if return_error else vals[0]


def classical_caputo_order_between_1_2(f: SampledFunction, x: float, order: float) -> float:
    """Classical Caputo derivative of order in (1, 2) in its first-derivative form.

    ``beta / Gamma(1 - beta) int (f'(x) - f'(x-y)) y^(-1-beta) dy`` with
    ``beta = order - 1``, one integration by parts away from the ``f''`` form.
    """
    if not (1.0 < order < 2.0):
        raise DomainError("order must lie in (1, 2)")
    if f.df is None:
        raise DomainError("needs f'")
    b = order - 1.0
    df = f.df
    d0 = float(df(x))
    acc = _Acc()
    # (0, 1] in u = -log y; integrand ~ y^(1 - b) so it decays like exp(-(1 - b) u)
    _near_zero(lambda u: (d0 - float(df(x - math.exp(-u)))) * math.exp(u * b), 0.0, 1.0, 1.0 - b, acc)
    acc.add((d0 / b, 0.0))  # f'(x) int_1^inf y^(-1-b) dy
    _far_panels(lambda y: -float(df(x - y)) * y ** (-1.0 - b), 1.0, acc, (x,) if x > 1.0 else ())
    return b * acc.value / math.gamma(1.0 - b)


def altlim_reference(c0: float, f: SampledFunction, x: float, h: float) -> float:
    """``c0 h^-1 (D^(1+h) f(x) - f'(x))`` with the classical Caputo derivative by quadrature."""
    return c0 * (classical_caputo_order_between_1_2(f, x, 1.0 + h) - float(f.df(x))) / h


# --- spectral oracle ---------------------------------------------------------------

def _k_cutoff(weights: OmegaWeights, f_hat: Callable, side: str) -> float:
    k = np.geomspace(1e-3, 1e4, 2000)
    mag = np.abs(derivative_symbol(weights, k, side) * f_hat(k))
    top = mag.max()
    if top == 0:
        return 1.0
    alive = np.nonzero(mag > 1e-17 * top)[0]
    if alive[-1] == len(k) - 1:
        raise QuadratureError("symbol times f_hat does not decay by k = 1e4")
    return float(k[alive[-1] + 1])


def fourier_oracle(weights: OmegaWeights, f_hat: Callable, x, side: str = "positive", return_error: bool = False):
    """``(1/2 pi) int exp(-ikx) symbol(k) f_hat(k) dk`` for real ``f``.

    Uses Hermitian symmetry to integrate over ``k > 0`` only; near ``k = 0``
    panels shrink geometrically so the ``k**(alpha - i k ct)`` factor is resolved.
    """
    kmax = _k_cutoff(weights, f_hat, side)
    edges = [0.0] + list(np.geomspace(1e-12, min(1.0, kmax), 25))
    if kmax > 1.0:
        edges += list(np.linspace(1.0, kmax, int(math.ceil(kmax)) + 1)[1:])
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    def integrand(k):
        s = derivative_symbol(weights, k, side) * f_hat(k)
        return (np.exp(-1j * k * xs) * s).real

    vals = np.zeros(xs.shape)
    errs = np.zeros(xs.shape)
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad_vec(integrand, lo, hi, epsabs=QUAD_ABS, epsrel=1e-12, norm="max", limit=500)
        vals += v
        errs += e
    vals, errs = vals / math.pi, errs / math.pi
    if errs.max() > CAPUTO_MAX_ERR:
        raise QuadratureError(f"Fourier inversion error estimate {errs.max():.3g}", float(errs.max()))
    if np.ndim(x):
        return (vals, errs) if return_error else vals
    return (float(vals[0]), float(errs[0])) if return_error else float(vals[0])


def write_derivative_csv(path, x, columns: dict[str, np.ndarray]) -> None:
    """CSV with ``x`` then the given columns, ``%.12e``."""
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", *names])
        for i, xi in enumerate(np.asarray(x, dtype=float)):
            w.writerow([f"{xi:.12e}", *(f"{d[i]:.12e}" for d in data)])
