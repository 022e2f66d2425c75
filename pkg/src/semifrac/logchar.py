"""Semistable log-characteristic functions and the spectral weights behind them.

For ``alpha != 1``

    psi(x) = -sum_k c_k Gamma(i k ct - alpha + 1) (-ix)^(alpha - i k ct)

and for ``alpha = 1`` the Zolotarev form with the ``c_0 (-ix) log(-ix)`` term.
The positive-side derivative acts in Fourier space through the symbol
``sum_k omega_k (-ix)^(alpha - i k ct)``; the negative side uses ``-x``.
The Fourier convention is ``f_hat(k) = int exp(iky) f(y) dy``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .admissible import AdmissibleTheta, regime_of, with_alpha
from .errors import DomainError, QuadratureError, RegimeError
from .special import complex_gamma, complex_lgamma, signed_ix_pow

SHIFT_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class OmegaWeights:
    """Spectral weights of one admissible function.

    ``omega`` is used for ``alpha != 1``; ``omega1``/``omega2`` for the
    Zolotarev case, where both vanish at ``k = 0`` and ``c0`` carries the
    logarithmic term. Arrays are indexed ``k + K``.
    """

    regime: str
    alpha: float
    c_tilde: float
    ks: np.ndarray = field(repr=False)
    omega: np.ndarray | None = field(repr=False)
    omega1: np.ndarray | None = field(repr=False)
    omega2: np.ndarray | None = field(repr=False)
    c0: float = 0.0

    @property
    def K(self) -> int:
        return (len(self.ks) - 1) // 2

    @property
    def exponents(self) -> np.ndarray:
        """``alpha - i k ct`` per mode (``1 - i k ct`` when Zolotarev)."""
        return self.alpha - 1j * self.ks * self.c_tilde


def _hermitian(half: np.ndarray, K: int) -> np.ndarray:
    # half[k] for k = 0..K -> full array with w_{-k} = conj(w_k)
    full = np.empty(2 * K + 1, dtype=complex)
    full[K:] = half
    full[:K] = np.conj(half[1:][::-1])
    return full


def _log_cos(z: np.ndarray) -> np.ndarray:
    # log cos z, safe for large |Im z|
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    up = z.imag >= 0
    zu, zd = z[up], z[~up]
    out[up] = -1j * zu + np.log((1.0 + np.exp(2j * zu)) / 2.0)
    out[~up] = 1j * zd + np.log((1.0 + np.exp(-2j * zd)) / 2.0)
    return out


def omega_weights(theta: AdmissibleTheta) -> OmegaWeights:
    """Spectral weights ``omega_k`` (or ``omega_{k,1}``, ``omega_{k,2}``) of ``theta``."""
    K, ct, a = theta.K, theta.c_tilde, theta.alpha
    k = np.arange(0, K + 1)
    ck = theta.coeffs[K:]
    nz = ck != 0
    regime = regime_of(a)
    if regime != "zolotarev":
        g = np.zeros(K + 1, dtype=complex)
        g[nz] = complex_gamma(1j * k[nz] * ct - a + 1.0)
        half = ck * g
        if regime == "super":
            half = -half
        half[~nz] = 0.0
        return OmegaWeights(regime, a, ct, theta.ks, _hermitian(half, K), None, None, theta.c0)
    w1 = np.zeros(K + 1, dtype=complex)
    w2 = np.zeros(K + 1, dtype=complex)
    m = nz & (k > 0)
    z = 1j * k[m] * ct
    w1[m] = -ck[m] * complex_gamma(z)
    # Gamma(i y) cosh(pi y / 2): each factor over/underflows for large y
    w2[m] = ck[m] * np.exp(complex_lgamma(z) + _log_cos(0.5j * np.pi * k[m] * ct))
    return OmegaWeights(regime, a, ct, theta.ks, None, _hermitian(w1, K), _hermitian(w2, K), theta.c0)


def _pair_sum(terms: np.ndarray, K: int) -> np.ndarray:
    # k = 0 first, then (k, -k) pairs; zero padding leaves the sum unchanged
    acc = terms[..., K].copy()
    for k in range(1, K + 1):
        acc = acc + (terms[..., K + k] + terms[..., K - k])
    return acc


def derivative_symbol(weights: OmegaWeights, x, side: str = "positive"):
    """Fourier multiplier of the semi-fractional derivative.

    ``side="negative"`` evaluates the symbol of the negative-side operator,
    which is the positive one at ``-x``.
    """
    if side not in ("positive", "negative"):
        raise ValueError(f"unknown side {side!r}")
    x_arr = np.asarray(x, dtype=float)
    xs = -x_arr if side == "negative" else x_arr
    K = weights.K
    if weights.regime != "zolotarev":
        p = signed_ix_pow(xs[..., None], weights.exponents)
        out = _pair_sum(weights.omega * p, K)
    else:
        e1 = 1.0 - 1j * weights.ks * weights.c_tilde
        p = signed_ix_pow(xs[..., None], e1)
        mix = -1j * np.asarray(xs)
        terms = weights.omega1 * p + weights.omega2 * mix[..., None]
        out = _pair_sum(terms, K)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_term = np.where(xs == 0, 0.0, mix * (np.log(np.abs(xs)) - 1j * np.sign(xs) * np.pi / 2))
        out = out + weights.c0 * log_term
    out = np.where(x_arr == 0, 0.0 + 0.0j, out)
    return out if out.ndim else complex(out)


def psi_eval(weights: OmegaWeights, x):
    """Log-characteristic function of the positive-side process at ``x``."""
    sym = derivative_symbol(weights, x)
    return -sym if weights.regime == "sub" else sym


def last_term_magnitude(weights: OmegaWeights, x) -> float:
    """``max |omega_{+-K} (-ix)^...|`` over ``x``: a proxy for the truncation error in K."""
    K = weights.K
    if K == 0:
        return 0.0
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    x_arr = x_arr[x_arr != 0]
    if weights.regime != "zolotarev":
        w = weights.omega[[0, -1]]
        p = signed_ix_pow(x_arr[:, None], weights.exponents[[0, -1]])
        return float(np.abs(w * p).max())
    e1 = 1.0 - 1j * weights.ks[[0, -1]] * weights.c_tilde
    p = signed_ix_pow(x_arr[:, None], e1)
    t = weights.omega1[[0, -1]] * p + weights.omega2[[0, -1]] * (-1j * x_arr[:, None])
    return float(np.abs(t).max())


def h_factor(weights: OmegaWeights, x):
    """``h(x) = -psi(x) / |x|**alpha``; log-periodic on each half-line."""
    if weights.regime == "zolotarev":
        raise RegimeError("h is defined for alpha != 1 only")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr == 0):
        raise DomainError("h(x) needs x != 0")
    out = -psi_eval(weights, x_arr) / np.abs(x_arr) ** weights.alpha
    return out if np.ndim(out) else complex(out)


def _shift_series(theta: AdmissibleTheta) -> float:
    a, ct = theta.alpha, theta.c_tilde
    K = theta.K
    k = np.arange(0, K + 1)
    ck = theta.coeffs[K:]
    z = 1j * k * ct - a + 1.0
    terms = np.zeros(K + 1, dtype=complex)
    nz = ck != 0
    terms[nz] = ck[nz] * np.exp(complex_lgamma(z[nz]) + _log_cos(0.5 * np.pi * z[nz]))
    total = terms[0] + sum(2.0 * terms[j].real for j in range(1, K + 1))
    return float(np.real(total))


def _quad(f, a, b, **kw):
    val, err = integrate.quad(f, a, b, epsabs=SHIFT_ATOL * 1e-2, epsrel=1e-13, limit=400, **kw)
    return val, err


def _shift_quadrature(theta: AdmissibleTheta) -> float:
    a = theta.alpha
    q = math.exp(theta.period)  # c**(1/alpha)
    x_a = 1.0

    def tail(x):
        return x ** (-a) * theta(math.log(x))

    # one log-period panel of x^-a theta; neighbours scale by q^(1-a)
    def panel(lo):
        nodes = np.geomspace(lo, lo * q, 9)
        parts = [_quad(tail, u, v) for u, v in zip(nodes[:-1], nodes[1:])]
        return sum(p[0] for p in parts), sum(p[1] for p in parts)

    ratio = q ** (1.0 - a)
    errs = []
    # cos(x) - 1 part on (0, x_a]: integrand ~ x^(2 - a), regular
    near, e = _quad(lambda x: (math.cos(x) - 1.0) * tail(x) if x > 0 else 0.0, 0.0, x_a)
    errs.append(e)
    # cos part on [x_a, inf) by the Fourier-integral routine
    far, e = integrate.quad(tail, x_a, np.inf, weight="cos", wvar=1.0, epsabs=SHIFT_ATOL * 1e-2, limlst=200)
    errs.append(e)
    if a < 1:
        # int_0^x_a x^-a theta = panel / (1 - q^-(1-a))
        p, e = panel(x_a / q)
        total = near + p / (1.0 - 1.0 / ratio) + far
        errs.append(e / (1.0 - 1.0 / ratio))
    else:
        # subtract int_{x_a}^inf x^-a theta = panel / (1 - q^(1-a))
        p, e = panel(x_a)
        total = near + far - p / (1.0 - ratio)
        errs.append(e / (1.0 - ratio))
    est = float(sum(errs))
    if not np.isfinite(total) or est > 1e-7:
        raise QuadratureError(f"shift quadrature error estimate {est:.3g} too large", est)
    return float(total)


def shift_dn(theta_n: AdmissibleTheta, method: str = "series") -> float:
    """Centering shift ``d_n``; ``psi_n(x) - i x d_n`` tends to the Zolotarev exponent."""
    if theta_n.alpha == 1.0:
        raise RegimeError("d_n is defined for alpha != 1")
    if method == "series":
        return _shift_series(theta_n)
    if method == "quadrature":
        return _shift_quadrature(theta_n)
    raise ValueError(f"unknown method {method!r}")


def zolotarev_continuity_error(theta_family: AdmissibleTheta, alpha_seq, x_grid, method: str = "series") -> list[float]:
    """``sup_x |psi_n(x) - i x d_n - psi_Z(x)|`` for each ``alpha_n``.

    All members share the coefficients and ``c`` of ``theta_family``. With
    ``d_n`` as defined in :func:`shift_dn` the shift enters with a minus sign;
    the plus sign diverges like ``1/|1 - alpha_n|``.
    """
    x = np.asarray(x_grid, dtype=float)
    psi_z = psi_eval(omega_weights(with_alpha(theta_family, 1.0)), x)
    out = []
    for an in alpha_seq:
        th = with_alpha(theta_family, float(an))
        d = shift_dn(th, method)
        diff = psi_eval(omega_weights(th), x) - 1j * x * d - psi_z
        out.append(float(np.abs(diff).max()))
    return out


def psi_total(weights_pos: OmegaWeights | None, weights_neg: OmegaWeights | None,
              D1: float, D2: float, v: float, k):
    """``i v k + D1 sym_pos(k) + D2 sym_neg(-k)``, the exponent of the solution's transform."""
    k_arr = np.asarray(k, dtype=float)
    out = 1j * v * k_arr
    if weights_pos is not None and D1 != 0:
        out = out + D1 * derivative_symbol(weights_pos, k_arr, "positive")
    if weights_neg is not None and D2 != 0:
        out = out + D2 * derivative_symbol(weights_neg, k_arr, "negative")
    return out


def char_function(weights_pos, weights_neg, D1: float, D2: float, v: float, k, t: float):
    """``exp(t psi_total(k))``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    out = np.exp(t * psi_total(weights_pos, weights_neg, D1, D2, v, k))
    return out if np.ndim(out) else complex(out)


def log_grid() -> np.ndarray:
    """The 49-point grid ``{+-10**(j/8) : j = -24..24}`` (positive half)."""
    return 10.0 ** (np.arange(-24, 25) / 8.0)


def write_psi_csv(path, x, psi) -> None:
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "re_psi", "im_psi"])
        for xi, pi in zip(x, psi):
            w.writerow([f"{xi:.12e}", f"{pi.real:.12e}", f"{pi.imag:.12e}"])
