"""Complex gamma, principal-branch powers of (-ix)/(ix), generalized binomials.

All functions accept scalars or numpy arrays and broadcast in the usual way.
"""

from __future__ import annotations

import numpy as np

from .errors import BranchError, PoleError

# Lanczos approximation, g = 7, n = 9
_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_SQRT_2PI = np.sqrt(2.0 * np.pi)
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

POLE_TOL = 1e-12


def _check_poles(z: np.ndarray) -> None:
    re = z.real
    near = (re <= POLE_TOL) & (np.abs(re - np.round(re)) <= POLE_TOL) & (np.abs(z.imag) <= POLE_TOL)
    if np.any(near):
        bad = z[near].ravel()[0]
        raise PoleError(f"gamma has a pole at {bad!r}")


def _lanczos_series(w: np.ndarray) -> np.ndarray:
    # w = z - 1, Re z >= 0.5
    acc = np.full(w.shape, _LANCZOS[0], dtype=complex)
    for i in range(1, len(_LANCZOS)):
        acc = acc + _LANCZOS[i] / (w + i)
    return acc


def _gamma_right(z: np.ndarray) -> np.ndarray:
    w = z - 1.0
    t = w + _G + 0.5
    # t**(w+0.5) * exp(-t) folded into one exp to keep the phase exact
    return _SQRT_2PI * np.exp((w + 0.5) * np.log(t) - t) * _lanczos_series(w)


def complex_gamma(z):
    """Gamma function on the complex plane.

    Lanczos (g=7, 9 terms) for ``Re z >= 0.5``; the reflection formula
    ``pi / (sin(pi z) Gamma(1 - z))`` elsewhere. Raises :class:`PoleError`
    within ``1e-12`` of a nonpositive integer.
    """
    z_arr = np.asarray(z, dtype=complex)
    _check_poles(z_arr)
    zz = np.atleast_1d(z_arr)
    out = np.empty(zz.shape, dtype=complex)
    right = zz.real >= 0.5
    if np.any(right):
        out[right] = _gamma_right(zz[right])
    left = ~right
    if np.any(left):
        zl = zz[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * _gamma_right(1.0 - zl))
    return out.reshape(z_arr.shape) if z_arr.ndim else out[0]


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    # log(sin(pi z)) up to a multiple of 2*pi*i, safe for large |Im z|
    out = np.empty(z.shape, dtype=complex)
    up = z.imag >= 0
    zu = z[up]
    out[up] = -1j * np.pi * zu + np.log((np.exp(2j * np.pi * zu) - 1.0) / 2j)
    zd = z[~up]
    out[~up] = 1j * np.pi * zd + np.log((1.0 - np.exp(-2j * np.pi * zd)) / 2j)
    return out


def complex_lgamma(z):
    """``log Gamma(z)`` modulo ``2*pi*i``; only meant to be exponentiated.

    Used where ``Gamma`` alone would under- or overflow, e.g. products like
    ``Gamma(i y) cosh(pi y / 2)`` at large ``y``.
    """
    z_arr = np.asarray(z, dtype=complex)
    _check_poles(z_arr)
    zz = np.atleast_1d(z_arr)
    out = np.empty(zz.shape, dtype=complex)

    def right(v):
        w = v - 1.0
        t = w + _G + 0.5
        return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(_lanczos_series(w))

    r = zz.real >= 0.5
    if np.any(r):
        out[r] = right(zz[r])
    if np.any(~r):
        zl = zz[~r]
        out[~r] = np.log(np.pi) - _log_sin_pi(zl) - right(1.0 - zl)
    return out.reshape(z_arr.shape) if z_arr.ndim else out[0]


def signed_ix_pow(x, z, sign: str = "negative-axis"):
    """Principal-branch ``(-ix)**z`` (``sign="negative-axis"``) or ``(ix)**z``.

    ``Log(-ix) = ln|x| - i sgn(x) pi/2``. At ``x = 0`` the result is 0 when
    ``Re z > 0``; otherwise :class:`BranchError`.
    """
    if sign not in ("negative-axis", "positive-axis"):
        raise ValueError(f"unknown sign {sign!r}")
    x_arr = np.asarray(x, dtype=float)
    z_arr = np.asarray(z, dtype=complex)
    x_b, z_b = np.broadcast_arrays(x_arr, z_arr)
    zero = x_b == 0
    if np.any(zero & (z_b.real <= 0)):
        raise BranchError("(-ix)**z at x = 0 requires Re z > 0")
    s = -1.0 if sign == "negative-axis" else 1.0
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(x_b))
    arg = s * np.sign(x_b) * (np.pi / 2)
    with np.errstate(invalid="ignore"):
        out = np.exp(z_b * (log_abs + 1j * arg))
    out = np.where(zero, 0.0 + 0.0j, out)
    return out if out.ndim else complex(out)


def gen_binomial(z, j: int) -> complex:
    """Generalized binomial ``binom(z, j)`` by the product recurrence."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    z = complex(z)
    b = 1.0 + 0.0j
    for m in range(1, j + 1):
        b = b * ((z - m + 1) / m)
    return b


def binomial_weights(z, J: int) -> np.ndarray:
    """``binom(z, j) * (-1)**j`` for ``j = 0..J``.

    Same recurrence as :func:`gen_binomial`, with the sign folded into each
    factor: ``w_j = w_{j-1} * (j - 1 - z) / j``.
    """
    m = np.arange(1, J + 1, dtype=float)
    factors = np.empty(J + 1, dtype=complex)
    factors[0] = 1.0
    factors[1:] = (m - 1.0 - complex(z)) / m
    return np.cumprod(factors)
