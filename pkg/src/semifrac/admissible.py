"""Admissible log-periodic functions given by truncated Fourier series.

An admissible function ``theta`` is strictly positive, ``log(c**(1/alpha))``
periodic and satisfies ``theta(y + d) <= exp(alpha d) theta(y)`` for
``d >= 0``. It is stored through its Fourier coefficients ``c_k``,
``|k| <= K``, with ``theta(x) = sum c_k exp(i k c_tilde x)`` and
``c_tilde = 2 pi alpha / log c``.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DecayWarning,
    DomainError,
    GrowthError,
    PositivityError,
    RegimeError,
    SmoothnessError,
    SymmetryError,
    Violation,
)
from .special import complex_gamma

SAMPLES_PER_PERIOD = 4096
SYMMETRY_RTOL = 1e-13
IMAG_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AdmissibleTheta:
    """Validated admissible function. Build it with :func:`validate_theta`."""

    alpha: float
    c: float
    coeffs: np.ndarray = field(repr=False)  # c_{-K}..c_K

    @property
    def K(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def c_tilde(self) -> float:
        return 2.0 * math.pi * self.alpha / math.log(self.c)

    @property
    def period(self) -> float:
        return math.log(self.c) / self.alpha

    @property
    def c0(self) -> float:
        return float(self.coeffs[self.K].real)

    def coeff(self, k: int) -> complex:
        if abs(k) > self.K:
            return 0j
        return complex(self.coeffs[k + self.K])

    def __call__(self, x):
        return eval_theta(self, x)

    def derivative(self, x):
        """``theta'(x)``, real."""
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.c_tilde * np.multiply.outer(x, self.ks))
        return ((1j * self.c_tilde * self.ks * self.coeffs) * phase).sum(axis=-1).real

    def kinks(self, lo: float, hi: float) -> list[float]:
        return []

    def __eq__(self, other):
        if not isinstance(other, AdmissibleTheta):
            return NotImplemented
        return (self.alpha == other.alpha and self.c == other.c
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.alpha, self.c, self.coeffs.tobytes()))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "coeffs": [[k, self.coeff(k).real, self.coeff(k).imag] for k in range(self.K + 1)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def content_hash(self) -> str:
        """Git blob hash of the canonical JSON form."""
        body = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


@dataclass(frozen=True)
class StPetersburgTheta:
    """``theta(x) = exp(x - floor(x / log 2) log 2)`` with ``alpha = 1, c = 2``.

    Tail function of the discrete Levy measure with atoms ``2**-k`` at
    ``2**k``. Piecewise smooth but discontinuous, so it has no Fourier
    representation here and is refused by the Grunwald-Letnikov code.
    """

    alpha: float = 1.0
    c: float = 2.0

    @property
    def period(self) -> float:
        return math.log(self.c) / self.alpha

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = math.log(2.0)
        out = np.exp(x - np.floor(x / p) * p)
        return out if out.ndim else float(out)

    def kinks(self, lo: float, hi: float) -> list[float]:
        """Jump locations of theta in ``(lo, hi)``."""
        p = self.period
        return [m * p for m in range(math.floor(lo / p) + 1, math.ceil(hi / p))
                if lo < m * p < hi]


def _as_full_coeffs(coeffs) -> np.ndarray:
    if isinstance(coeffs, Mapping):
        K = max(abs(int(k)) for k in coeffs) if coeffs else 0
        arr = np.zeros(2 * K + 1, dtype=complex)
        for k, v in coeffs.items():
            arr[int(k) + K] = complex(v)
        return arr
    arr = np.asarray(coeffs, dtype=complex)
    if arr.ndim != 1 or len(arr) % 2 == 0:
        raise DomainError("coefficient sequence must have odd length 2K+1 (k = -K..K)")
    return arr.copy()


def _theta_samples(alpha: float, c: float, coeffs: np.ndarray, n: int):
    K = (len(coeffs) - 1) // 2
    ks = np.arange(-K, K + 1)
    ct = 2.0 * math.pi * alpha / math.log(c)
    period = math.log(c) / alpha
    x = np.linspace(0.0, period, n, endpoint=False)
    phase = np.exp(1j * ct * np.outer(x, ks))
    th = (phase @ coeffs).real
    dth = (phase @ (1j * ct * ks * coeffs)).real
    return x, th, dth


def validate_theta(alpha: float, c: float, coeffs) -> AdmissibleTheta:
    """Check and freeze an admissible function.

    ``coeffs`` is either a mapping ``k -> c_k`` or a sequence ``c_{-K}..c_K``.
    Every violated invariant is collected; the exception type is that of the
    first one (symmetry, then positivity, then growth) and ``.violations``
    holds all of them with the first sample point where each fails.
    """
    if not (0.0 < alpha < 2.0):
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    if not c > 1.0:
        raise DomainError(f"c must exceed 1, got {c}")
    if callable(coeffs):
        raise SmoothnessError("only Fourier-represented admissible functions can be validated; "
                              "closed-form callables are accepted by levy_tail and the drift code only")
    arr = _as_full_coeffs(coeffs)
    if not np.all(np.isfinite(arr)):
        raise DomainError("coefficients must be finite")
    K = (len(arr) - 1) // 2
    violations: list[Violation] = []
    kinds: list[type] = []

    scale = max(float(np.abs(arr).max()), 1e-300)
    for k in range(0, K + 1):
        a, b = arr[K + k], arr[K - k]
        if abs(b - np.conj(a)) > SYMMETRY_RTOL * scale:
            violations.append(Violation("symmetry", None, f"c_{-k} != conj(c_{k}): {b!r} vs {a!r}"))
            kinds.append(SymmetryError)
            break
    if not kinds:
        # exact conjugate symmetry from here on
        for k in range(1, K + 1):
            arr[K - k] = np.conj(arr[K + k])
        arr[K] = arr[K].real

    x, th, dth = _theta_samples(alpha, c, arr, SAMPLES_PER_PERIOD)
    th_scale = max(float(np.abs(th).max()), 1e-300)
    bad = np.nonzero(th <= 0.0)[0]
    if bad.size:
        i = int(bad[0])
        violations.append(Violation("positivity", float(x[i]), f"theta({x[i]:.6g}) = {th[i]:.6g} <= 0"))
        kinds.append(PositivityError)

    c0 = arr[K].real
    ct = 2.0 * math.pi * alpha / math.log(c)
    off = np.abs(np.delete(arr, K))
    koff = np.abs(np.delete(np.arange(-K, K + 1), K))
    fast_ok = float((koff * ct * off).sum()) <= alpha * (c0 - float(off.sum()))
    if not fast_ok:
        excess = dth - alpha * th
        bad = np.nonzero(excess > 1e-12 * th_scale)[0]
        if bad.size:
            i = int(bad[0])
            violations.append(Violation(
                "growth", float(x[i]),
                f"theta'({x[i]:.6g}) = {dth[i]:.6g} > alpha*theta = {alpha * th[i]:.6g}",
            ))
            kinds.append(GrowthError)

    if violations:
        kinds_order = [SymmetryError, PositivityError, GrowthError]
        first = min(kinds, key=kinds_order.index)
        raise first("; ".join(v.detail for v in violations), violations)

    _check_decay(arr)
    frozen = arr.copy()
    frozen.flags.writeable = False
    return AdmissibleTheta(float(alpha), float(c), frozen)


def _check_decay(arr: np.ndarray) -> None:
    # |c_k| <= C/k^2: flag when the upper half of the modes scales worse than the lower half
    K = (len(arr) - 1) // 2
    if K < 4:
        return
    k = np.arange(1, K + 1)
    m = np.abs(arr[K + 1:]) * k**2
    half = K // 2
    if m[half:].max() > m[:half].max():
        warnings.warn(
            f"Fourier coefficients decay slower than 1/k^2 (max k^2|c_k| = {m.max():.3g} at k = {int(k[m.argmax()])})",
            DecayWarning,
            stacklevel=3,
        )


def theta_from_nonnegative(alpha: float, c: float, coeffs: Sequence) -> AdmissibleTheta:
    """Build from ``[[k, re, im], ...]`` rows with ``k >= 0``."""
    full: dict[int, complex] = {}
    for row in coeffs:
        k, re, im = int(row[0]), float(row[1]), float(row[2])
        if k < 0:
            raise DomainError("serialized coefficients list k >= 0 only")
        full[k] = complex(re, im)
        if k:
            full[-k] = complex(re, -im)
    return validate_theta(alpha, c, full)


def theta_from_dict(d: Mapping) -> AdmissibleTheta:
    return theta_from_nonnegative(float(d["alpha"]), float(d["c"]), d["coeffs"])


def theta_from_json(text: str) -> AdmissibleTheta:
    return theta_from_dict(json.loads(text))


def eval_theta(theta: AdmissibleTheta, x):
    """Real value of the truncated series at ``x`` (scalar or array)."""
    x_arr = np.asarray(x, dtype=float)
    phase = np.exp(1j * theta.c_tilde * np.multiply.outer(x_arr, theta.ks))
    val = phase @ theta.coeffs
    resid = np.abs(val.imag)
    assert np.all(resid <= IMAG_TOL * np.maximum(1.0, np.abs(val.real))), "theta series is not real"
    out = val.real
    return out if out.ndim else float(out)


def gamma_coeffs(theta: AdmissibleTheta) -> np.ndarray:
    if not (1.0 < theta.alpha < 2.0):
        raise RegimeError(f"gamma is defined for alpha in (1, 2), got {theta.alpha}")
    return theta.coeffs / (theta.alpha - 1.0 - 1j * theta.ks * theta.c_tilde)


def eval_gamma_fn(theta: AdmissibleTheta, x):
    """``gamma(x)`` with ``int_y^inf s^-alpha theta(log s) ds = y^(1-alpha) gamma(log y)``."""
    g = gamma_coeffs(theta)
    x_arr = np.asarray(x, dtype=float)
    phase = np.exp(1j * theta.c_tilde * np.multiply.outer(x_arr, theta.ks))
    out = (phase @ g).real
    return out if out.ndim else float(out)


def levy_tail(theta, r):
    """``phi(r, inf) = r**-alpha * theta(log r)``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("levy_tail needs r > 0")
    out = r_arr ** (-theta.alpha) * np.asarray(theta(np.log(r_arr)))
    return out if out.ndim else float(out)


def with_alpha(theta: AdmissibleTheta, alpha_n: float) -> AdmissibleTheta:
    """Same coefficients and ``c``, new index; revalidated."""
    if alpha_n == theta.alpha:
        return theta
    return validate_theta(alpha_n, theta.c, np.array(theta.coeffs))


def classical_theta(alpha: float, regime: str | None = None, c: float | None = None) -> AdmissibleTheta:
    """Constant theta whose derivative is the classical (or Zolotarev) one.

    ``sub``: ``1/Gamma(1-alpha)``; ``super``: ``-1/Gamma(1-alpha)``;
    ``zolotarev`` (alpha = 1): ``2/pi``. ``c`` defaults to ``exp(2 pi alpha)``.
    """
    expected = "sub" if alpha < 1 else ("zolotarev" if alpha == 1 else "super")
    regime = regime or expected
    if regime != expected:
        raise RegimeError(f"regime {regime!r} does not match alpha = {alpha}")
    if regime == "zolotarev":
        c0 = 2.0 / math.pi
    else:
        g = complex_gamma(1.0 - alpha).real
        c0 = 1.0 / g if regime == "sub" else -1.0 / g
    if c is None:
        c = math.exp(2.0 * math.pi * alpha)
    return validate_theta(alpha, c, {0: c0})


def regime_of(alpha: float) -> str:
    if alpha == 1.0:
        return "zolotarev"
    return "sub" if alpha < 1.0 else "super"


@dataclass(frozen=True)
class LevySpec:
    """Two-sided Levy measure ``phi(r,inf) = w+ r^-a theta+(log r)``, mirrored for ``w-``."""

    theta_pos: object | None
    theta_neg: object | None
    weight_pos: float
    weight_neg: float

    def __post_init__(self):
        if self.weight_pos < 0 or self.weight_neg < 0:
            raise DomainError("Levy weights are absolute values |D1|, |D2| and must be >= 0")
        pos = self.theta_pos is not None and self.weight_pos > 0
        neg = self.theta_neg is not None and self.weight_neg > 0
        if not (pos or neg):
            raise DomainError("at least one side needs a theta with positive weight")
