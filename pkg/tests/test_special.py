from __future__ import annotations

import cmath
import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semifrac import BranchError, PoleError, binomial_weights, complex_gamma, complex_lgamma, gen_binomial, signed_ix_pow

from .conftest import DATA

off_pole = st.complex_numbers(min_magnitude=0, max_magnitude=30, allow_nan=False, allow_infinity=False).filter(
    lambda z: abs(z.imag) <= 20 and -3 <= z.real <= 3 and min(abs(z + n) for n in range(0, 5)) > 1e-3)


def test_gamma_trivial_values():
    assert complex_gamma(1.0) == pytest.approx(1.0, rel=1e-15)
    assert complex_gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert complex_gamma(5.0) == pytest.approx(24.0, rel=1e-14)


def test_gamma_against_frozen_limit_product():
    ref = json.loads((DATA / "gamma_reference.json").read_text())
    z = np.array([complex(*r["z"]) for r in ref])
    g = np.array([complex(*r["gamma"]) for r in ref])
    got = complex_gamma(z)
    assert np.max(np.abs(got - g) / np.abs(g)) <= 1e-12


def test_gamma_half_plus_i():
    assert abs(complex_gamma(0.5 + 1j) - complex(mp.gamma(mp.mpc(0.5, 1)))) <= 1e-12 * abs(complex_gamma(0.5 + 1j))


@pytest.mark.parametrize("z", [0.0, -1.0, -2.0, -7.0, -3.0 + 1e-13])
def test_gamma_poles(z):
    with pytest.raises(PoleError):
        complex_gamma(z)


@settings(max_examples=200, deadline=None)
@given(off_pole)
def test_gamma_conjugate_symmetry(z):
    a = complex_gamma(z.conjugate())
    b = complex_gamma(z).conjugate()
    assert abs(a - b) <= 1e-13 * max(abs(a), 1e-300)


@settings(max_examples=200, deadline=None)
@given(off_pole)
def test_gamma_recurrence(z):
    assert complex_gamma(z + 1) == pytest.approx(z * complex_gamma(z), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(off_pole)
def test_lgamma_matches_log_of_gamma(z):
    assert cmath.exp(complex_lgamma(z)) == pytest.approx(complex_gamma(z), rel=1e-11)


def test_signed_ix_pow_examples():
    assert signed_ix_pow(2.0, 1.0) == pytest.approx(-2j, abs=1e-15)
    assert signed_ix_pow(-1.0, 0.5) == pytest.approx(cmath.exp(1j * math.pi / 4), abs=1e-15)
    assert signed_ix_pow(0.0, 0.5 + 3j) == 0
    with pytest.raises(BranchError):
        signed_ix_pow(0.0, -0.5 + 1j)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e6), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_signed_ix_pow_conjugation(x, z):
    a = signed_ix_pow(x, z, "negative-axis")
    b = signed_ix_pow(x, z.conjugate(), "positive-axis").conjugate()
    assert abs(a - b) <= 1e-12 * max(abs(a), 1e-300)


def test_gen_binomial_examples():
    assert gen_binomial(3.7 - 2j, 0) == 1
    assert gen_binomial(1.5, 2) == pytest.approx(0.375, rel=1e-15)


def _binom_gamma_ratio(z: complex, j: int) -> complex:
    return complex(mp.exp(mp.loggamma(z + 1) - mp.loggamma(j + 1) - mp.loggamma(z - j + 1)))


def test_gen_binomial_vs_gamma_ratio():
    mp.mp.dps = 30
    z = 0.5 - 1j
    for j in (1, 7, 50, 200, 500):
        ref = _binom_gamma_ratio(z, j)
        assert abs(gen_binomial(z, j) - ref) <= 1e-10 * abs(ref)


def test_binomial_weights_signs_and_recurrence():
    w = binomial_weights(0.5 - 1j, 500)
    for j in (0, 1, 2, 10, 333, 500):
        assert abs(w[j] - (-1) ** j * gen_binomial(0.5 - 1j, j)) <= 1e-13 * abs(w[j])


@pytest.mark.parametrize("z", [0.3, 0.5 + 2j, 1.5 - 1j, 1.9])
def test_binomial_envelope(z):
    # |binom(z, j)| j^(1+Re z) tends to 1/|Gamma(-z)|; C is the larger of that
    # limit and the early maximum, fitted once and never exceeded afterwards
    j = np.arange(1, 10_001)
    mag = np.abs(binomial_weights(z, 10_000)[1:]) * j ** (1.0 + complex(z).real)
    C = max(mag[:100].max(), 1.0 / abs(complex(mp.gamma(-mp.mpc(z)))))
    assert mag[100:].max() <= C * (1 + 1e-12)
