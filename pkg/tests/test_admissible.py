from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from semifrac import (
    DomainError,
    GrowthError,
    LevySpec,
    PositivityError,
    RegimeError,
    SmoothnessError,
    StPetersburgTheta,
    SymmetryError,
    classical_theta,
    eval_gamma_fn,
    eval_theta,
    gamma_coeffs,
    levy_tail,
    theta_from_dict,
    theta_from_json,
    validate_theta,
    with_alpha,
)
from semifrac.errors import DecayWarning

from .conftest import one_sided_theta, sine_theta, symmetric_theta, zolotarev_theta

ALL_THETAS = [sine_theta(0.5), sine_theta(1.5), zolotarev_theta(), one_sided_theta(), symmetric_theta(),
              classical_theta(0.5), classical_theta(1.5), classical_theta(1.0)]


def test_sine_example_accepted(theta_sine_05):
    assert theta_sine_05.K == 1
    assert theta_sine_05.c_tilde == pytest.approx(2 * math.pi * 0.5 / math.log(math.exp(math.pi)))
    assert theta_sine_05.period == pytest.approx(2 * math.pi)


def test_symmetry_violation():
    with pytest.raises(SymmetryError) as ei:
        validate_theta(0.5, math.e, {0: 1.0, 1: 0.1j, -1: 0.1j})
    assert ei.value.violations[0].kind == "symmetry"


def test_positivity_violation():
    with pytest.raises(PositivityError):
        validate_theta(0.5, math.e, {0: 0.1, 1: 0.1, -1: 0.1})


def test_growth_violation_reports_first_sample():
    with pytest.raises(GrowthError) as ei:
        validate_theta(0.5, math.exp(math.pi), {0: 1.0, 1: -0.45j, -1: 0.45j})
    (v,) = ei.value.violations
    assert v.x == 0.0
    assert "0.9" in v.detail and "0.5" in v.detail
    rep = ei.value.report()
    assert rep["error"] == "GrowthError"


def test_all_violations_collected():
    # negative somewhere and too steep: both reported, positivity raised first
    with pytest.raises(PositivityError) as ei:
        validate_theta(0.5, math.exp(math.pi), {0: 0.5, 1: -0.45j, -1: 0.45j})
    kinds = {v.kind for v in ei.value.violations}
    assert kinds == {"positivity", "growth"}


def test_domain_errors():
    with pytest.raises(DomainError):
        validate_theta(2.0, 3.0, {0: 1.0})
    with pytest.raises(DomainError):
        validate_theta(0.5, 1.0, {0: 1.0})
    with pytest.raises(DomainError):
        validate_theta(0.5, 3.0, [1.0, 2.0])


def test_st_petersburg_refused_by_validation():
    with pytest.raises(SmoothnessError):
        validate_theta(1.0, 2.0, StPetersburgTheta())


def test_slow_coefficient_decay_warns():
    coeffs = {0: 10.0}
    for k in range(1, 9):
        coeffs[k] = 1e-3 / k
        coeffs[-k] = 1e-3 / k
    with pytest.warns(DecayWarning):
        validate_theta(0.2, math.exp(100.0), coeffs)


def test_eval_theta_examples(theta_one_sided):
    assert eval_theta(theta_one_sided, 0.0) == pytest.approx(math.gamma(0.5), rel=1e-15)
    th = classical_theta(0.5)
    assert np.all(eval_theta(th, np.linspace(-3, 3, 7)) == th.c0)


@pytest.mark.parametrize("th", ALL_THETAS)
def test_periodicity(th):
    x = np.linspace(-10, 10, 201)
    assert np.max(np.abs(eval_theta(th, x + th.period) - eval_theta(th, x))) <= 1e-12


@pytest.mark.parametrize("th", ALL_THETAS)
def test_growth_sampled(th):
    rng = np.random.default_rng(7)
    y = rng.uniform(-10, 10, 1000)
    d = rng.uniform(0, 2 * th.period, 1000)
    lhs = eval_theta(th, y + d)
    rhs = np.exp(th.alpha * d) * eval_theta(th, y) * (1 + 1e-10)
    assert np.all(lhs <= rhs)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.95).filter(lambda a: abs(a - 1) > 1e-3), st.floats(1.1, 1e4),
       st.floats(0.0, 1.0), st.floats(-math.pi, math.pi))
def test_validation_matches_dense_growth_check(alpha, c, amp, phase):
    # theta = 1 + amp cos(ct x + phase) is admissible iff amp (ct + alpha) <= alpha,
    # with a small band excluded around the boundary for sampling resolution
    ct = 2 * math.pi * alpha / math.log(c)
    z = 0.5 * amp * complex(math.cos(phase), math.sin(phase))
    coeffs = {0: 1.0, 1: z, -1: z.conjugate()}
    # theta' - alpha theta = -amp ct sin(.) - alpha amp cos(.) - alpha <= 0  iff  amp sqrt(ct^2 + alpha^2) <= alpha
    margin = amp * math.hypot(ct, alpha) - alpha
    if abs(margin) < 1e-6 * alpha or amp >= 1.0 - 1e-9:
        return
    if margin < 0:
        th = validate_theta(alpha, c, coeffs)
        assert th.alpha == alpha
    else:
        with pytest.raises(GrowthError):
            validate_theta(alpha, c, coeffs)


@pytest.mark.parametrize("th", ALL_THETAS)
def test_json_round_trip_and_hash(th):
    back = theta_from_json(th.to_json())
    assert back == th
    assert back.content_hash() == th.content_hash()
    assert hash(back) == hash(th)
    assert all(row[0] >= 0 for row in json.loads(th.to_json())["coeffs"])


def test_hash_is_git_blob_sha(theta_one_sided):
    import hashlib

    body = json.dumps(theta_one_sided.to_dict(), sort_keys=True, separators=(",", ":")).encode()
    assert theta_one_sided.content_hash() == hashlib.sha1(b"blob " + str(len(body)).encode() + b"\0" + body).hexdigest()


def test_immutable(theta_one_sided):
    with pytest.raises(ValueError):
        theta_one_sided.coeffs[0] = 2.0


def test_gamma_fn_constant():
    th = classical_theta(1.5)
    assert eval_gamma_fn(th, 0.3) == pytest.approx(1.0 / math.gamma(0.5), rel=1e-14)


def test_gamma_fn_regime():
    with pytest.raises(RegimeError):
        eval_gamma_fn(sine_theta(0.5), 0.0)
    with pytest.raises(RegimeError):
        gamma_coeffs(zolotarev_theta())


def test_gamma_fn_matches_quadrature(theta_sine_15):
    th = theta_sine_15
    a = th.alpha
    q = math.exp(th.period)

    def gamma_quad(x):
        # e^{(a-1)x} int_{e^x}^inf y^-a theta(log y) dy, summed over period panels with a geometric tail
        lo = math.exp(x)
        panel = integrate.quad(lambda y: y ** -a * eval_theta(th, math.log(y)), lo, lo * q, epsabs=0, epsrel=1e-13, limit=200)[0]
        return math.exp((a - 1) * x) * panel / (1 - q ** (1 - a))

    xs = np.linspace(0, th.period, 32, endpoint=False)
    for x in xs:
        assert eval_gamma_fn(th, x) == pytest.approx(gamma_quad(x), abs=1e-8)
    assert eval_gamma_fn(th, 0.4 + th.period) == pytest.approx(eval_gamma_fn(th, 0.4), abs=1e-14)


def test_levy_tail():
    th = classical_theta(0.5)
    assert levy_tail(th, 1.0) == pytest.approx(th.c0)
    assert levy_tail(StPetersburgTheta(), 2.0) == pytest.approx(0.5, rel=1e-15)
    # discrete tail sum_{k > m} 2^-k at r in [2^m, 2^(m+1))
    for r, expect in [(3.0, 0.5), (1.0, 1.0), (0.75, 2.0), (1000.0, 2.0 ** -9)]:
        assert levy_tail(StPetersburgTheta(), r) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(DomainError):
        levy_tail(th, 0.0)


@pytest.mark.parametrize("th", ALL_THETAS + [StPetersburgTheta()])
def test_levy_tail_nonincreasing(th):
    r = 2.0 ** (np.arange(-160, 161) / 16)
    t = levy_tail(th, r)
    assert np.all(t >= 0)
    assert np.all(np.diff(t) <= 1e-14 * t[:-1])


def test_with_alpha(theta_sine_05):
    assert with_alpha(theta_sine_05, 0.5) is theta_sine_05
    moved = with_alpha(theta_sine_05, 0.9)
    assert moved.c_tilde == pytest.approx(2 * math.pi * 0.9 / math.log(theta_sine_05.c))
    assert np.array_equal(moved.coeffs, theta_sine_05.coeffs)


@pytest.mark.parametrize("alpha_n", [0.05, 0.3, 0.999, 1.0, 1.2, 1.95])
def test_with_alpha_keeps_admissibility(theta_sine_15, alpha_n):
    # c_tilde scales with alpha, so theta_n(x) = theta(x alpha_n / alpha) and growth is preserved
    moved = with_alpha(theta_sine_15, alpha_n)
    x = np.linspace(-3, 3, 11)
    assert np.allclose(eval_theta(moved, x), eval_theta(theta_sine_15, x * alpha_n / 1.5), atol=1e-13)


def test_theta_n_converges_pointwise(theta_zolotarev):
    x = np.linspace(-3, 3, 13)
    ref = eval_theta(theta_zolotarev, x)
    errs = [np.abs(eval_theta(with_alpha(theta_zolotarev, a), x) - ref).max() for a in (0.9, 0.99, 0.999)]
    assert errs[0] > errs[1] > errs[2]


def test_classical_theta_constants():
    assert classical_theta(0.5).c0 == pytest.approx(0.5641895835, rel=1e-10)
    assert classical_theta(1.5).c0 == pytest.approx(0.2820947918, rel=1e-10)
    assert classical_theta(1.0).c0 == pytest.approx(2 / math.pi, rel=1e-15)
    with pytest.raises(RegimeError):
        classical_theta(0.5, "super")


def test_theta_from_dict_reconstructs_negative_modes(theta_one_sided):
    th = theta_from_dict({"alpha": 0.5, "c": math.exp(math.pi), "coeffs": [[0, math.gamma(0.5), 0], [1, 0, -0.25]]})
    assert th == theta_one_sided
    assert th.coeff(-1) == 0.25j


def test_levy_spec():
    th = classical_theta(0.5)
    LevySpec(th, None, 1.0, 0.0)
    with pytest.raises(DomainError):
        LevySpec(None, None, 1.0, 1.0)
    with pytest.raises(DomainError):
        LevySpec(th, th, -1.0, 0.0)
