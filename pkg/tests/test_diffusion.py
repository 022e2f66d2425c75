from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special

from semifrac import (
    DivergenceError,
    DomainError,
    InstabilityError,
    LevySpec,
    SignError,
    StPetersburgTheta,
    classical_theta,
    compute_drift,
    density_oracle,
    drift_one_side,
    initial_condition,
    psi_total,
    omega_weights,
    solve,
    tail_diagnostics,
    validate_problem,
)
from semifrac.diffusion import (
    _gil_pelaez_cdf,
    _series_cdf,
    convexity_changes,
    stability_number,
    write_slice_csv,
    write_solution,
)
from semifrac.errors import StabilityWarning, WindowError

from .conftest import one_sided_theta, symmetric_theta


def _levy_cdf(y, t):
    # one-sided alpha = 1/2 law with E exp(-s X) = exp(-t sqrt(s))
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    out[pos] = special.erfc(t / (2.0 * np.sqrt(y[pos])))
    return out


def _small(theta, D1=-1.0, D2=0.0, b=1.0, T2=None, dt=0.01, ghost=20, T1=0.01):
    return validate_problem(D1=D1, D2=D2, theta1=theta if D1 else None, theta2=theta if D2 else None,
                            b=b, T1=T1, T2=T2 if T2 is not None else T1 + 10 * dt, dt=dt, ghost=ghost)


# --- validation ----------------------------------------------------------------

def test_one_sided_problem_accepted(theta_one_sided):
    pr = validate_problem(D1=-1.0, D2=0.0, theta1=theta_one_sided, b=5.0, T1=0.01, T2=1.0)
    assert pr.alpha == 0.5 and pr.n_interior == 500 and pr.n_steps == 99
    x = pr.grid()
    assert len(x) == 1101 and np.array_equal(x, -x[::-1])


@pytest.mark.parametrize("kw,err", [
    (dict(D1=1.0, D2=0.0), SignError),
    (dict(D1=0.0, D2=0.0), SignError),
    (dict(D1=-1.0, D2=0.0, T1=1.0, T2=0.5), DomainError),
    (dict(D1=-1.0, D2=0.0, b=0.0), DomainError),
    (dict(D1=-1.0, D2=0.0, ghost=0), DomainError),
    (dict(D1=-1.0, D2=0.0, h=1.5), DomainError),
])
def test_validation_errors(theta_one_sided, kw, err):
    args = dict(theta1=theta_one_sided, b=5.0, T1=0.01, T2=1.0)
    args.update(kw)
    with pytest.raises(err):
        validate_problem(**args)


def test_validation_mismatched_thetas(theta_one_sided):
    with pytest.raises(DomainError):
        validate_problem(D1=-1.0, D2=-1.0, theta1=theta_one_sided, theta2=classical_theta(0.7), b=1.0, T1=0.1, T2=1.0)
    with pytest.raises(DomainError):
        validate_problem(D1=-1.0, D2=-1.0, theta1=theta_one_sided, b=1.0, T1=0.1, T2=1.0)
    with pytest.raises(SignError):
        validate_problem(D1=-1.0, D2=0.0, theta1=classical_theta(1.5), b=1.0, T1=0.1, T2=1.0)


# --- initial condition -------------------------------------------------------------

def test_initial_scale_parameter(theta_one_sided):
    # one-sided classical law at T1: sigma = (T1 cos(pi alpha / 2))^(1/alpha)
    cl = omega_weights(classical_theta(0.5))
    A = -complex(psi_total(cl, None, -1.0, 0.0, 0.0, 1.0))
    sigma = (0.01 * A.real) ** 2
    assert sigma == pytest.approx((0.01 * math.cos(math.pi / 4)) ** 2, rel=1e-14)
    assert sigma == pytest.approx(5.0e-5, rel=1e-12)


def test_initial_condition_matches_levy_closed_form(theta_one_sided):
    pr = _small(theta_one_sided, T1=0.1)
    x = pr.grid()
    h = pr.h
    ref = (_levy_cdf(x + h / 2, 0.1) - _levy_cdf(x - h / 2, 0.1)) / h
    assert np.max(np.abs(initial_condition(pr) - ref)) <= 1e-10


@pytest.mark.parametrize("D1,D2,beta", [(1.0, 0.0, 1.0), (0.0, 1.0, -1.0)])
def test_initial_condition_super_matches_scipy_stable(D1, D2, beta):
    from scipy.stats import levy_stable

    th = classical_theta(1.5)
    pr = validate_problem(D1=D1, D2=D2, theta1=th if D1 else None, theta2=th if D2 else None,
                          b=0.5, T1=0.01, T2=1.0, ghost=10)
    x, h = pr.grid(), pr.h
    # (-ik)^1.5 has sigma^alpha = T1 cos(pi/4) in the S1 parametrization
    sc = (0.01 * math.cos(math.pi / 4)) ** (1 / 1.5)
    cdf = lambda y: levy_stable.cdf(y, 1.5, beta, scale=sc)  # noqa: E731
    ref = (cdf(x + h / 2) - cdf(x - h / 2)) / h
    assert np.max(np.abs(initial_condition(pr) - ref)) <= 1e-9


def test_series_cdf_matches_gil_pelaez():
    cl = omega_weights(classical_theta(0.4))
    for D1, D2 in ((-1.0, 0.0), (-0.5, -0.5), (-0.2, -0.8)):
        A = -complex(psi_total(cl, cl if D2 else None, D1, D2, 0.0, 1.0))

        def phi(k):
            return np.exp(psi_total(cl, cl if D2 else None, D1, D2, 0.0, k))
        y0 = (2.0 * abs(A)) ** (1 / 0.4)
        # Gil-Pelaez error estimates reach 1e-8 out here; the series is the sharper of the two
        for y in (y0, 3 * y0, -y0, -2 * y0):
            assert _series_cdf(A, 0.4, y) == pytest.approx(_gil_pelaez_cdf(phi, y), abs=1e-9)


def test_initial_condition_mass_and_symmetry(theta_symmetric):
    pr = _small(theta_symmetric, D1=-0.5, D2=-0.5, b=2.0)
    p = initial_condition(pr)
    assert np.array_equal(p, p[::-1])
    assert 0.99 <= np.trapezoid(p, pr.grid()) <= 1.01
    assert p.min() >= -1e-12


# --- drift ---------------------------------------------------------------------

def test_drift_constant_theta_closed_form():
    # alpha c0 int_0^inf r^-alpha / (1 + r^2) dr = alpha c0 pi / (2 sin(pi (1 - alpha) / 2))
    a = 0.5
    c0 = classical_theta(a).c0
    ref = a * c0 * math.pi / (2 * math.sin(math.pi * (1 - a) / 2))
    val, hist = drift_one_side(classical_theta(a), a, "sub")
    assert val > 0
    assert val == pytest.approx(ref, rel=1e-9)
    assert abs(hist[-1] - hist[-2]) <= 1e-8


def _st_petersburg_lattice() -> float:
    # atoms of mass 2^-k at 2^k; g(r) = r / (1 + r^2) - sin r
    return math.fsum(2.0 ** -k * ((2.0 ** k) / (1 + 4.0 ** k) - math.sin(2.0 ** k)) for k in range(-80, 81))


def test_st_petersburg_sin_compensator_is_finite():
    val, _ = drift_one_side(StPetersburgTheta(), 1.0, "zolotarev")
    assert val == pytest.approx(_st_petersburg_lattice(), abs=1e-9)


def test_st_petersburg_plain_compensator_diverges():
    with pytest.raises(DivergenceError) as ei:
        drift_one_side(StPetersburgTheta(), 1.0, "sub")
    hist = ei.value.history
    assert abs(hist[-1]) > abs(hist[len(hist) // 2]) > abs(hist[1])


def test_compute_drift_symmetric_cancels():
    th = classical_theta(0.5)
    assert compute_drift(LevySpec(th, th, 1.0, 1.0), 0.5) == pytest.approx(0.0, abs=1e-14)
    one = compute_drift(LevySpec(th, None, 1.0, 0.0), 0.5, v=0.25)
    assert one == pytest.approx(0.25 + drift_one_side(th, 0.5, "sub")[0], abs=1e-15)


# --- solver ------------------------------------------------------------------

def test_classical_solver_step_matches_textbook():
    a = 0.5
    pr = _small(classical_theta(a), b=0.2, ghost=5, dt=1e-4, T1=0.05, T2=0.05 + 2e-4)
    x = pr.grid()
    p0 = np.exp(-np.square(x) / 0.01)
    sol = solve(pr, p0=p0)
    p = p0.copy()
    n = len(x)
    w = np.array([(-1) ** j * special.binom(a, j) for j in range(n)])
    for _ in range(2):
        gl = np.array([math.fsum(w[j] * p[i - j] for j in range(i + 1)) for i in range(n)]) / pr.h ** a
        p = p + pr.dt * pr.D1 * gl
    assert np.max(np.abs(sol.p[-1] - p)) <= 1e-12 * np.abs(p).max()


def test_solver_workers_bitwise(theta_symmetric):
    pr = _small(theta_symmetric, D1=-0.5, D2=-0.5, b=1.0, dt=0.002)
    a = solve(pr, workers=1)
    b = solve(pr, workers=4)
    assert np.array_equal(a.p, b.p)
    assert np.array_equal(a.p[-1], a.p[-1][::-1])


def test_solution_diagnostics(theta_one_sided):
    pr = _small(theta_one_sided, b=2.0, dt=0.002, T1=0.05)
    sol = solve(pr)
    assert len(sol.t_grid) == pr.n_steps + 1 == len(sol.mass) == len(sol.min_value)
    assert sol.t_grid[0] == pr.T1
    assert np.all(np.abs(sol.mass - 1.0) < 0.1)
    x, p = sol.at(sol.t_grid[-1])
    assert x[0] == pytest.approx(-2.0) and x[-1] == pytest.approx(2.0)
    with pytest.raises(DomainError):
        sol.at(0.123456)


def test_instability_detected(theta_one_sided):
    pr = _small(theta_one_sided, b=1.0, dt=1.0, T2=0.01 + 30.0)
    assert stability_number(pr) > 1
    with pytest.warns(StabilityWarning):
        with pytest.raises(InstabilityError) as ei:
            solve(pr)
    assert ei.value.step >= 1


def test_solver_refuses_alpha_one():
    pr = validate_problem(D1=1.0, D2=0.0, theta1=classical_theta(1.0), b=1.0, T1=0.1, T2=0.2)
    with pytest.raises(DomainError):
        solve(pr)


def test_write_and_read_slices(tmp_path, theta_one_sided):
    pr = _small(theta_one_sided, b=1.0, dt=0.005, T1=0.05, T2=0.07)
    sol = solve(pr)
    paths = write_solution(sol, [0.06, 0.07], tmp_path)
    assert [p.split("/")[-1] for p in paths] == ["p_t0.0600.csv", "p_t0.0700.csv"]
    data = np.loadtxt(paths[1], delimiter=",", skiprows=1)
    x, p = sol.at(0.07)
    assert np.array_equal(data[:, 0], np.array([float(f"{v:.12e}") for v in x]))
    assert np.array_equal(data[:, 1], np.array([float(f"{v:.12e}") for v in p]))
    assert (tmp_path / "manifest.json").exists()
    write_slice_csv(tmp_path / "s.csv", [1.0], [2.5])
    assert (tmp_path / "s.csv").read_text().splitlines() == ["x,p", "1.000000000000e+00,2.500000000000e+00"]


# --- oracle ------------------------------------------------------------------

def test_oracle_matches_levy_density():
    pr = validate_problem(D1=-1.0, D2=0.0, theta1=classical_theta(0.5), b=1.0, T1=0.5, T2=1.0)
    x = np.array([0.5, 1.0, 3.0])
    ref = 1.0 / (2 * math.sqrt(math.pi)) * x ** -1.5 * np.exp(-1.0 / (4 * x))
    assert np.max(np.abs(density_oracle(pr, 1.0, x) - ref)) <= 1e-6


def test_oracle_symmetric_problem_is_even():
    th = symmetric_theta()
    pr = validate_problem(D1=-0.5, D2=-0.5, theta1=th, theta2=th, b=5.0, T1=0.01, T2=1.0)
    x = np.linspace(-5, 5, 41)
    p = density_oracle(pr, 0.7, x)
    assert np.max(np.abs(p - p[::-1])) <= 1e-10


def test_oracle_from_initial_agrees_at_constant_theta():
    th = classical_theta(0.5)
    pr = validate_problem(D1=-1.0, D2=0.0, theta1=th, b=1.0, T1=0.3, T2=1.0)
    x = np.array([0.5, 1.0, 2.0])
    assert np.allclose(density_oracle(pr, 0.8, x, from_initial=True), density_oracle(pr, 0.8, x), atol=1e-9)
    with pytest.raises(DomainError):
        density_oracle(pr, 0.0, x)


# --- tail diagnostics ------------------------------------------------------------

def test_convexity_changes_units():
    x = np.linspace(-1, 1, 101)
    assert convexity_changes(x ** 2) == 0
    assert convexity_changes(np.sin(3 * np.pi * x)) == 5
    assert convexity_changes([1.0, 2.0]) == 0
    # a bump sitting on a zero floor: the flat noise must not count
    p = np.where(np.abs(x) < 0.5, np.cos(np.pi * x) ** 2, 1e-30 * (-1.0) ** np.arange(101))
    assert convexity_changes(p, p_floor=1e-12) == convexity_changes(np.where(np.abs(x) < 0.5, p, 0.0))


def test_tail_diagnostics_window(theta_one_sided):
    pr = _small(theta_one_sided, b=0.5, dt=0.005, T1=0.05, T2=0.06)
    sol = solve(pr)
    with pytest.raises(WindowError):
        tail_diagnostics(sol, 0.06)
    rep = tail_diagnostics(sol, 0.06, window=(0.1, 0.5))
    assert rep.n_points >= 16 and rep.slope < 0
    assert set(rep.as_dict()) >= {"slope", "period", "convexity_changes_right"}
