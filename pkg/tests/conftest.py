from __future__ import annotations

import math
from pathlib import Path

import pytest

from semifrac import validate_theta

DATA = Path(__file__).parent / "data"
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def sine_theta(alpha: float):
    """theta(x) = alpha sin(x) / (6 Gamma(1-alpha)) +- 1/Gamma(1-alpha), the constant negated above 1."""
    g = math.gamma(1.0 - alpha)
    s = 1.0 if alpha < 1 else -1.0
    return validate_theta(alpha, math.exp(2 * math.pi * alpha),
                          {0: s / g, 1: -1j * alpha / (12 * g), -1: 1j * alpha / (12 * g)})


def zolotarev_theta():
    """theta(x) = 2 sin(x) / (3 pi) + 2 / pi at alpha = 1, c = e^(2 pi)."""
    return validate_theta(1.0, math.exp(2 * math.pi),
                          {0: 2 / math.pi, 1: -1j / (3 * math.pi), -1: 1j / (3 * math.pi)})


def one_sided_theta():
    """theta(x) = 0.5 sin x + Gamma(0.5) with alpha = 0.5, c = e^pi."""
    return validate_theta(0.5, math.exp(math.pi), {0: math.gamma(0.5), 1: -0.25j, -1: 0.25j})


def symmetric_theta():
    """theta(x) = 0.5 cos x + Gamma(0.5) with alpha = 0.5, c = e^pi."""
    return validate_theta(0.5, math.exp(math.pi), {0: math.gamma(0.5), 1: 0.25, -1: 0.25})


@pytest.fixture
def theta_sine_05():
    return sine_theta(0.5)


@pytest.fixture
def theta_sine_15():
    return sine_theta(1.5)


@pytest.fixture
def theta_zolotarev():
    return zolotarev_theta()


@pytest.fixture
def theta_one_sided():
    return one_sided_theta()


@pytest.fixture
def theta_symmetric():
    return symmetric_theta()


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
