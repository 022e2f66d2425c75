"""Evaluate one semi-fractional derivative with three independent methods.

The log-periodic function theta(x) = alpha sin(x) / (6 Gamma(1-alpha)) - 1/Gamma(1-alpha)
at alpha = 1.5 perturbs the classical power-law Levy tail. We apply the resulting
derivative to a Gaussian with the Grunwald-Letnikov difference (h = 0.01, J = 200),
the Caputo-form quadrature, and the spectral formula, and print how far they agree.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from semifrac import GLParams, caputo_eval, fourier_oracle, gaussian, gl_difference, omega_weights, validate_theta

alpha = 1.5
g = math.gamma(1.0 - alpha)
theta = validate_theta(alpha, math.exp(2 * math.pi * alpha),
                       {0: -1.0 / g, 1: -1j * alpha / (12 * g), -1: 1j * alpha / (12 * g)})
f = gaussian()
x = np.linspace(-5, 5, 11)

with warnings.catch_warnings():
    # J = 200 is a short window at alpha > 1; the warning is expected here
    warnings.simplefilter("ignore")
    gl = gl_difference(theta, f, x, GLParams(0.01, 200))
cap = caputo_eval(theta, f, x)
four = fourier_oracle(omega_weights(theta), f.f_hat, x)

print(f"{'x':>6} {'GL':>12} {'Caputo':>12} {'Fourier':>12}")
for row in zip(x, gl, cap, four):
    print(f"{row[0]:6.1f} {row[1]:12.6f} {row[2]:12.6f} {row[3]:12.6f}")
print(f"max |GL - Caputo|      = {np.max(np.abs(gl - cap)):.3e}  (first-order in h)")
print(f"max |Caputo - Fourier| = {np.max(np.abs(cap - four)):.3e}  (both quadrature-accurate)")
