"""Inspect the log-characteristic function of a semistable law.

For a semistable law psi(x) = -|x|^alpha h(x), where h is complex and periodic in
log|x| with period log(c)/alpha. We evaluate psi on a logarithmic grid, confirm
the Hermitian symmetry and the sign of the real part, and show that h repeats
after one multiplicative period.
"""

from __future__ import annotations

import math

import numpy as np

from semifrac import h_factor, log_grid, omega_weights, psi_eval, validate_theta

theta = validate_theta(0.5, math.exp(math.pi), {0: math.gamma(0.5), 1: -0.25j, -1: 0.25j})
w = omega_weights(theta)
x = log_grid()

psi = psi_eval(w, x)
print(f"Fourier modes K = {theta.K}, weights omega_k for k = -K..K:")
for k, om in zip(range(-w.K, w.K + 1), w.omega):
    print(f"  k = {k:+d}: {om:.6f}")
print(f"max |psi(-x) - conj psi(x)| = {np.max(np.abs(psi_eval(w, -x) - np.conj(psi))):.2e}")
print(f"max Re psi on the grid      = {psi.real.max():.3e}")

scale = theta.c ** (1.0 / theta.alpha)
drift = np.max(np.abs(h_factor(w, scale * x) - h_factor(w, x)))
print(f"period factor c^(1/alpha) = {scale:.4f}; max |h(s x) - h(x)| = {drift:.2e}")
for xi in (0.5, 0.5 * scale, 0.5 * scale ** 2):
    print(f"  h({xi:10.4f}) = {complex(h_factor(w, xi)):.10f}")
