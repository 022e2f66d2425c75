"""Semi-fractional derivatives and diffusion with log-periodic Levy tails."""

from __future__ import annotations

from .admissible import (
    AdmissibleTheta,
    LevySpec,
    StPetersburgTheta,
    classical_theta,
    eval_gamma_fn,
    eval_theta,
    gamma_coeffs,
    levy_tail,
    regime_of,
    theta_from_dict,
    theta_from_json,
    validate_theta,
    with_alpha,
)
from .derivatives import (
    GLParams,
    SampledFunction,
    altlim_reference,
    caputo_eval,
    fourier_oracle,
    gaussian,
    gl_difference,
    gl_zolotarev,
    gl_zolotarev_parts,
)
from .diffusion import (
    DensitySolution,
    DiffusionProblem,
    TailReport,
    compute_drift,
    density_oracle,
    drift_one_side,
    initial_condition,
    solve,
    tail_diagnostics,
    validate_problem,
)
from .errors import *  # noqa: F401,F403
from .logchar import (
    OmegaWeights,
    char_function,
    derivative_symbol,
    h_factor,
    log_grid,
    omega_weights,
    psi_eval,
    psi_total,
    shift_dn,
    zolotarev_continuity_error,
)
from .special import binomial_weights, complex_gamma, complex_lgamma, gen_binomial, signed_ix_pow

__version__ = "0.1.0"
