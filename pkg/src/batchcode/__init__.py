"""Batch size and code rate optimization for MDS-coded distributed computing."""

__version__ = "0.1.0"

from .analytic import (
    asymptotic_ejct,
    exact_b1_ejct,
    exact_bimodal_ejct,
    f_derivative_scan,
    quadrature_ejct,
    solve_r_prime,
)
from .optimizer import feasible_batches, feasible_k, optimize_batch, optimize_joint, recommend_strategy
from .service_models import BatchTaskLaw, BiModal, ShiftedExponential
from .simulator import CompletionEstimate, Policy, SystemSpec, simulate_ejct
