"""Continuous-averaging normalization of Hamiltonians near an elliptic point.

The package follows a single pipeline: formal series algebra over the complex
variables (z, zbar), small-divisor data attached to a frequency vector,
exponential-polynomial coefficient dynamics of the averaging flow, majorant
certificates for convergence domains, and an iterated low-order normalization
scheduler.  The ``normflow`` CLI drives all of it from a JSON config.
"""

from __future__ import annotations

from .algebra import (
    FormalSeries,
    MultiIndex,
    cauchy_coeff_bound,
    check_cauchy_bounds,
    norm_upper_estimate,
    poisson_bracket,
    project_sign_class,
    series_add,
    series_mul,
)
from .exppoly import ExpPoly, ep_eval, ep_integrate, ep_limit_infinity, ep_mul
from .flow import (
    DECAY_FIT_GRID,
    FlowSolution,
    NormalFormResult,
    birkhoff_oracle,
    check_reality,
    fitted_decay_rate,
    flow_exact,
    flow_numeric,
    normal_form_limit,
    rhs_terms,
)
from .majorant import (
    DegenerateBounds,
    DominationReport,
    MajorantFlow,
    MajorantFn,
    analyticity_bounds,
    burgers_analyticity_radius,
    burgers_solve,
    degenerate_bounds,
    derivative_majorant,
    dominates,
    geometric_majorant,
    invert_near_identity,
    majorant_flow,
    verify_domination,
)
from .resonance import (
    CorankOneData,
    Frequency,
    corank1_decompose,
    lattice_rank,
    omega_capital,
    sigma_omega,
)
from .scheduler import (
    SequencePair,
    SplitResult,
    StepCertificate,
    averaging_step,
    b_from_a,
    bruno_check,
    choose_initial_bounds,
    convexity_inequalities,
    corank1_split,
    eps0_estimates,
    make_a_sequence,
    normalize_low_orders,
)

__all__ = [
    "MultiIndex",
    "FormalSeries",
    "series_add",
    "series_mul",
    "poisson_bracket",
    "project_sign_class",
    "cauchy_coeff_bound",
    "check_cauchy_bounds",
    "norm_upper_estimate",
    "Frequency",
    "CorankOneData",
    "sigma_omega",
    "omega_capital",
    "corank1_decompose",
    "lattice_rank",
    "ExpPoly",
    "ep_mul",
    "ep_integrate",
    "ep_eval",
    "ep_limit_infinity",
    "FlowSolution",
    "NormalFormResult",
    "rhs_terms",
    "flow_exact",
    "flow_numeric",
    "normal_form_limit",
    "birkhoff_oracle",
    "check_reality",
    "fitted_decay_rate",
    "DECAY_FIT_GRID",
    "MajorantFn",
    "dominates",
    "geometric_majorant",
    "derivative_majorant",
    "burgers_solve",
    "burgers_analyticity_radius",
    "analyticity_bounds",
    "invert_near_identity",
    "DegenerateBounds",
    "degenerate_bounds",
    "MajorantFlow",
    "majorant_flow",
    "DominationReport",
    "verify_domination",
    "SequencePair",
    "StepCertificate",
    "SplitResult",
    "make_a_sequence",
    "bruno_check",
    "b_from_a",
    "convexity_inequalities",
    "averaging_step",
    "normalize_low_orders",
    "choose_initial_bounds",
    "eps0_estimates",
    "corank1_split",
]

__version__ = "0.1.0"
