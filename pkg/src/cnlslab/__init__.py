"""Stationary cubic nonlinear Schroedinger equations: integration, oscillation
criteria and classification of radial solutions."""
from .analysis import (
    ClassificationReport,
    Label,
    Tolerances,
    classify,
    criterion_consistency,
    detect_inflection_transition,
    wavelength_profile,
    wavelength_ratio,
)
from .cnls import (
    PSI_PLUS,
    BoundaryCondition,
    EquationSpec,
    Interaction,
    effective_coefficient,
    first_integral,
    predicts_oscillation,
    rhs,
    taylor_start,
    trivial_solutions,
)
from .integrate import (
    Event,
    EventKind,
    IntegratorConfig,
    SolutionTrace,
    Termination,
    dense_eval,
    energy_projector,
    integrate,
    order_check,
)

from .oscillation import CoefficientPair, canonical_q, criterion_region

__version__ = "0.1.0"
