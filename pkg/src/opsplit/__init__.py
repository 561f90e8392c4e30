"""Operator splitting for u_t + u u_x - K u = 0 on a periodic domain."""

from .errors import BlowupDetected, FitUnreliable
from .spectral import (
    Grid,
    RealField,
    SpectralField,
    apply_multiplier,
    dealias,
    forward,
    inverse,
    make_grid,
    sobolev_norm,
    transform,
)
from .symbols import ConditionReport, Symbol, make_symbol, verify_conditions
from .substeps import BurgersConfig, burgers_step, linear_step
from .splitting import SchemeConfig, Trajectory, evolve, godunov_step, strang_step
from .reference import reference_solve
from .analysis import (
    ConvergenceReport,
    InequalityReport,
    convergence_study,
    global_error,
    local_error_order,
    verify_bilinear,
    verify_commutator,
)

__version__ = "0.1.0"
