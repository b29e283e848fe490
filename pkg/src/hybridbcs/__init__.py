"""Driven-dissipative BCS dynamics with a hybrid Lindblad / no-click generator."""

from .lattice import BandGrid, build_flat_band, revival_time
from .equilibrium import GapSolution, solve_gap, continuum_gap, build_ground_state
from .dynamics import (
    BcsState,
    StateDerivative,
    SystemParams,
    density,
    gap_field,
    order_parameter,
    particle_hole_transform,
    rhs_hybrid_loss,
    rhs_hybrid_pump,
    rhs_lindblad,
    rhs_total,
)
from .integrator import (
    Protocol,
    TimeSeries,
    linear_sample_times,
    log_sample_times,
    run_protocol,
    step_adaptive,
    step_fixed,
)
from .observables import (
    PlateauReport,
    PowerLawFit,
    detect_plateau,
    exponent_drift,
    fit_power_law,
    population_inversion_time,
    pseudospin,
    zeno_scan,
)
from .errors import (
    BlowupError,
    ConfigurationError,
    IntegrationError,
    NoGapSolutionError,
    StepUnderflowError,
)

__version__ = "0.1.0"

__all__ = [
    "BandGrid",
    "BcsState",
    "BlowupError",
    "ConfigurationError",
    "GapSolution",
    "IntegrationError",
    "NoGapSolutionError",
    "PlateauReport",
    "PowerLawFit",
    "Protocol",
    "StateDerivative",
    "StepUnderflowError",
    "SystemParams",
    "TimeSeries",
    "build_flat_band",
    "build_ground_state",
    "continuum_gap",
    "density",
    "detect_plateau",
    "exponent_drift",
    "fit_power_law",
    "gap_field",
    "linear_sample_times",
    "log_sample_times",
    "order_parameter",
    "particle_hole_transform",
    "population_inversion_time",
    "pseudospin",
    "revival_time",
    "rhs_hybrid_loss",
    "rhs_hybrid_pump",
    "rhs_lindblad",
    "rhs_total",
    "run_protocol",
    "solve_gap",
    "step_adaptive",
    "step_fixed",
    "zeno_scan",
]
