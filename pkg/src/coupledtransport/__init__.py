"""Steady-state coupled energy and particle transport through quantum dots."""

from .core import (
    ConfigurationError,
    Currents,
    DotSpec,
    EigenState,
    ForceFluxView,
    ForceSet,
    InvalidParameterError,
    NonUniqueSteadyStateError,
    OnsagerMatrix,
    PreconditionError,
    RateMatrix,
    Regime,
    ReservoirSpec,
    SolverError,
    Spin,
    SteadyReport,
    StepSizeError,
    SystemSpec,
    TopologyError,
    Transition,
    TransitionGraph,
    TransportError,
    UnsupportedRepresentationError,
)
from .models import (
    ICCFamily,
    Scenario,
    SingleQDFamily,
    cqd_three_terminal,
    icc_reduction,
    sb_reduction,
    single_qd_two_terminal,
)

__all__ = [
    "ConfigurationError",
    "Currents",
    "DotSpec",
    "EigenState",
    "ForceFluxView",
    "ForceSet",
    "ICCFamily",
    "InvalidParameterError",
    "NonUniqueSteadyStateError",
    "OnsagerMatrix",
    "PreconditionError",
    "RateMatrix",
    "Regime",
    "ReservoirSpec",
    "Scenario",
    "SingleQDFamily",
    "SolverError",
    "Spin",
    "SteadyReport",
    "StepSizeError",
    "SystemSpec",
    "TopologyError",
    "Transition",
    "TransitionGraph",
    "TransportError",
    "UnsupportedRepresentationError",
    "cqd_three_terminal",
    "icc_reduction",
    "sb_reduction",
    "single_qd_two_terminal",
]
