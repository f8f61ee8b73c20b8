"""Per-cycle energy of stepwise adiabatic capacitive drivers."""

from .errors import (
    AllCandidatesInvalid,
    InvalidConfig,
    InvalidStep,
    NotConverged,
    SimulationError,
    SingularSystem,
)
from .model_core import (
    DriverConfig,
    EnergyReport,
    StepCoefficients,
    SteadyStateSolution,
    SwitchQuality,
    derive_coefficients,
    load_driver_energy,
    solve_steady_state,
    switch_driver_energy,
    total_energy,
)
from .simulator import run_to_steady_state

__version__ = "0.1.0"
