from .actuator import DeadZone, apply, deadband, hard_inverse, half_width, smooth_inverse_term
from .analysis import (
    SaddleDecomposition,
    TransientMetrics,
    TuningReport,
    dissipation_scaling,
    eigen_quadratic_residual,
    linearize,
    rescale_dissipation,
    saddle_decompose,
    transient_metrics,
    tuning_check,
)
from .constants import ControllerKind, Wiring
from .control import PbcGains, desired_hamiltonian, u_dz, u_pi, u_pidz
from .plant import (
    GeneralizedState,
    MechanicalSystem,
    constant_system,
    hamiltonian,
    hamiltonian_gradient,
    open_loop_field,
    passive_output,
)
from .scenarios import Scenario, load_scenario, planar_manipulator_2dof, table_suites
from .sim import (
    ResidualBand,
    SimConfig,
    Trajectory,
    closed_loop_field,
    integrate,
    residual_band_oracle,
    steady_state_error,
)

__all__ = [
    "ControllerKind",
    "DeadZone",
    "GeneralizedState",
    "MechanicalSystem",
    "PbcGains",
    "ResidualBand",
    "SaddleDecomposition",
    "Scenario",
    "SimConfig",
    "TransientMetrics",
    "Trajectory",
    "TuningReport",
    "Wiring",
    "apply",
    "closed_loop_field",
    "constant_system",
    "deadband",
    "desired_hamiltonian",
    "dissipation_scaling",
    "eigen_quadratic_residual",
    "hamiltonian",
    "hamiltonian_gradient",
    "hard_inverse",
    "half_width",
    "integrate",
    "linearize",
    "load_scenario",
    "open_loop_field",
    "passive_output",
    "planar_manipulator_2dof",
    "rescale_dissipation",
    "residual_band_oracle",
    "saddle_decompose",
    "smooth_inverse_term",
    "steady_state_error",
    "table_suites",
    "transient_metrics",
    "tuning_check",
    "u_dz",
    "u_pi",
    "u_pidz",
]

__version__ = "1.0.0"
