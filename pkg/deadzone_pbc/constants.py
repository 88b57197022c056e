from enum import Enum

__all__ = [
    "ControllerKind",
    "Wiring",
    "DEFAULT_DT",
    "DEFAULT_HORIZON",
    "DEFAULT_RECORD_STRIDE",
    "DEFAULT_MU",
]


class Wiring(str, Enum):
    IDEAL = "ideal"
    PHYSICAL = "physical"


class ControllerKind(str, Enum):
    NONE = "none"
    PI = "pi"
    PIDZ = "pidz"


# Integration
DEFAULT_DT = 1e-3
DEFAULT_HORIZON = 10.0
DEFAULT_RECORD_STRIDE = 10
EXPLOSION_BOUND = 1e9

# Settling: max |qdot| over the trailing window of the horizon
SETTLE_VELOCITY = 1e-4
SETTLE_WINDOW = 0.1

# Compensator
DEFAULT_MU = 10.0
LN_COSH_BRANCH = 20.0

# Finite differences on M(q)^-1 use h = FD_STEP * max(1, |q_j|)
FD_STEP = 1e-6

# |Im lambda| <= REAL_SPECTRUM_TOL * rho(N)
REAL_SPECTRUM_TOL = 1e-9
SIMILARITY_TOL = 1e-8

# Transient metrics
SETTLING_BAND = 0.02
CROSSING_DEADBAND = 1e-9

NORMALIZATION = "percent of |q_star_i| per link (absolute rad when q_star_i = 0)"
MISSING_CELL = "—"


class ActionsEnum(str, Enum):
    STORE = "store"
    STORE_TRUE = "store_true"
    APPEND = "append"
    COUNT = "count"
