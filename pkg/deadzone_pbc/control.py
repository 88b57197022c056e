import logging
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from .constants import DEFAULT_MU, ControllerKind
from .exceptions import ConfigError, DimensionError
from .plant import GeneralizedState, MechanicalSystem, inverse_mass, kinetic_gradient
from .utils import as_vector, ln_cosh
from .validators import (
    FINITE,
    MATRIX,
    POSITIVE_DEFINITE,
    POSITIVE_DIAGONAL,
    POSITIVE_SEMIDEFINITE,
    SYMMETRIC,
    as_matrix,
    checked,
)

logger = logging.getLogger(__name__)


class PbcGains:
    """Gains of the PI passivity-based controller and its dead-zone compensator.

    Attributes:
        K_P: damping injection, symmetric positive semi-definite
        K_I: energy shaping stiffness, symmetric positive definite
        K_Z: diagonal of the compensator widths, all > 0 (may be omitted for uncompensated gains)
        mu: diagonal of the compensator sharpness, all > 0
        beta_comp: compensator estimate of the actuator offset
        q_star: setpoint
        compensated: when False the compensator terms (K_Z, beta_comp) are switched off and the
            gains describe the plain PI controller
    """

    __slots__ = ("n", "K_P", "K_I", "K_Z", "mu", "beta_comp", "q_star", "compensated")

    def __init__(
        self,
        K_P: ArrayLike,
        K_I: ArrayLike,
        q_star: ArrayLike,
        K_Z: Optional[ArrayLike] = None,
        mu: ArrayLike = DEFAULT_MU,
        beta_comp: ArrayLike = 0.0,
        compensated: bool = True,
    ) -> None:
        self.q_star = checked(np.atleast_1d(q_star), "gains.q_star", FINITE)
        n = self.n = int(self.q_star.size)
        if self.q_star.ndim != 1:
            raise DimensionError(f"setpoint must be a vector, found shape {self.q_star.shape}", name="gains.q_star")
        self.K_P = checked(
            as_matrix(K_P, "gains.K_P", n), "gains.K_P", MATRIX, FINITE, SYMMETRIC, POSITIVE_SEMIDEFINITE, n=n
        )
        self.K_I = checked(
            as_matrix(K_I, "gains.K_I", n), "gains.K_I", MATRIX, FINITE, SYMMETRIC, POSITIVE_DEFINITE, n=n
        )
        self.K_Z: Optional[np.ndarray] = None
        if K_Z is not None:
            self.K_Z = np.diag(checked(as_matrix(K_Z, "gains.K_Z", n), "gains.K_Z", POSITIVE_DIAGONAL)).copy()
        elif compensated:
            raise ConfigError("compensator widths are required", key="gains.K_Z")
        self.mu = np.diag(checked(as_matrix(mu, "gains.mu", n), "gains.mu", POSITIVE_DIAGONAL)).copy()
        self.beta_comp = checked(as_vector(beta_comp, n, "gains.beta_comp"), "gains.beta_comp", FINITE)
        self.compensated = bool(compensated)

    @property
    def k_z(self) -> np.ndarray:
        # Effective widths: zero when compensation is off
        return self.K_Z if self.compensated and self.K_Z is not None else np.zeros(self.n)

    @property
    def beta(self) -> np.ndarray:
        return self.beta_comp if self.compensated else np.zeros(self.n)

    def pi_only(self) -> "PbcGains":
        return self.replace(compensated=False)

    def replace(self, **changes: Any) -> "PbcGains":
        values: Dict[str, Any] = {
            "K_P": self.K_P,
            "K_I": self.K_I,
            "q_star": self.q_star,
            "K_Z": self.K_Z,
            "mu": self.mu,
            "beta_comp": self.beta_comp,
            "compensated": self.compensated,
        }
        values.update(changes)
        return PbcGains(**values)

    def description(self) -> Dict[str, Any]:
        # Uncompensated gains are written without K_Z
        values: Dict[str, Any] = {"K_P": self.K_P.tolist(), "K_I": self.K_I.tolist()}
        if self.compensated and self.K_Z is not None:
            values["K_Z"] = self.K_Z.tolist()
        values.update(mu=self.mu.tolist(), beta_comp=self.beta_comp.tolist(), q_star=self.q_star.tolist())
        return values

    def __repr__(self) -> str:
        return "PbcGains({})".format(", ".join(f"{key}={value}" for key, value in self.description().items()))


def _check(sys: MechanicalSystem, gains: PbcGains) -> None:
    if gains.n != sys.n:
        raise DimensionError(f"gains have dimension {gains.n}, system has {sys.n}", name="gains")


def _split(sys: MechanicalSystem, x: GeneralizedState) -> Tuple[np.ndarray, np.ndarray]:
    if x.n != sys.n:
        raise DimensionError(f"state has dimension {x.n}, system has {sys.n}", name="x")
    return x.q, x.p


def u_pi(sys: MechanicalSystem, gains: PbcGains, x: GeneralizedState) -> np.ndarray:
    """-G^-1 (K_P q_dot + K_I (q - q_star) - grad U(q)) with q_dot = M(q)^-1 p."""
    _check(sys, gains)
    q, p = _split(sys, x)
    velocity = inverse_mass(sys, q) @ p
    shaping = gains.K_P @ velocity + gains.K_I @ (q - gains.q_star) - np.asarray(sys.potential_grad(q), dtype=float)
    return -shaping / sys.input_gains


def u_dz(sys: MechanicalSystem, gains: PbcGains, q: ArrayLike) -> np.ndarray:
    """-G^-1 (K_Z tanh(mu (q - q_star)) + beta_comp), the smooth dead-zone compensator."""
    _check(sys, gains)
    q_tilde = np.asarray(q, dtype=float).reshape(-1) - gains.q_star
    return -(gains.k_z * np.tanh(gains.mu * q_tilde) + gains.beta) / sys.input_gains


def u_pidz(sys: MechanicalSystem, gains: PbcGains, x: GeneralizedState) -> np.ndarray:
    return u_dz(sys, gains, x.q) + u_pi(sys, gains, x)


def controller_command(
    kind: Union[ControllerKind, str], sys: MechanicalSystem, gains: PbcGains, x: GeneralizedState
) -> np.ndarray:
    kind = ControllerKind(kind)
    if kind is ControllerKind.NONE:
        return np.zeros(sys.n)
    if kind is ControllerKind.PI:
        return u_pi(sys, gains, x)
    return u_pidz(sys, gains, x)


def shaping_energy(gains: PbcGains, q: np.ndarray) -> float:
    # Potential part of H_d: 1/2 q~^T K_I q~ + sum k_i ln(cosh(mu_i q~_i)) / mu_i
    q_tilde = q - gains.q_star
    return float(0.5 * q_tilde @ gains.K_I @ q_tilde + np.sum(gains.k_z * ln_cosh(gains.mu * q_tilde) / gains.mu))


def desired_hamiltonian(sys: MechanicalSystem, gains: PbcGains, x: GeneralizedState) -> float:
    _check(sys, gains)
    q, p = _split(sys, x)
    return float(0.5 * p @ inverse_mass(sys, q) @ p) + shaping_energy(gains, q)


def desired_hamiltonian_gradient(
    sys: MechanicalSystem, gains: PbcGains, x: GeneralizedState
) -> Tuple[np.ndarray, np.ndarray]:
    _check(sys, gains)
    q, p = _split(sys, x)
    velocity = inverse_mass(sys, q) @ p
    q_tilde = q - gains.q_star
    grad_q = kinetic_gradient(sys, q, p, velocity) + gains.K_I @ q_tilde + gains.k_z * np.tanh(gains.mu * q_tilde)
    return grad_q, velocity


def desired_hamiltonian_hessian_q(gains: PbcGains) -> np.ndarray:
    """Position block of the Hessian of H_d at the setpoint, K_I + mu K_Z."""
    return gains.K_I + np.diag(gains.mu * gains.k_z)


def pi_hamiltonian(sys: MechanicalSystem, gains: PbcGains, x: GeneralizedState) -> float:
    _check(sys, gains)
    q, p = _split(sys, x)
    q_tilde = q - gains.q_star
    return float(0.5 * p @ inverse_mass(sys, q) @ p + 0.5 * q_tilde @ gains.K_I @ q_tilde)
