from typing import Any, Dict

import numpy as np
from numpy.typing import ArrayLike

from .exceptions import DimensionError
from .utils import as_vector, check_dimension
from .validators import FINITE, POSITIVE_DIAGONAL, VECTOR, RangeValidator, as_matrix, checked

POSITIVE = RangeValidator(min=0.0, exclusive=True)
NEGATIVE = RangeValidator(max=0.0, exclusive=True)


class DeadZone:
    """Per-channel dead-zone between controller command v and delivered torque.

    Inside [l_b, r_b] a channel delivers nothing; outside it the slope is one. The offset
    `beta` shifts the output vertically (zero for a symmetric dead-zone).

    Attributes:
        r_b: right break points, all > 0
        l_b: left break points, all < 0
        beta: output offset
    """

    __slots__ = ("r_b", "l_b", "beta")

    def __init__(self, r_b: ArrayLike, l_b: ArrayLike, beta: ArrayLike = 0.0) -> None:
        self.r_b = checked(np.atleast_1d(r_b), "dead_zone.r_b", VECTOR, FINITE, POSITIVE)
        n = self.r_b.size
        self.l_b = checked(as_vector(l_b, n, "dead_zone.l_b"), "dead_zone.l_b", FINITE, NEGATIVE)
        self.beta = checked(as_vector(beta, n, "dead_zone.beta"), "dead_zone.beta", FINITE)

    @classmethod
    def symmetric(cls, half_widths: ArrayLike, beta: ArrayLike = 0.0) -> "DeadZone":
        widths = np.atleast_1d(np.asarray(half_widths, dtype=float))
        return cls(widths, -widths, beta)

    @property
    def n(self) -> int:
        return int(self.r_b.size)

    def description(self) -> Dict[str, Any]:
        return {"r_b": self.r_b.tolist(), "l_b": self.l_b.tolist(), "beta": self.beta.tolist()}

    def __repr__(self) -> str:
        return f"DeadZone(r_b={self.r_b.tolist()}, l_b={self.l_b.tolist()}, beta={self.beta.tolist()})"


def _channels(dz: DeadZone, value: ArrayLike, name: str) -> np.ndarray:
    return check_dimension(np.asarray(value, dtype=float).reshape(-1), dz.n, name)


def deadband(dz: DeadZone, v: ArrayLike) -> np.ndarray:
    v = _channels(dz, v, "v")
    return np.where(v > dz.r_b, v - dz.r_b, np.where(v < dz.l_b, v - dz.l_b, 0.0))


def apply(dz: DeadZone, v: ArrayLike) -> np.ndarray:
    return deadband(dz, v) + dz.beta


def hard_inverse(dz: DeadZone, tau_des: ArrayLike) -> np.ndarray:
    """Command that makes `apply` deliver `tau_des` exactly (0 where no offset-free torque is asked)."""
    shifted = _channels(dz, tau_des, "tau_des") - dz.beta
    return np.where(shifted > 0.0, shifted + dz.r_b, np.where(shifted < 0.0, shifted + dz.l_b, 0.0))


def half_width(dz: DeadZone) -> np.ndarray:
    return 0.5 * (dz.r_b - dz.l_b)


def smooth_inverse_term(dz: DeadZone, mu: ArrayLike, q_tilde: ArrayLike) -> np.ndarray:
    """k_i tanh(mu_i q~_i) per channel, with k the dead-zone half-width."""
    sharpness = np.diag(checked(as_matrix(mu, "mu", dz.n), "mu", POSITIVE_DIAGONAL))
    q_tilde = _channels(dz, q_tilde, "q_tilde")
    return half_width(dz) * np.tanh(sharpness * q_tilde)


def check_channels(dz: DeadZone, n: int) -> DeadZone:
    if dz.n != n:
        raise DimensionError(f"dead-zone has {dz.n} channels, system has {n}", name="dead_zone")
    return dz
