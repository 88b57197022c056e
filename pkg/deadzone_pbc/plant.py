import logging
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .constants import FD_STEP
from .exceptions import DimensionError, ModelError
from .utils import as_vector, check_dimension
from .validators import (
    FINITE,
    MATRIX,
    NONZERO_DIAGONAL,
    POSITIVE_DEFINITE,
    POSITIVE_SEMIDEFINITE,
    SYMMETRIC,
    as_matrix,
    checked,
)

logger = logging.getLogger(__name__)

MassMap = Callable[[np.ndarray], np.ndarray]
PotentialMap = Callable[[np.ndarray], float]
GradientMap = Callable[[np.ndarray], np.ndarray]
DampingMap = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GeneralizedState:
    """Canonical coordinates x = col(q, p) of an n-DoF mechanical system.

    Attributes:
        q: generalized positions (rad or m)
        p: generalized momenta
    """

    __slots__ = ("q", "p")

    def __init__(self, q: ArrayLike, p: ArrayLike, validate: bool = True) -> None:
        self.q = np.asarray(q, dtype=float).reshape(-1)
        self.p = np.asarray(p, dtype=float).reshape(-1)
        if validate:
            if self.q.size < 1:
                raise DimensionError("state must have at least one degree of freedom", name="q")
            if self.q.shape != self.p.shape:
                raise DimensionError(f"q has {self.q.size} entries but p has {self.p.size}", name="p")
            if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
                raise DimensionError("state entries must be finite", name="x")

    @property
    def n(self) -> int:
        return int(self.q.size)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate((self.q, self.p))

    @classmethod
    def from_vector(cls, x: ArrayLike, validate: bool = True) -> "GeneralizedState":
        flat = np.asarray(x, dtype=float).reshape(-1)
        if flat.size % 2:
            raise DimensionError(f"state vector must have even length, found {flat.size}", name="x")
        n = flat.size // 2
        return cls(flat[:n], flat[n:], validate=validate)

    @classmethod
    def zeros(cls, n: int) -> "GeneralizedState":
        return cls(np.zeros(n), np.zeros(n))

    def __repr__(self) -> str:
        return f"GeneralizedState(q={self.q.tolist()}, p={self.p.tolist()})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneralizedState):
            return NotImplemented
        return bool(np.array_equal(self.q, other.q) and np.array_equal(self.p, other.p))


class MechanicalSystem:
    """Fully-actuated port-Hamiltonian mechanical system.

        q_dot = dH/dp
        p_dot = -dH/dq - D(q, p) dH/dp + G u + beta

    with H = 1/2 p^T M(q)^-1 p + U(q).

    Attributes:
        n: number of degrees of freedom
        mass: q -> M(q), symmetric positive definite
        mass_grad: optional q -> array of shape (n, n, n) whose j-th slice is dM/dq_j
        potential: q -> U(q)
        potential_grad: q -> grad U(q)
        damping: (q, p) -> D(q, p), symmetric positive semi-definite
        input_gains: diagonal g of the input matrix G
        offset: constant generalized force beta
        description: document section that rebuilds this system (see `deadzone_pbc.document`)
    """

    __slots__ = (
        "n",
        "mass",
        "mass_grad",
        "potential",
        "potential_grad",
        "damping",
        "input_gains",
        "offset",
        "description",
    )

    def __init__(
        self,
        n: int,
        *,
        mass: MassMap,
        potential: PotentialMap,
        potential_grad: GradientMap,
        damping: DampingMap,
        input_matrix: ArrayLike,
        offset: ArrayLike = 0.0,
        mass_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        description: Optional[Dict[str, Any]] = None,
    ) -> None:
        if int(n) != n or n < 1:
            raise DimensionError(f"dimension must be a positive integer, found {n}", name="n")
        self.n = int(n)
        self.mass = mass
        self.mass_grad = mass_grad
        self.potential = potential
        self.potential_grad = potential_grad
        self.damping = damping
        gains = as_matrix(input_matrix, "input_matrix", self.n)
        self.input_gains = np.diag(checked(gains, "input_matrix", NONZERO_DIAGONAL)).copy()
        self.offset = as_vector(offset, self.n, "offset")
        self.description = dict(description) if description is not None else None

    @property
    def input_matrix(self) -> np.ndarray:
        return np.diag(self.input_gains)

    def with_offset(self, beta: ArrayLike) -> "MechanicalSystem":
        offset = as_vector(beta, self.n, "offset")
        description = None
        if self.description is not None:
            description = dict(self.description, offset=offset.tolist())
        return MechanicalSystem(
            self.n,
            mass=self.mass,
            potential=self.potential,
            potential_grad=self.potential_grad,
            damping=self.damping,
            input_matrix=self.input_gains,
            offset=offset,
            mass_grad=self.mass_grad,
            description=description,
        )

    def validate(self, samples: int = 64, seed: int = 0, span: float = np.pi) -> "MechanicalSystem":
        """Check M(q) symmetric positive definite and D(q, p) symmetric positive semi-definite.

        The sweep covers the origin plus `samples` points drawn uniformly from [-span, span]^n
        (momenta from the same range). Raises `ModelError` naming the first offending q.
        """
        rng = np.random.default_rng(seed)
        points = [(np.zeros(self.n), np.zeros(self.n))]
        points.extend(
            (rng.uniform(-span, span, self.n), rng.uniform(-span, span, self.n)) for _ in range(samples)
        )
        for q, p in points:
            mass = np.asarray(self.mass(q), dtype=float)
            self._check(mass, q, "mass matrix", SYMMETRIC, POSITIVE_DEFINITE)
            damping = np.asarray(self.damping(q, p), dtype=float)
            self._check(damping, q, "damping matrix", SYMMETRIC, POSITIVE_SEMIDEFINITE)
        logger.debug("model validated over %d configurations (n = %d)", len(points), self.n)
        return self

    def _check(self, matrix: np.ndarray, q: np.ndarray, what: str, *validators: Any) -> None:
        if matrix.shape != (self.n, self.n):
            raise ModelError(f"{what} has shape {matrix.shape}, expected {(self.n, self.n)}", q=q)
        if not np.all(np.isfinite(matrix)):
            raise ModelError(f"{what} has non-finite entries", q=q)
        try:
            for validator in validators:
                validator(matrix)
        except ValueError as exc:
            raise ModelError(f"{what}: {exc}", q=q) from None


def _state(sys: MechanicalSystem, x: GeneralizedState) -> Tuple[np.ndarray, np.ndarray]:
    if x.n != sys.n:
        raise DimensionError(f"state has dimension {x.n}, system has {sys.n}", name="x")
    return x.q, x.p


def inverse_mass(sys: MechanicalSystem, q: np.ndarray) -> np.ndarray:
    mass = np.asarray(sys.mass(q), dtype=float)
    try:
        inverse = np.linalg.inv(mass)
    except np.linalg.LinAlgError:
        raise ModelError("mass matrix is not invertible", q=q) from None
    if not np.all(np.isfinite(inverse)):
        raise ModelError("mass matrix is not invertible", q=q)
    return inverse


def kinetic_gradient(sys: MechanicalSystem, q: np.ndarray, p: np.ndarray, velocity: np.ndarray) -> np.ndarray:
    # Gradient in q of 1/2 p^T M(q)^-1 p, where velocity = M(q)^-1 p
    if not np.any(p):
        return np.zeros(sys.n)
    if sys.mass_grad is not None:
        # d(M^-1)/dq_j = -M^-1 (dM/dq_j) M^-1
        dmass = np.asarray(sys.mass_grad(q), dtype=float)
        return -0.5 * np.einsum("i,jik,k->j", velocity, dmass, velocity)
    grad = np.empty(sys.n)
    for j in range(sys.n):
        h = FD_STEP * max(1.0, abs(q[j]))
        step = np.zeros(sys.n)
        step[j] = h
        upper = p @ inverse_mass(sys, q + step) @ p
        lower = p @ inverse_mass(sys, q - step) @ p
        grad[j] = 0.5 * (upper - lower) / (2.0 * h)
    return grad


def kinetic_energy(sys: MechanicalSystem, x: GeneralizedState) -> float:
    q, p = _state(sys, x)
    return float(0.5 * p @ inverse_mass(sys, q) @ p)


def hamiltonian(sys: MechanicalSystem, x: GeneralizedState) -> float:
    q, _ = _state(sys, x)
    return kinetic_energy(sys, x) + float(sys.potential(q))


def hamiltonian_gradient(sys: MechanicalSystem, x: GeneralizedState) -> Tuple[np.ndarray, np.ndarray]:
    """Return (dH/dq, dH/dp) at `x`."""
    q, p = _state(sys, x)
    velocity = inverse_mass(sys, q) @ p
    grad_q = kinetic_gradient(sys, q, p, velocity) + np.asarray(sys.potential_grad(q), dtype=float)
    return grad_q, velocity


def open_loop_field(sys: MechanicalSystem, x: GeneralizedState, u: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    u = check_dimension(np.asarray(u, dtype=float).reshape(-1), sys.n, "u")
    return force_field(sys, x, sys.input_gains * u + sys.offset)


def force_field(sys: MechanicalSystem, x: GeneralizedState, force: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # Open loop driven by an external generalized force in place of G u + beta
    grad_q, velocity = hamiltonian_gradient(sys, x)
    damping = np.asarray(sys.damping(x.q, x.p), dtype=float)
    return velocity, -grad_q - damping @ velocity + force


def passive_output(sys: MechanicalSystem, x: GeneralizedState) -> np.ndarray:
    q, p = _state(sys, x)
    return sys.input_gains * (inverse_mass(sys, q) @ p)


class ConstantMap:
    # Picklable stand-in for `lambda *args: matrix`
    __slots__ = ("value",)

    def __init__(self, value: np.ndarray) -> None:
        self.value = value

    def __call__(self, *args: Any) -> np.ndarray:
        return self.value


class QuadraticPotential:
    __slots__ = ("stiffness",)

    def __init__(self, stiffness: np.ndarray) -> None:
        self.stiffness = stiffness

    def __call__(self, q: np.ndarray) -> float:
        return 0.5 * float(q @ self.stiffness @ q)

    def gradient(self, q: np.ndarray) -> np.ndarray:
        return self.stiffness @ q


def constant_system(
    mass: ArrayLike,
    damping: ArrayLike,
    input_gains: ArrayLike = 1.0,
    offset: ArrayLike = 0.0,
    stiffness: Optional[ArrayLike] = None,
    n: Optional[int] = None,
) -> MechanicalSystem:
    """Constant-mass, constant-damping system with optional potential U(q) = 1/2 q^T K q.

    Matrices are given as scalars, diagonals or full row-major arrays. The dimension is taken
    from the first non-scalar argument unless `n` is supplied.
    """
    if n is None:
        n = 1
        for value in (mass, damping, input_gains, offset, stiffness):
            if value is not None and np.ndim(value) > 0:
                n = int(np.shape(value)[0])
                break
    mass_matrix = checked(as_matrix(mass, "mass", n), "mass", MATRIX, FINITE, SYMMETRIC, POSITIVE_DEFINITE, n=n)
    damping_matrix = checked(
        as_matrix(damping, "damping", n), "damping", MATRIX, FINITE, SYMMETRIC, POSITIVE_SEMIDEFINITE, n=n
    )
    stiffness_matrix = np.zeros((n, n))
    if stiffness is not None:
        stiffness_matrix = checked(
            as_matrix(stiffness, "stiffness", n), "stiffness", MATRIX, FINITE, SYMMETRIC, POSITIVE_SEMIDEFINITE, n=n
        )
    description: Dict[str, Any] = {
        "mass": mass_matrix.tolist(),
        "damping": damping_matrix.tolist(),
        "input_matrix": np.diag(as_matrix(input_gains, "input_matrix", n)).tolist(),
        "offset": as_vector(offset, n, "offset").tolist(),
    }
    if stiffness is not None:
        description["stiffness"] = stiffness_matrix.tolist()

    return MechanicalSystem(
        n,
        mass=ConstantMap(mass_matrix),
        mass_grad=ConstantMap(np.zeros((n, n, n))),
        potential=QuadraticPotential(stiffness_matrix),
        potential_grad=QuadraticPotential(stiffness_matrix).gradient,
        damping=ConstantMap(damping_matrix),
        input_matrix=input_gains,
        offset=offset,
        description=description,
    )
