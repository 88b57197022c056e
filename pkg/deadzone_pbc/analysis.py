import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy import linalg, optimize

from .constants import CROSSING_DEADBAND, FD_STEP, REAL_SPECTRUM_TOL, SETTLING_BAND
from .control import PbcGains, desired_hamiltonian_hessian_q
from .exceptions import AnalysisError, DimensionError, ValidationError
from .plant import MechanicalSystem
from .sim import Trajectory
from .validators import SYMMETRIC

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SaddleDecomposition:
    """Saddle-point form of the closed loop linearized at the setpoint.

    phi_M and phi_P are upper triangular with phi_M^T phi_M = M_star^-1 and phi_P^T phi_P = P, and

        N = [[phi_M R phi_M^T, phi_M phi_P^T], [-phi_P phi_M^T, 0]]

    is similar to minus the linearization.
    """

    M_star: np.ndarray
    R: np.ndarray
    P: np.ndarray
    phi_M: np.ndarray
    phi_P: np.ndarray
    N: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    q_star: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.M_star.shape[0])

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def max_imag(self) -> float:
        return float(np.max(np.abs(self.eigenvalues.imag)))

    @property
    def min_real(self) -> float:
        return float(np.min(self.eigenvalues.real))

    @property
    def is_real(self) -> bool:
        return self.max_imag <= REAL_SPECTRUM_TOL * self.spectral_radius


@dataclass(frozen=True)
class TuningReport:
    """Real-spectrum tuning rule 4 lambda_max(P) lambda_max(M_star) <= lambda_min(R)^2."""

    lhs: float
    rhs: float
    satisfied: bool
    lambda_min_R: float
    q_star: Optional[np.ndarray] = None


def _symmetric(matrix: ArrayLike, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"expected a square matrix, found shape {matrix.shape}", name=name)
    try:
        SYMMETRIC(matrix)
    except ValidationError as exc:
        raise AnalysisError(f"{name}: {exc.message}") from None
    return matrix


def _setpoint_matrices(
    sys: MechanicalSystem, gains: PbcGains, q_star: Optional[ArrayLike] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    # Setpoint, M_star, R = D_star + K_P and P = K_I + mu K_Z
    target = gains.q_star if q_star is None else np.asarray(q_star, dtype=float)
    if gains.n != sys.n or target.shape != (sys.n,):
        raise DimensionError(f"gains and setpoint must have dimension {sys.n}", name="gains")
    M_star = np.asarray(sys.mass(target), dtype=float)
    D_star = np.asarray(sys.damping(target, np.zeros(sys.n)), dtype=float)
    return target, M_star, D_star + gains.K_P, desired_hamiltonian_hessian_q(gains)


def linearize(sys: MechanicalSystem, gains: PbcGains) -> np.ndarray:
    """Jacobian A of the ideal closed loop at (q_star, 0).

    A = -[[0, -M_star^-1], [K_I + mu K_Z, (D_star + K_P) M_star^-1]]
    """
    _, M_star, R, P = _setpoint_matrices(sys, gains)
    try:
        M_inv = np.linalg.inv(M_star)
    except np.linalg.LinAlgError:
        raise AnalysisError("mass matrix at the setpoint is singular") from None
    n = sys.n
    return -np.block([[np.zeros((n, n)), -M_inv], [P, R @ M_inv]])


def fd_jacobian(field: Callable[[np.ndarray], np.ndarray], x: ArrayLike, step: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    columns = []
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        offset = np.zeros(x.size)
        offset[j] = h
        columns.append((np.asarray(field(x + offset)) - np.asarray(field(x - offset))) / (2.0 * h))
    return np.column_stack(columns)


def _upper_inverse_factor(M: np.ndarray) -> np.ndarray:
    # Upper triangular phi with phi^T phi = M^-1: factor M = V V^T with V upper triangular
    # through the reversal J M J = L L^T, V = J L J, then invert V.
    n = M.shape[0]
    reverse = np.eye(n)[::-1]
    lower = linalg.cholesky(reverse @ M @ reverse, lower=True)
    upper = reverse @ lower @ reverse
    return linalg.solve_triangular(upper, np.eye(n), lower=False)


def saddle_from_matrices(
    M_star: ArrayLike, R: ArrayLike, P: ArrayLike, q_star: Optional[ArrayLike] = None
) -> SaddleDecomposition:
    M_star = _symmetric(M_star, "M_star")
    R = _symmetric(R, "R")
    P = _symmetric(P, "P")
    if not (M_star.shape == R.shape == P.shape):
        raise DimensionError(f"shapes differ: M_star {M_star.shape}, R {R.shape}, P {P.shape}", name="R")
    try:
        phi_M = _upper_inverse_factor(M_star)
    except linalg.LinAlgError:
        raise AnalysisError("Cholesky factorization failed: M_star is not positive definite") from None
    try:
        phi_P = linalg.cholesky(P, lower=False)
    except linalg.LinAlgError:
        raise AnalysisError("Cholesky factorization failed: P = K_I + mu K_Z is not positive definite") from None

    n = M_star.shape[0]
    N = np.block([[phi_M @ R @ phi_M.T, phi_M @ phi_P.T], [-phi_P @ phi_M.T, np.zeros((n, n))]])
    eigenvalues, eigenvectors = linalg.eig(N)
    return SaddleDecomposition(
        M_star=M_star,
        R=R,
        P=P,
        phi_M=phi_M,
        phi_P=phi_P,
        N=N,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        q_star=None if q_star is None else np.asarray(q_star, dtype=float),
    )


def saddle_decompose(sys: MechanicalSystem, gains: PbcGains) -> SaddleDecomposition:
    target, M_star, R, P = _setpoint_matrices(sys, gains)
    return saddle_from_matrices(M_star, R, P, q_star=target)


def _rayleigh(dec: SaddleDecomposition, w1: np.ndarray) -> Tuple[complex, complex]:
    norm2 = float(np.vdot(w1, w1).real)
    a = np.vdot(w1, dec.phi_M @ dec.R @ dec.phi_M.T @ w1) / norm2
    b = np.vdot(w1, dec.phi_M @ dec.P @ dec.phi_M.T @ w1) / norm2
    return a, b


def eigen_quadratic_residual(dec: SaddleDecomposition, eigenvalue: complex, w1: ArrayLike) -> float:
    """|lambda^2 - a lambda + b| with a, b the Rayleigh quotients of phi_M R phi_M^T and
    phi_M P phi_M^T at the first block w1 of an eigenvector of N.

    Returns nan (and logs a warning) for a vanishing w1.
    """
    w1 = np.asarray(w1, dtype=complex).reshape(-1)
    if w1.size != dec.n:
        raise DimensionError(f"expected {dec.n} entries, found {w1.size}", name="w1")
    if not np.any(w1):
        logger.warning("degenerate eigenvector for lambda = %s: first block vanishes", eigenvalue)
        return float("nan")
    a, b = _rayleigh(dec, w1)
    return float(abs(eigenvalue**2 - a * eigenvalue + b))


def quadratic_residuals(dec: SaddleDecomposition) -> np.ndarray:
    n = dec.n
    return np.array(
        [eigen_quadratic_residual(dec, dec.eigenvalues[k], dec.eigenvectors[:n, k]) for k in range(2 * n)]
    )


def quadratic_roots(dec: SaddleDecomposition, w1: ArrayLike) -> np.ndarray:
    # (a +- sqrt(a^2 - 4b)) / 2, one of which is the eigenvalue that owns w1
    a, b = _rayleigh(dec, np.asarray(w1, dtype=complex).reshape(-1))
    root = np.sqrt(complex(a * a - 4.0 * b))
    return np.array([(a + root) / 2.0, (a - root) / 2.0])


def tuning_rule(M_star: ArrayLike, R: ArrayLike, P: ArrayLike, q_star: Optional[ArrayLike] = None) -> TuningReport:
    M_star = _symmetric(M_star, "M_star")
    R = _symmetric(R, "R")
    P = _symmetric(P, "P")
    lhs = 4.0 * float(np.max(linalg.eigvalsh(P))) * float(np.max(linalg.eigvalsh(M_star)))
    lambda_min_R = float(np.min(linalg.eigvalsh(R)))
    rhs = lambda_min_R**2 if lambda_min_R > 0.0 else 0.0
    satisfied = lambda_min_R > 0.0 and lhs <= rhs * (1.0 + 1e-12)
    return TuningReport(
        lhs=lhs,
        rhs=rhs,
        satisfied=satisfied,
        lambda_min_R=lambda_min_R,
        q_star=None if q_star is None else np.asarray(q_star, dtype=float),
    )


def tuning_check(sys: MechanicalSystem, gains: PbcGains, q_star: Optional[ArrayLike] = None) -> TuningReport:
    """Evaluate the tuning rule with M_star, R = D_star + K_P and P = K_I + mu K_Z at `q_star`
    (the gains' setpoint when omitted)."""
    target, M_star, R, P = _setpoint_matrices(sys, gains, q_star)
    return tuning_rule(M_star, R, P, q_star=target)


def dissipation_scaling(report: TuningReport) -> float:
    """Smallest alpha >= 1 for which R -> alpha R satisfies the tuning rule.

    nan when R is not positive definite: no uniform scaling of R then satisfies the rule.
    """
    if report.satisfied:
        return 1.0
    if report.lambda_min_R <= 0.0:
        return float("nan")
    return max(1.0, float(np.sqrt(report.lhs) / report.lambda_min_R))


def rescale_dissipation(
    sys: MechanicalSystem, gains: PbcGains, alpha: float, q_star: Optional[ArrayLike] = None
) -> PbcGains:
    """Gains whose damping injection realizes D_star + K_P' = alpha (D_star + K_P)."""
    if not np.isfinite(alpha) or alpha < 1.0:
        raise AnalysisError(f"scaling must be a finite value of at least 1, found {alpha}")
    target, _, R, _ = _setpoint_matrices(sys, gains, q_star)
    D_star = R - gains.K_P
    K_P = alpha * R - D_star
    return gains.replace(K_P=0.5 * (K_P + K_P.T))


def match_spectra(first: ArrayLike, second: ArrayLike) -> float:
    """Largest deviation between two spectra paired as multisets (optimal assignment)."""
    first = np.asarray(first, dtype=complex).reshape(-1)
    second = np.asarray(second, dtype=complex).reshape(-1)
    if first.size != second.size:
        raise AnalysisError(f"spectra have {first.size} and {second.size} eigenvalues")
    cost = np.abs(first[:, None] - second[None, :])
    rows, cols = optimize.linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols])) if first.size else 0.0


@dataclass(frozen=True)
class TransientMetrics:
    """Per-link transient figures; `settling_time` is nan for a link that never settles."""

    overshoot: np.ndarray
    settling_time: np.ndarray
    oscillations: np.ndarray


def _crossings(signal: np.ndarray, deadband: float) -> int:
    signs = np.sign(signal[np.abs(signal) > deadband])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def transient_metrics(traj: Trajectory, q_star: ArrayLike) -> TransientMetrics:
    """Overshoot, settling time and oscillation count of each link.

    With e = q - q_star, overshoot is the largest excursion past the setpoint,
    max(0, -sign(e(0)) e(t)) / |e(0)|; the settling time is the first instant after which
    |e| stays within 2% of |e(0)|; oscillations counts sign changes of e, ignoring excursions
    below 1e-9 |e(0)|. A link that starts on its setpoint is scaled by its largest excursion.
    """
    if len(traj) == 0:
        raise AnalysisError("trajectory is empty")
    error = traj.q - np.asarray(q_star, dtype=float)
    n = error.shape[1]
    overshoot = np.zeros(n)
    settling = np.zeros(n)
    oscillations = np.zeros(n, dtype=int)
    for i in range(n):
        e = error[:, i]
        scale = abs(e[0]) if e[0] != 0.0 else float(np.max(np.abs(e)))
        if scale == 0.0:
            continue
        overshoot[i] = max(0.0, float(np.max(-np.sign(e[0]) * e))) / scale
        outside = np.flatnonzero(np.abs(e) > SETTLING_BAND * scale)
        if outside.size == 0:
            settling[i] = traj.times[0]
        elif outside[-1] == e.size - 1:
            settling[i] = np.nan
        else:
            settling[i] = traj.times[outside[-1] + 1]
        oscillations[i] = _crossings(e, CROSSING_DEADBAND * scale)
    return TransientMetrics(overshoot=overshoot, settling_time=settling, oscillations=oscillations)
