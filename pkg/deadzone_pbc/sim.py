import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from .actuator import DeadZone, check_channels, deadband
from .constants import (
    DEFAULT_DT,
    DEFAULT_HORIZON,
    DEFAULT_RECORD_STRIDE,
    EXPLOSION_BOUND,
    SETTLE_VELOCITY,
    SETTLE_WINDOW,
    ControllerKind,
    Wiring,
)
from .control import PbcGains, controller_command, desired_hamiltonian, desired_hamiltonian_gradient
from .exceptions import AnalysisError, ConfigError, DimensionError, IntegrationError
from .plant import GeneralizedState, MechanicalSystem, hamiltonian, inverse_mass, open_loop_field
from .utils import atomic_open, fmt17
from .validators import RangeValidator, checked

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]

ORACLE_GRID = 4001
ORACLE_STARTS = 64


class SimConfig:
    """Run parameters of one fixed-step simulation.

    Attributes:
        initial_state: state at t = 0
        dt: integration step in seconds, > 0
        horizon: final time in seconds, >= dt
        wiring: `Wiring.IDEAL` integrates the structure-preserving closed loop directly,
            `Wiring.PHYSICAL` routes the controller command through the dead-zone
        controller: `ControllerKind` driving the plant
        record_stride: record every `record_stride`-th step, >= 1
    """

    __slots__ = ("initial_state", "dt", "horizon", "wiring", "controller", "record_stride")

    def __init__(
        self,
        initial_state: GeneralizedState,
        *,
        dt: float = DEFAULT_DT,
        horizon: float = DEFAULT_HORIZON,
        wiring: Union[Wiring, str] = Wiring.IDEAL,
        controller: Union[ControllerKind, str] = ControllerKind.PIDZ,
        record_stride: int = DEFAULT_RECORD_STRIDE,
    ) -> None:
        if not isinstance(initial_state, GeneralizedState):
            raise ConfigError("initial state must be a GeneralizedState", key="sim.x0")
        self.initial_state = initial_state
        self.dt = float(checked(dt, "sim.dt", RangeValidator(min=0.0, exclusive=True)))
        self.horizon = float(checked(horizon, "sim.horizon", RangeValidator(min=self.dt)))
        if int(record_stride) != record_stride:
            raise ConfigError(f"record stride must be an integer, found {record_stride}", key="sim.record_stride")
        self.record_stride = int(checked(record_stride, "sim.record_stride", RangeValidator(min=1)))
        try:
            self.wiring = Wiring(wiring)
        except ValueError:
            choices = ", ".join(item.value for item in Wiring)
            raise ConfigError(f"invalid choice '{wiring}', expected one of {choices}", key="sim.wiring") from None
        try:
            self.controller = ControllerKind(controller)
        except ValueError:
            choices = ", ".join(item.value for item in ControllerKind)
            raise ConfigError(
                f"invalid choice '{controller}', expected one of {choices}", key="sim.controller"
            ) from None

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def replace(self, **changes: Any) -> "SimConfig":
        values: Dict[str, Any] = {name: getattr(self, name) for name in self.__slots__}
        values.update(changes)
        initial_state = values.pop("initial_state")
        return SimConfig(initial_state, **values)

    def description(self) -> Dict[str, Any]:
        return {
            "dt": self.dt,
            "horizon": self.horizon,
            "x0": self.initial_state.vector.tolist(),
            "wiring": self.wiring.value,
            "controller": self.controller.value,
            "record_stride": self.record_stride,
        }

    def __repr__(self) -> str:
        return "SimConfig({})".format(", ".join(f"{key}={value!r}" for key, value in self.description().items()))


@dataclass
class Trajectory:
    """Recorded signals of one run, one row per recorded step.

    `energies` holds the Lyapunov function of the active loop: H_d for the compensated
    controller, H_pi for the plain PI controller and the plant energy H without control.
    `torques` holds the actuator torque tau of `actuator_torque` under physical wiring and the
    command itself under ideal wiring.
    """

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    velocities: np.ndarray
    commands: np.ndarray
    torques: np.ndarray
    energies: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.q.shape[1])

    @property
    def states(self) -> List[GeneralizedState]:
        return [GeneralizedState(q, p) for q, p in zip(self.q, self.p)]

    @property
    def final_state(self) -> GeneralizedState:
        return GeneralizedState(self.q[-1], self.p[-1])

    @property
    def label(self) -> str:
        return str(self.metadata.get("label", "trajectory"))

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class SteadyStateError:
    """Final position error per link.

    `values[i]` is a percentage of |q_star_i|, or absolute radians where `absolute[i]` is set
    (q_star_i = 0).
    """

    values: np.ndarray
    absolute: np.ndarray
    settled: bool


@dataclass(frozen=True)
class ResidualBand:
    """Per-link interval [lo, hi] of position errors q - q_star at which the loop can rest."""

    lo: np.ndarray
    hi: np.ndarray
    exact: bool = True

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, q_tilde: ArrayLike, tol: float = 0.0) -> bool:
        q_tilde = np.asarray(q_tilde, dtype=float)
        return bool(np.all(q_tilde >= self.lo - tol) and np.all(q_tilde <= self.hi + tol))


class SimJob(NamedTuple):
    system: MechanicalSystem
    gains: PbcGains
    dead_zone: Optional[DeadZone]
    config: SimConfig
    label: Optional[str] = None


def active_gains(gains: PbcGains, controller: Union[ControllerKind, str]) -> PbcGains:
    # The plain PI controller runs on the same gains with the compensator switched off
    if ControllerKind(controller) is ControllerKind.PI and gains.compensated:
        return gains.pi_only()
    return gains


def actuator_torque(sys: MechanicalSystem, dz: DeadZone, v: ArrayLike) -> np.ndarray:
    """Torque tau of the actuators for command v, in input units: the plant receives G tau.

    The dead-zone offset is a generalized force, so tau = deadband(v) + beta / G.
    """
    return deadband(dz, v) + dz.beta / sys.input_gains


def _loop_field(
    sys: MechanicalSystem,
    plant: MechanicalSystem,
    gains: PbcGains,
    dz: Optional[DeadZone],
    wiring: Wiring,
    controller: ControllerKind,
    x: GeneralizedState,
) -> Tuple[np.ndarray, np.ndarray]:
    if wiring is Wiring.IDEAL:
        if controller is ControllerKind.NONE:
            return open_loop_field(sys, x, np.zeros(sys.n))
        grad_q, grad_p = desired_hamiltonian_gradient(sys, gains, x)
        dissipation = np.asarray(sys.damping(x.q, x.p), dtype=float) + gains.K_P
        return grad_p, -grad_q - dissipation @ grad_p
    assert dz is not None
    v = controller_command(controller, sys, gains, x)
    return open_loop_field(plant, x, actuator_torque(sys, dz, v))


def _resolve(
    sys: MechanicalSystem,
    gains: PbcGains,
    dz: Optional[DeadZone],
    wiring: Union[Wiring, str],
    controller: Union[ControllerKind, str],
) -> Tuple[MechanicalSystem, PbcGains, Wiring, ControllerKind]:
    # Under physical wiring the true offset enters once, through the actuator, so the plant's is zeroed
    wiring = Wiring(wiring)
    controller = ControllerKind(controller)
    if gains.n != sys.n:
        raise DimensionError(f"gains have dimension {gains.n}, system has {sys.n}", name="gains")
    if wiring is Wiring.PHYSICAL:
        if dz is None:
            raise ConfigError("physical wiring requires a dead-zone", key="dead_zone")
        check_channels(dz, sys.n)
        return sys.with_offset(0.0), active_gains(gains, controller), wiring, controller
    return sys, active_gains(gains, controller), wiring, controller


def closed_loop_field(
    sys: MechanicalSystem,
    gains: PbcGains,
    dz: Optional[DeadZone],
    wiring: Union[Wiring, str],
    x: GeneralizedState,
    controller: Union[ControllerKind, str] = ControllerKind.PIDZ,
) -> Tuple[np.ndarray, np.ndarray]:
    """State derivative (q_dot, p_dot) of the closed loop.

    Ideal wiring integrates q_dot = dH_d/dp, p_dot = -dH_d/dq - (D + K_P) dH_d/dp. Physical
    wiring feeds the controller command v through the dead-zone, so the plant (its own offset
    zeroed) receives the generalized force G deadband(v) + beta.
    """
    plant, resolved, wiring, controller = _resolve(sys, gains, dz, wiring, controller)
    return _loop_field(sys, plant, resolved, dz, wiring, controller, x)


def rk4_step(field: Field, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = field(x)
    k2 = field(x + 0.5 * dt * k1)
    k3 = field(x + 0.5 * dt * k2)
    k4 = field(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    sys: MechanicalSystem,
    gains: PbcGains,
    dz: Optional[DeadZone],
    config: SimConfig,
    label: Optional[str] = None,
) -> Trajectory:
    """Integrate the closed loop with the classical fixed-step Runge-Kutta scheme.

    Raises `IntegrationError` when the state leaves the finite range or its norm exceeds
    `EXPLOSION_BOUND`.
    """
    plant, resolved, wiring, controller = _resolve(sys, gains, dz, config.wiring, config.controller)
    if config.initial_state.n != sys.n:
        raise DimensionError(f"initial state has dimension {config.initial_state.n}, system has {sys.n}", name="sim.x0")

    n = sys.n

    def field(vector: np.ndarray) -> np.ndarray:
        q_dot, p_dot = _loop_field(
            sys, plant, resolved, dz, wiring, controller, GeneralizedState.from_vector(vector, False)
        )
        return np.concatenate((q_dot, p_dot))

    steps, stride, dt = config.steps, config.record_stride, config.dt
    count = steps // stride + 1
    times = np.empty(count)
    states = np.empty((count, 2 * n))
    velocities = np.empty((count, n))
    commands = np.empty((count, n))
    torques = np.empty((count, n))
    energies = np.empty(count)

    def record(row: int, step: int, vector: np.ndarray) -> None:
        x = GeneralizedState.from_vector(vector, False)
        v = controller_command(controller, sys, resolved, x)
        times[row] = step * dt
        states[row] = vector
        velocities[row] = inverse_mass(sys, x.q) @ x.p
        commands[row] = v
        torques[row] = actuator_torque(sys, dz, v) if wiring is Wiring.PHYSICAL and dz is not None else v
        if controller is ControllerKind.NONE:
            energies[row] = hamiltonian(sys, x)
        else:
            energies[row] = desired_hamiltonian(sys, resolved, x)

    logger.debug(
        "integrating %s (%s wiring, %s controller): %d steps of %g s", label, wiring.value, controller.value, steps, dt
    )
    x = config.initial_state.vector
    record(0, 0, x)
    row = 1
    for step in range(1, steps + 1):
        previous = x
        x = rk4_step(field, x, dt)
        norm = float(np.linalg.norm(x))
        if not np.all(np.isfinite(x)):
            raise IntegrationError("state became non-finite", step * dt, step, float(np.linalg.norm(previous)))
        if norm > EXPLOSION_BOUND:
            raise IntegrationError(f"state norm exceeded {EXPLOSION_BOUND:g}", step * dt, step, norm)
        if step % stride == 0:
            record(row, step, x)
            row += 1

    metadata = {
        "label": label or "trajectory",
        "wiring": wiring.value,
        "controller": controller.value,
        "dt": dt,
        "record_stride": stride,
        "gains": resolved.description(),
    }
    return Trajectory(
        times=times,
        q=states[:, :n],
        p=states[:, n:],
        velocities=velocities,
        commands=commands,
        torques=torques,
        energies=energies,
        metadata=metadata,
    )


def is_settled(traj: Trajectory, threshold: float = SETTLE_VELOCITY, window: float = SETTLE_WINDOW) -> bool:
    """True when max |q_dot| stays below `threshold` over the trailing `window` fraction of the run."""
    if len(traj) == 0:
        raise AnalysisError("trajectory is empty")
    end = float(traj.times[-1])
    trailing = traj.times >= end - window * end
    return bool(np.max(np.abs(traj.velocities[trailing])) < threshold)


def steady_state_error(traj: Trajectory, q_star: ArrayLike) -> SteadyStateError:
    if len(traj) == 0:
        raise AnalysisError("trajectory is empty")
    q_star = np.asarray(q_star, dtype=float)
    error = np.abs(traj.q[-1] - q_star)
    absolute = q_star == 0.0
    values = np.where(absolute, error, 100.0 * error / np.where(absolute, 1.0, np.abs(q_star)))
    settled = is_settled(traj)
    if not settled:
        logger.warning("%s: not settled at t = %g s, steady-state error is indicative", traj.label, traj.times[-1])
    return SteadyStateError(values=values, absolute=absolute, settled=settled)


def _bisect_boundary(predicate: Callable[[float], bool], below: float, above: float) -> float:
    # predicate(below) is False and predicate(above) is True; predicate is monotone in between
    for _ in range(200):
        middle = 0.5 * (below + above)
        if middle in (below, above):
            break
        if predicate(middle):
            above = middle
        else:
            below = middle
    return 0.5 * (below + above)


def _zero_interval(force: Callable[[np.ndarray], np.ndarray]) -> Tuple[float, float]:
    # `force` is continuous and non-increasing, positive far left and negative far right
    reach = 1.0
    for _ in range(64):
        ends = force(np.array([-reach, reach]))
        if ends[0] > 0.0 and ends[1] < 0.0:
            break
        reach *= 2.0
    else:
        raise AnalysisError("equilibrium force does not change sign; no bounded residual band")

    grid = np.linspace(-reach, reach, ORACLE_GRID)
    values = force(grid)
    first = int(np.argmax(values <= 0.0))
    last = grid.size - 1 - int(np.argmax(values[::-1] >= 0.0))

    def scalar(e: float) -> float:
        return float(force(np.array([e]))[0])

    lo = _bisect_boundary(lambda e: scalar(e) <= 0.0, grid[first - 1], grid[first])
    hi = _bisect_boundary(lambda e: scalar(e) < 0.0, grid[last], grid[last + 1])
    return lo, hi


def _is_diagonal(matrix: np.ndarray) -> bool:
    return bool(np.all(matrix == np.diag(np.diag(matrix))))


def residual_band_oracle(
    sys: MechanicalSystem,
    gains: PbcGains,
    dz: DeadZone,
    q_star: Optional[ArrayLike] = None,
    controller: Union[ControllerKind, str] = ControllerKind.PI,
) -> ResidualBand:
    """Position errors at which the physically wired loop is at rest (p = 0).

    With diagonal K_I and no potential forces each link decouples into a scalar force
    F_i(e) = g_i deadband_i(v_i(e)) + beta_i that is continuous and non-increasing in e; its zero
    set is an interval found by a dense grid scan refined by bisection. Otherwise the band is
    estimated from a multi-start root search and flagged inexact.
    """
    controller = ControllerKind(controller)
    if controller is ControllerKind.NONE:
        raise ConfigError("the residual band needs a pi or pidz controller", key="controller")
    check_channels(dz, sys.n)
    target = gains.q_star if q_star is None else np.asarray(q_star, dtype=float)
    resolved = active_gains(gains.replace(q_star=target), controller)
    n = sys.n

    samples = [target] + [target + sign * np.eye(n)[i] for i in range(n) for sign in (-1.0, 1.0)]
    unforced = all(not np.any(np.asarray(sys.potential_grad(point), dtype=float)) for point in samples)
    if unforced and _is_diagonal(resolved.K_I):
        lo, hi = np.empty(n), np.empty(n)
        k_i = np.diag(resolved.K_I)
        for i in range(n):
            g, r, l, beta = sys.input_gains[i], dz.r_b[i], dz.l_b[i], dz.beta[i]
            k_z, mu, beta_comp = resolved.k_z[i], resolved.mu[i], resolved.beta[i]

            def force(e: np.ndarray) -> np.ndarray:
                v = -(k_i[i] * e + k_z * np.tanh(mu * e) + beta_comp) / g
                return g * np.where(v > r, v - r, np.where(v < l, v - l, 0.0)) + beta

            lo[i], hi[i] = _zero_interval(force)
        return ResidualBand(lo=lo, hi=hi, exact=True)

    logger.warning("residual band: coupled gains or potential forces, falling back to a multi-start root search")

    def residual(e: np.ndarray) -> np.ndarray:
        x = GeneralizedState(target + e, np.zeros(n), validate=False)
        v = controller_command(controller, sys, resolved, x)
        return sys.input_gains * actuator_torque(sys, dz, v) - np.asarray(sys.potential_grad(x.q), dtype=float)

    reach = float(np.max(np.abs(np.concatenate((dz.r_b, dz.l_b, dz.beta)))) / np.min(np.linalg.eigvalsh(resolved.K_I)))
    rng = np.random.default_rng(0)
    roots = []
    for start in rng.uniform(-2.0 * reach - 1e-3, 2.0 * reach + 1e-3, (ORACLE_STARTS, n)):
        solution = optimize.root(residual, start, method="hybr")
        if solution.success and np.max(np.abs(residual(solution.x))) < 1e-10:
            roots.append(solution.x)
    if not roots:
        raise AnalysisError("no equilibrium found by the multi-start root search")
    found = np.array(roots)
    return ResidualBand(lo=found.min(axis=0), hi=found.max(axis=0), exact=False)


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> Path:
    """Write `t,q1..qn,p1..pn,v1..vn,tau1..taun,Hd` rows with 17 significant digits."""
    n = traj.n
    header = ["t"]
    for prefix in ("q", "p", "v", "tau"):
        header.extend(f"{prefix}{i + 1}" for i in range(n))
    header.append("Hd")
    target = Path(path)
    with atomic_open(target) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for k in range(len(traj)):
            row = [traj.times[k], *traj.q[k], *traj.p[k], *traj.commands[k], *traj.torques[k], traj.energies[k]]
            writer.writerow([fmt17(value) for value in row])
    return target


def _run_job(job: SimJob) -> Trajectory:
    return integrate(job.system, job.gains, job.dead_zone, job.config, label=job.label)


def run_many(
    jobs: Sequence[SimJob], workers: int = 1, return_exceptions: bool = False
) -> List[Union[Trajectory, BaseException]]:
    """Run independent simulations, in input order, over up to `workers` processes."""
    if workers <= 1 or len(jobs) <= 1:
        results: List[Union[Trajectory, BaseException]] = []
        for job in jobs:
            try:
                results.append(_run_job(job))
            except Exception as exc:
                if not return_exceptions:
                    raise
                results.append(exc)
        return results

    logger.debug("running %d simulations over %d processes", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(_run_job, job) for job in jobs]
        results = []
        for future in futures:
            exc = future.exception()
            if exc is None:
                results.append(future.result())
            elif return_exceptions:
                results.append(exc)
            else:
                raise exc
        return results
