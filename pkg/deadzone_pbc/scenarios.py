import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
from numpy.typing import ArrayLike

from .actuator import DeadZone
from .constants import ControllerKind, Wiring
from .control import PbcGains
from .document import ScenarioDocument, parse_document, render_document, validate_document
from .exceptions import ConfigError, DimensionError, ScenarioError
from .plant import ConstantMap, GeneralizedState, MechanicalSystem, constant_system
from .sim import SimConfig, SimJob, Trajectory, integrate
from .utils import as_vector, atomic_open

logger = logging.getLogger(__name__)

# 2-DoF planar manipulator
A1 = 0.1547
A2 = 0.0111
B = 0.0168
PLANAR_INPUT_GAINS = (1.0, 0.6)
PLANAR_DAMPING = (1.5964, 0.6971)

# Experiment matrix
PI_GAINS = {"K_P": [1.5, 1.0], "K_I": [5.0, 3.0]}
CASE_GAINS = {
    "I": {"K_Z": [0.13, 0.35], "beta_comp": [0.0, 0.0]},
    "II": {"K_Z": [0.7, 1.0], "beta_comp": [0.0, 0.0]},
    "III": {"K_Z": [0.13, 0.35], "beta_comp": [-0.016, -0.2]},
}
CASE_SETPOINT = (0.6, 0.8)
DEAD_ZONE_HALF_WIDTHS = (0.13, 0.35)
DEAD_ZONE_OFFSET = (-0.016, -0.2)


@dataclass
class Scenario:
    """A ready-to-run experiment: plant, optional dead-zone, gains and run parameters."""

    label: str
    system: MechanicalSystem
    gains: PbcGains
    sim: SimConfig
    dead_zone: Optional[DeadZone] = None
    case: Optional[str] = None

    def configured(self, **overrides: Any) -> SimConfig:
        changes = {key: value for key, value in overrides.items() if value is not None}
        return self.sim.replace(**changes) if changes else self.sim

    def job(self, label: Optional[str] = None, **overrides: Any) -> SimJob:
        return SimJob(self.system, self.gains, self.dead_zone, self.configured(**overrides), label or self.label)

    def run(self, label: Optional[str] = None, **overrides: Any) -> Trajectory:
        job = self.job(label, **overrides)
        return integrate(job.system, job.gains, job.dead_zone, job.config, label=job.label)


def _planar_mass(q: np.ndarray) -> np.ndarray:
    c = np.cos(q[1])
    return np.array([[A1 + A2 + 2.0 * B * c, A2 + B * c], [A2 + B * c, A2]])


def _planar_mass_grad(q: np.ndarray) -> np.ndarray:
    s = np.sin(q[1])
    grad = np.zeros((2, 2, 2))
    grad[1] = [[-2.0 * B * s, -B * s], [-B * s, 0.0]]
    return grad


def _no_potential(q: np.ndarray) -> float:
    return 0.0


def _no_potential_grad(q: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(q))


def planar_manipulator_2dof(offset: ArrayLike = 0.0) -> MechanicalSystem:
    """Two-link planar arm moving in the horizontal plane (U = 0).

    M(q2) = [[a1 + a2 + 2b cos q2, a2 + b cos q2], [a2 + b cos q2, a2]] with a1 = 0.1547,
    a2 = 0.0111, b = 0.0168; G = diag(1, 0.6); D = diag(1.5964, 0.6971).
    """
    beta = as_vector(offset, 2, "offset")
    return MechanicalSystem(
        2,
        mass=_planar_mass,
        mass_grad=_planar_mass_grad,
        potential=_no_potential,
        potential_grad=_no_potential_grad,
        damping=ConstantMap(np.diag(PLANAR_DAMPING)),
        input_matrix=PLANAR_INPUT_GAINS,
        offset=beta,
        description={"builtin": "planar2dof", "offset": beta.tolist()},
    )


def suite_case_setpoints() -> Dict[str, np.ndarray]:
    return {
        "a": np.array([0.6, 0.8]),
        "b": np.array([-0.6, -0.8]),
        "c": np.array([-0.4, 0.7]),
        "d": np.array([0.4, -0.7]),
        "e": np.array([0.5, -0.5]),
    }


def table_dead_zone() -> DeadZone:
    return DeadZone.symmetric(DEAD_ZONE_HALF_WIDTHS, beta=DEAD_ZONE_OFFSET)


def case_gains(case: str, q_star: ArrayLike = CASE_SETPOINT, mu: ArrayLike = 10.0) -> PbcGains:
    try:
        extra = CASE_GAINS[case]
    except KeyError:
        raise ConfigError(f"unknown case '{case}', expected one of {', '.join(CASE_GAINS)}", key="case") from None
    return PbcGains(q_star=q_star, mu=mu, **PI_GAINS, **extra)


def table_suites(wiring: Union[Wiring, str] = Wiring.PHYSICAL) -> List[Scenario]:
    """The experiment matrix on the planar arm.

    Five setpoints (cases a to e) under the plain PI and the compensated controller with the
    Case I gains, then the three compensator cases I, II and III at q_star = (0.6, 0.8). The
    true dead-zone has half-widths (0.13, 0.35) and offset (-0.016, -0.2).
    """
    system = planar_manipulator_2dof()
    dead_zone = table_dead_zone()
    start = GeneralizedState.zeros(2)
    scenarios = []
    for case, q_star in suite_case_setpoints().items():
        for controller in (ControllerKind.PI, ControllerKind.PIDZ):
            scenarios.append(
                Scenario(
                    label=f"setpoint-{case}-{controller.value}",
                    system=system,
                    gains=case_gains("I", q_star),
                    sim=SimConfig(start, wiring=wiring, controller=controller),
                    dead_zone=dead_zone,
                    case=case,
                )
            )
    for case in CASE_GAINS:
        scenarios.append(
            Scenario(
                label=f"compensator-{case}",
                system=system,
                gains=case_gains(case),
                sim=SimConfig(start, wiring=wiring, controller=ControllerKind.PIDZ),
                dead_zone=dead_zone,
                case=case,
            )
        )
    check_labels(scenarios)
    return scenarios


def check_labels(scenarios: Iterable[Scenario]) -> None:
    seen = set()
    for scenario in scenarios:
        if scenario.label in seen:
            raise ScenarioError(f"duplicate label '{scenario.label}'", location="label")
        seen.add(scenario.label)


def scenario_document(scenario: Scenario) -> Dict[str, Any]:
    if scenario.system.description is None:
        raise ScenarioError("system has no document description", location="system")
    data: Dict[str, Any] = {
        "label": scenario.label,
        "system": scenario.system.description,
        "gains": scenario.gains.description(),
        "sim": scenario.sim.description(),
    }
    if scenario.case is not None:
        data["case"] = scenario.case
    if scenario.dead_zone is not None:
        data["dead_zone"] = scenario.dead_zone.description()
    return validate_document(data).model_dump(mode="json", exclude_none=True)


def _section(location: str, exc: Union[ConfigError, DimensionError]) -> ScenarioError:
    key = exc.key if isinstance(exc, ConfigError) else exc.name
    if key is None:
        key = location
    elif "." not in key:
        key = f"{location}.{key}"
    return ScenarioError(str(exc.args[0]), location=key)


def _build_system(document: ScenarioDocument) -> MechanicalSystem:
    section = document.system
    n = len(document.gains.q_star)
    try:
        if section.builtin is not None:
            system = planar_manipulator_2dof(0.0 if section.offset is None else section.offset)
            if n != system.n:
                raise DimensionError(f"expected {system.n} entries, found {n}", name="gains.q_star")
            return system
        assert section.mass is not None and section.damping is not None
        return constant_system(
            mass=section.mass,
            damping=section.damping,
            input_gains=1.0 if section.input_matrix is None else section.input_matrix,
            offset=0.0 if section.offset is None else section.offset,
            stiffness=section.stiffness,
            n=n,
        )
    except (ConfigError, DimensionError) as exc:
        raise _section("system", exc) from None


def scenario_from_document(document: Union[ScenarioDocument, Dict[str, Any]]) -> Scenario:
    if not isinstance(document, ScenarioDocument):
        document = validate_document(document)
    system = _build_system(document)
    n = system.n

    dead_zone = None
    if document.dead_zone is not None:
        section = document.dead_zone
        try:
            dead_zone = DeadZone(section.r_b, section.l_b, section.beta)
        except (ConfigError, DimensionError) as exc:
            raise _section("dead_zone", exc) from None
        if dead_zone.n != n:
            raise ScenarioError(f"expected {n} channels, found {dead_zone.n}", location="dead_zone.r_b")

    gains_section = document.gains
    if gains_section.K_Z is None and document.sim.controller is ControllerKind.PIDZ:
        raise ScenarioError("compensator widths are required by the pidz controller", location="gains.K_Z")
    try:
        gains = PbcGains(**gains_section.model_dump(), compensated=gains_section.K_Z is not None)
    except (ConfigError, DimensionError) as exc:
        raise _section("gains", exc) from None

    sim_section = document.sim
    x0 = np.zeros(2 * n) if sim_section.x0 is None else np.asarray(sim_section.x0, dtype=float)
    if x0.shape != (2 * n,):
        raise ScenarioError(f"expected {2 * n} entries col(q, p), found {x0.size}", location="sim.x0")
    if sim_section.wiring is Wiring.PHYSICAL and dead_zone is None:
        raise ScenarioError("physical wiring requires a dead_zone section", location="dead_zone")
    try:
        config = SimConfig(
            GeneralizedState.from_vector(x0),
            dt=sim_section.dt,
            horizon=sim_section.horizon,
            wiring=sim_section.wiring,
            controller=sim_section.controller,
            record_stride=sim_section.record_stride,
        )
    except (ConfigError, DimensionError) as exc:
        raise _section("sim", exc) from None

    return Scenario(
        label=document.label, system=system, gains=gains, sim=config, dead_zone=dead_zone, case=document.case
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", location=str(path)) from None
    scenario = scenario_from_document(parse_document(text))
    logger.debug("loaded scenario %s from %s", scenario.label, path)
    return scenario


def dump_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    document = validate_document(scenario_document(scenario))
    target = Path(path)
    with atomic_open(target, newline=None) as handle:
        handle.write(render_document(document))
    return target
