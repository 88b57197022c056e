import csv
import logging
import sys
from pathlib import Path
from typing import List, Optional, TextIO, Tuple

import numpy as np
from typing_extensions import Annotated, Doc

from ..analysis import (
    SaddleDecomposition,
    TuningReport,
    dissipation_scaling,
    linearize,
    match_spectra,
    quadratic_residuals,
    rescale_dissipation,
    saddle_decompose,
    tuning_check,
)
from ..constants import ControllerKind, Wiring
from ..exceptions import ConfigError, ScenarioError
from ..scenarios import Scenario, check_labels, dump_scenario, load_scenario, table_suites
from ..sim import SimJob, Trajectory, active_gains, run_many, write_trajectory_csv
from ..utils import atomic_open, fmt17, transform_label
from ..validators import PathValidator, RangeValidator
from .fields import argfield
from .metrics import (
    METRICS_SUFFIX,
    ReportEntry,
    collect_metrics,
    collect_report,
    summary_table,
    write_metrics,
    write_report_csv,
)
from .parser import ArgumentClass

logger = logging.getLogger(__name__)

POSITIVE = RangeValidator(min=0.0, exclusive=True)


class SimulateCommand(ArgumentClass):
    """Run scenario documents; write `<label>.csv` trajectories and `<label>.metrics.txt` metrics."""

    scenarios: Annotated[List[Path], Doc("scenario documents (JSON)")] = argfield(
        validator=PathValidator(is_file=True)
    )
    output_dir: Path = argfield("-o", "--output-dir", default=Path("."), help="directory for the output files")
    dt: Optional[float] = argfield(help="integration step in seconds", validator=POSITIVE)
    horizon: Optional[float] = argfield(help="final time in seconds", validator=POSITIVE)
    controller: Optional[List[ControllerKind]] = argfield(
        help="controller to run instead of the scenario's, repeat to compare controllers"
    )
    wiring: Optional[Wiring] = argfield(help="closed-loop wiring instead of the scenario's")
    seed: Optional[int] = argfield(help="reserved; every run is deterministic")
    jobs: int = argfield("-j", "--jobs", default=1, help="worker processes", validator=RangeValidator(min=1))


class AnalyzeCommand(ArgumentClass):
    """Check the real-spectrum tuning rule and print the saddle-point spectrum at the setpoint."""

    scenario: Annotated[Path, Doc("scenario document (JSON)")] = argfield(validator=PathValidator(is_file=True))
    controller: Optional[ControllerKind] = argfield(help="controller whose gains are analyzed")
    rescale: bool = argfield(help="also analyze the gains with the dissipation scaled by alpha")
    csv: Optional[Path] = argfield(help="write the lhs,rhs,satisfied,max_im,min_re row to this file")


class ReportCommand(ArgumentClass):
    """Tabulate the steady-state errors of a directory of metrics files."""

    suite_dir: Annotated[Path, Doc("directory of metrics files")] = argfield(validator=PathValidator(is_dir=True))
    output: Optional[Path] = argfield("-o", "--output", help="report CSV (default: <suite_dir>/report.csv)")


class SuiteCommand(ArgumentClass):
    """Write the built-in experiment matrix on the planar arm as scenario documents."""

    output_dir: Annotated[Path, Doc("directory for the scenario documents")] = argfield()
    wiring: Wiring = argfield("--wiring", default=Wiring.PHYSICAL, help="closed-loop wiring of the suite")


def print_diagnostic(message: str, stream: Optional[TextIO] = None) -> None:
    print(f"deadzone-pbc: error: {message}", file=stream or sys.stderr)


def _expand(scenario: Scenario, command: SimulateCommand) -> List[SimJob]:
    controllers = command.controller or [scenario.sim.controller]
    jobs = []
    for controller in controllers:
        if controller is ControllerKind.PIDZ and not scenario.gains.compensated:
            raise ScenarioError("compensator widths are required by the pidz controller", location="gains.K_Z")
        label = scenario.label if len(controllers) == 1 else f"{scenario.label}-{controller.value}"
        jobs.append(
            scenario.job(
                label,
                dt=command.dt,
                horizon=command.horizon,
                wiring=command.wiring,
                controller=controller,
            )
        )
    return jobs


def run_simulate(command: SimulateCommand) -> int:
    if command.seed is not None:
        logger.debug("seed %d ignored, runs are deterministic", command.seed)
    scenarios = [load_scenario(path) for path in command.scenarios]
    check_labels(scenarios)
    planned: List[Tuple[Scenario, SimJob]] = []
    for scenario in scenarios:
        for job in _expand(scenario, command):
            if job.config.wiring is Wiring.PHYSICAL and job.dead_zone is None:
                raise ScenarioError("physical wiring requires a dead_zone section", location="dead_zone")
            planned.append((scenario, job))
    stems = [transform_label(str(job.label)) for _, job in planned]
    duplicates = sorted({stem for stem in stems if stems.count(stem) > 1})
    if duplicates:
        raise ScenarioError(f"runs would overwrite each other's files: {', '.join(duplicates)}", location="label")

    results = run_many([job for _, job in planned], workers=command.jobs, return_exceptions=True)
    status = 0
    entries: List[ReportEntry] = []
    for (scenario, job), result in zip(planned, results):
        if not isinstance(result, Trajectory):
            print_diagnostic(f"{job.label}: {result}")
            status = 1
            continue
        stem = transform_label(result.label)
        csv_path = write_trajectory_csv(result, command.output_dir / f"{stem}.csv")
        metrics = collect_metrics(result, scenario.gains.q_star, case=scenario.case)
        write_metrics(metrics, command.output_dir / f"{stem}{METRICS_SUFFIX}")
        logger.info("%s: wrote %s", result.label, csv_path)
        group = scenario.case or scenario.label
        entries.append(ReportEntry(metrics.label, metrics.controller, metrics.q_star, group, metrics))
    if command.controller and len(command.controller) > 1 and entries:
        print(summary_table(entries), end="")
    return status


def analysis_block(
    report: TuningReport, dec: SaddleDecomposition, residuals: np.ndarray, similarity: float, prefix: str = ""
) -> List[str]:
    lines = [
        f"{prefix}lhs = {fmt17(report.lhs)}",
        f"{prefix}rhs = {fmt17(report.rhs)}",
        f"{prefix}lambda_min_R = {fmt17(report.lambda_min_R)}",
        f"{prefix}satisfied = {str(report.satisfied).lower()}",
        f"{prefix}alpha = {fmt17(dissipation_scaling(report))}",
        f"{prefix}real_spectrum = {str(dec.is_real).lower()}",
        f"{prefix}max_im = {fmt17(dec.max_imag)}",
        f"{prefix}min_re = {fmt17(dec.min_real)}",
        f"{prefix}similarity_deviation = {fmt17(similarity)}",
    ]
    order = np.lexsort((dec.eigenvalues.imag, dec.eigenvalues.real))
    for number, k in enumerate(order, start=1):
        value = dec.eigenvalues[k]
        lines.append(f"{prefix}lambda_{number} = {fmt17(value.real)} {fmt17(value.imag)}")
        lines.append(f"{prefix}residual_{number} = {fmt17(residuals[k])}")
    return lines


def run_analyze(command: AnalyzeCommand) -> int:
    scenario = load_scenario(command.scenario)
    controller = command.controller or scenario.sim.controller
    if controller is ControllerKind.NONE:
        raise ConfigError("analysis needs the pi or pidz controller", key="sim.controller")
    if controller is ControllerKind.PIDZ and not scenario.gains.compensated:
        raise ScenarioError("compensator widths are required by the pidz controller", location="gains.K_Z")
    system = scenario.system
    gains = active_gains(scenario.gains, controller)

    report = tuning_check(system, gains)
    dec = saddle_decompose(system, gains)
    similarity = match_spectra(dec.eigenvalues, np.linalg.eigvals(-linearize(system, gains)))
    lines = [
        f"label = {scenario.label}",
        f"controller = {controller.value}",
        "q_star = {}".format(" ".join(fmt17(value) for value in gains.q_star)),
    ]
    lines.extend(analysis_block(report, dec, quadratic_residuals(dec), similarity))

    alpha = dissipation_scaling(report)
    if command.rescale and not np.isfinite(alpha):
        logger.warning(
            "%s: R is not positive definite, no scaling satisfies the tuning rule; rescale skipped", scenario.label
        )
    elif command.rescale:
        scaled = rescale_dissipation(system, gains, alpha)
        scaled_dec = saddle_decompose(system, scaled)
        scaled_similarity = match_spectra(scaled_dec.eigenvalues, np.linalg.eigvals(-linearize(system, scaled)))
        lines.append("rescaled.K_P = {}".format(" ".join(fmt17(value) for value in scaled.K_P.reshape(-1))))
        lines.extend(
            analysis_block(
                tuning_check(system, scaled),
                scaled_dec,
                quadratic_residuals(scaled_dec),
                scaled_similarity,
                prefix="rescaled.",
            )
        )
    print("\n".join(lines))

    if command.csv is not None:
        with atomic_open(command.csv) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["label", "lhs", "rhs", "satisfied", "max_im", "min_re"])
            writer.writerow(
                [
                    scenario.label,
                    fmt17(report.lhs),
                    fmt17(report.rhs),
                    str(report.satisfied).lower(),
                    fmt17(dec.max_imag),
                    fmt17(dec.min_real),
                ]
            )
    return 0


def run_report(command: ReportCommand) -> int:
    entries = collect_report(command.suite_dir)
    target = write_report_csv(entries, command.output or command.suite_dir / "report.csv")
    print(summary_table(entries), end="")
    logger.info("wrote %s", target)
    return 0


def run_suite(command: SuiteCommand) -> int:
    for scenario in table_suites(command.wiring):
        path = dump_scenario(scenario, command.output_dir / f"{transform_label(scenario.label)}.json")
        logger.info("wrote %s", path)
    return 0
