import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike

from ..analysis import transient_metrics
from ..constants import MISSING_CELL, NORMALIZATION, ControllerKind, Wiring
from ..document import parse_document
from ..exceptions import ConfigError, ScenarioError
from ..sim import Trajectory, steady_state_error
from ..utils import atomic_open, fmt17

logger = logging.getLogger(__name__)

METRICS_SUFFIX = ".metrics.txt"


@dataclass
class RunMetrics:
    """Figures of one simulated run, as written to `<label>.metrics.txt`."""

    label: str
    controller: ControllerKind
    wiring: Wiring
    q_star: np.ndarray
    error: np.ndarray
    absolute: np.ndarray
    overshoot: np.ndarray
    settling_time: np.ndarray
    oscillations: np.ndarray
    settled: bool
    case: Optional[str] = None

    @property
    def n(self) -> int:
        return int(self.q_star.size)


@dataclass
class ReportEntry:
    label: str
    controller: ControllerKind
    q_star: Optional[np.ndarray]
    case: Optional[str] = None
    metrics: Optional[RunMetrics] = None


def collect_metrics(traj: Trajectory, q_star: ArrayLike, case: Optional[str] = None) -> RunMetrics:
    q_star = np.asarray(q_star, dtype=float)
    error = steady_state_error(traj, q_star)
    transient = transient_metrics(traj, q_star)
    return RunMetrics(
        label=traj.label,
        controller=ControllerKind(traj.metadata.get("controller", ControllerKind.PIDZ)),
        wiring=Wiring(traj.metadata.get("wiring", Wiring.IDEAL)),
        q_star=q_star,
        error=error.values,
        absolute=error.absolute,
        overshoot=transient.overshoot,
        settling_time=transient.settling_time,
        oscillations=transient.oscillations,
        settled=error.settled,
        case=case,
    )


def _join(values: Iterable[float]) -> str:
    return " ".join(fmt17(value) for value in values)


def write_metrics(metrics: RunMetrics, path: Union[str, Path]) -> Path:
    lines: List[Tuple[str, str]] = [("label", metrics.label)]
    if metrics.case is not None:
        lines.append(("case", metrics.case))
    lines.extend(
        [
            ("controller", metrics.controller.value),
            ("wiring", metrics.wiring.value),
            ("normalization", NORMALIZATION),
            ("q_star", _join(metrics.q_star)),
            ("steady_state_error", _join(metrics.error)),
            ("absolute", " ".join(str(bool(flag)).lower() for flag in metrics.absolute)),
            ("overshoot", _join(metrics.overshoot)),
            ("settling_time", _join(metrics.settling_time)),
            ("oscillations", " ".join(str(int(count)) for count in metrics.oscillations)),
            ("settled", str(metrics.settled).lower()),
        ]
    )
    target = Path(path)
    with atomic_open(target) as handle:
        for key, value in lines:
            handle.write(f"{key} = {value}\n")
    return target


_REQUIRED_KEYS = (
    "label",
    "controller",
    "wiring",
    "q_star",
    "steady_state_error",
    "absolute",
    "overshoot",
    "settling_time",
    "oscillations",
    "settled",
)


def read_metrics(path: Union[str, Path]) -> RunMetrics:
    """Parse a `key = value` metrics file; malformed content raises `ScenarioError` naming the line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioError(f"cannot read metrics: {exc}", location=str(path)) from None
    values: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ScenarioError("expected 'key = value'", location=f"{path.name}: line {number}")
        values[key.strip()] = value.strip()
    missing = [key for key in _REQUIRED_KEYS if key not in values]
    if missing:
        raise ScenarioError(f"missing keys {', '.join(missing)}", location=path.name)

    def floats(key: str) -> np.ndarray:
        try:
            return np.array([float(item) for item in values[key].split()])
        except ValueError:
            raise ScenarioError("expected numbers", location=f"{path.name}: {key}") from None

    try:
        controller = ControllerKind(values["controller"])
        wiring = Wiring(values["wiring"])
    except ValueError as exc:
        raise ScenarioError(str(exc), location=path.name) from None
    return RunMetrics(
        label=values["label"],
        controller=controller,
        wiring=wiring,
        q_star=floats("q_star"),
        error=floats("steady_state_error"),
        absolute=np.array([item == "true" for item in values["absolute"].split()]),
        overshoot=floats("overshoot"),
        settling_time=floats("settling_time"),
        oscillations=floats("oscillations").astype(int),
        settled=values["settled"] == "true",
        case=values.get("case"),
    )


def error_cell(metrics: Optional[RunMetrics]) -> str:
    if metrics is None:
        return MISSING_CELL
    return "/".join(f"{value:.2f}" for value in metrics.error)


def _position(q_star: Optional[np.ndarray]) -> str:
    if q_star is None:
        return MISSING_CELL
    return "[{}]".format(", ".join(f"{value:g}" for value in q_star))


def _group_key(entry: ReportEntry) -> str:
    return entry.case or entry.label


def split_layouts(entries: Sequence[ReportEntry]) -> Tuple[List[ReportEntry], List[ReportEntry]]:
    # Cases with a PI run compare u_pi and u_pidz side by side; the rest are listed per link
    compared = {_group_key(entry) for entry in entries if entry.controller is ControllerKind.PI}
    setpoint = [entry for entry in entries if _group_key(entry) in compared]
    return setpoint, [entry for entry in entries if _group_key(entry) not in compared]


def setpoint_table(entries: Sequence[ReportEntry]) -> Tuple[List[str], List[List[str]]]:
    groups: Dict[str, Dict[ControllerKind, ReportEntry]] = {}
    for entry in sorted(entries, key=lambda item: item.label):
        groups.setdefault(_group_key(entry), {})[entry.controller] = entry
    rows = []
    for case, runs in groups.items():
        first = next(iter(runs.values()))
        pi, pidz = runs.get(ControllerKind.PI), runs.get(ControllerKind.PIDZ)
        rows.append(
            [
                case,
                _position(first.q_star),
                error_cell(pi.metrics if pi else None),
                error_cell(pidz.metrics if pidz else None),
            ]
        )
    return ["Case", "Position", "u_pi", "u_pidz"], rows


def compensator_table(entries: Sequence[ReportEntry]) -> Tuple[List[str], List[List[str]]]:
    n = max((entry.q_star.size for entry in entries if entry.q_star is not None), default=0)
    header = ["Case"] + [f"%Link{i + 1}" for i in range(n)]
    rows = []
    for entry in sorted(entries, key=lambda item: item.label):
        if entry.metrics is None:
            cells = [MISSING_CELL] * n
        else:
            cells = [f"{value:.2f}" for value in entry.metrics.error]
        cells += [MISSING_CELL] * (n - len(cells))
        rows.append([_group_key(entry)] + cells)
    return header, rows


def render_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(row[i])) for row in [header, *rows]) for i in range(len(header))]
    lines = []
    for number, row in enumerate([header, *rows]):
        lines.append("  ".join(str(cell).ljust(width) for cell, width in zip(row, widths)).rstrip())
        if number == 0:
            lines.append("  ".join("-" * width for width in widths))
    return "\n".join(lines) + "\n"


def summary_table(entries: Sequence[ReportEntry]) -> str:
    """Aligned comparison tables followed by the normalization and wiring strings."""
    setpoint, compensator = split_layouts(entries)
    tables = []
    if setpoint:
        tables.append(render_table(*setpoint_table(setpoint)))
    if compensator:
        tables.append(render_table(*compensator_table(compensator)))
    wirings = sorted({entry.metrics.wiring.value for entry in entries if entry.metrics is not None})
    footer = f"normalization = {NORMALIZATION}\nwiring = {', '.join(wirings) or MISSING_CELL}\n"
    return "\n".join(tables) + footer


def write_report_csv(entries: Sequence[ReportEntry], path: Union[str, Path]) -> Path:
    """One row per label: identity columns, then the per-link steady-state errors."""
    n = max((entry.q_star.size for entry in entries if entry.q_star is not None), default=0)
    header = ["label", "case", "controller", "wiring", "settled"]
    header.extend(f"q_star{i + 1}" for i in range(n))
    header.extend(f"error{i + 1}" for i in range(n))
    target = Path(path)
    with atomic_open(target) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for entry in sorted(entries, key=lambda item: item.label):
            metrics = entry.metrics
            q_star = [fmt17(value) for value in entry.q_star] if entry.q_star is not None else []
            row = [entry.label, entry.case or "", entry.controller.value]
            if metrics is None:
                row.extend([MISSING_CELL, MISSING_CELL])
                errors = [MISSING_CELL] * n
            else:
                row.extend([metrics.wiring.value, str(metrics.settled).lower()])
                errors = [fmt17(value) for value in metrics.error]
            q_star += [MISSING_CELL] * (n - len(q_star))
            errors += [MISSING_CELL] * (n - len(errors))
            writer.writerow(row + q_star + errors)
    return target


def _covered(label: str, measured: Dict[str, RunMetrics]) -> bool:
    # `simulate --controller a --controller b` writes `<label>-a` and `<label>-b`
    return label in measured or any(f"{label}-{kind.value}" in measured for kind in ControllerKind)


def collect_report(directory: Union[str, Path]) -> List[ReportEntry]:
    """Report entries for every metrics file in `directory`, sorted by label.

    Scenario documents found next to them name the expected runs; one without metrics becomes an
    empty row and a warning.
    """
    directory = Path(directory)
    measured: Dict[str, RunMetrics] = {}
    for path in sorted(directory.glob(f"*{METRICS_SUFFIX}")):
        metrics = read_metrics(path)
        measured[metrics.label] = metrics
    entries = [
        ReportEntry(metrics.label, metrics.controller, metrics.q_star, metrics.case, metrics)
        for metrics in measured.values()
    ]
    for path in sorted(directory.glob("*.json")):
        try:
            document = parse_document(path.read_text(encoding="utf-8"))
        except (ScenarioError, OSError, UnicodeDecodeError) as exc:
            logger.warning("%s: not a scenario document, skipped (%s)", path.name, exc)
            continue
        if _covered(document.label, measured):
            continue
        logger.warning("%s: no metrics file, row left empty", document.label)
        entries.append(
            ReportEntry(
                document.label,
                document.sim.controller,
                np.asarray(document.gains.q_star, dtype=float),
                document.case,
            )
        )
    if not entries:
        raise ConfigError("no metrics files or scenario documents found", key=str(directory))
    return sorted(entries, key=lambda entry: entry.label)
