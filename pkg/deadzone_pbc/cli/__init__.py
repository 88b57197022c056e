import logging
import sys
from typing import Optional, Sequence, Union

from .. import __version__
from ..exceptions import (
    AnalysisError,
    ConfigError,
    DimensionError,
    IntegrationError,
    ModelError,
    ScenarioError,
    ValidationError,
)
from .commands import (
    AnalyzeCommand,
    ReportCommand,
    SimulateCommand,
    SuiteCommand,
    print_diagnostic,
    run_analyze,
    run_report,
    run_simulate,
    run_suite,
)
from .config import ArgumentConfig
from .fields import argfield
from .parser import ArgumentClass

__all__ = ["ArgumentClass", "ArgumentConfig", "DeadzonePbc", "argfield", "main"]

_ERRORS = (
    AnalysisError,
    ConfigError,
    DimensionError,
    IntegrationError,
    ModelError,
    ScenarioError,
    ValidationError,
    OSError,
)


class DeadzonePbc(ArgumentClass):
    """
    PI passivity-based control with smooth dead-zone compensation.

    Simulate scenario documents, check the real-spectrum tuning rule, tabulate steady-state
    errors and write the built-in experiment matrix.
    """

    __program__ = "deadzone-pbc"
    __version__ = __version__

    verbose: Optional[int] = argfield("-v", "--verbose", counter=True, help="more log output (-v info, -vv debug)")
    simulate: SimulateCommand = argfield(help="run scenarios and write trajectories and metrics")
    analyze: AnalyzeCommand = argfield(help="check the tuning rule and print the linearized spectrum")
    report: ReportCommand = argfield(help="tabulate a directory of metrics files")
    suite: SuiteCommand = argfield(help="write the built-in experiment matrix as scenario documents")


def _handler(verbosity: int, config: ArgumentConfig) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(config.log_format))
    package = logging.getLogger("deadzone_pbc")
    package.setLevel(logging.DEBUG if verbosity >= 2 else logging.INFO if verbosity == 1 else logging.WARNING)
    package.addHandler(handler)
    return handler


def main(argv: Optional[Union[str, Sequence[str]]] = None, config: Optional[ArgumentConfig] = None) -> int:
    """Entry point of the `deadzone-pbc` command; returns the exit status.

    Argument errors exit through argparse (status 2). Failures of the run itself print one
    diagnostic line on stderr and return 1.
    """
    config = config or ArgumentConfig()
    cli = DeadzonePbc(config=config)
    cli.parse(argv)
    handler = _handler(cli.verbose or 0, config)
    try:
        if cli.command == "simulate":
            return run_simulate(cli.simulate)
        if cli.command == "analyze":
            return run_analyze(cli.analyze)
        if cli.command == "report":
            return run_report(cli.report)
        return run_suite(cli.suite)
    except _ERRORS as exc:
        print_diagnostic(str(exc))
        return 1
    finally:
        logging.getLogger("deadzone_pbc").removeHandler(handler)
