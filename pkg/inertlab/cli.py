"""InertLab - Command-line front end
Parses group and automorphism files, runs the engine and prints reports.
"""

import argparse
import importlib
import json
import logging
import sys
from typing import Dict, List, Optional, Sequence, TextIO

from dotenv import load_dotenv

# Load environment variables FIRST - before importing Config
load_dotenv()
from .config import Config  # noqa: E402
from .errors import (AmbientMismatchError, GroupSpecError, HypothesisError, InertLabError,
                     InvalidAutomorphismError, NotContainedError, StabilityError, UsageError)
from .report import FORMATS, Report

logger = logging.getLogger('InertLab.CLI')

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

COMMAND_MODULES = [
    'inertlab.commands.eexp',
    'inertlab.commands.inertia',
    'inertlab.commands.comm',
    'inertlab.commands.decompose',
    'inertlab.commands.scenario',
]


def configure_logging():
    """Log to stderr, and to LOG_FILE when it is set; stdout is reserved for reports."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if Config.LOG_FILE:
        handlers.append(logging.FileHandler(Config.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, Config.LOG_LEVEL.upper(), logging.WARNING),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers
    )


class LabParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so run_command can return a status."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


class InertLab:
    """The command-line application: a parser tree plus the loaded command modules."""

    def __init__(self, out: Optional[TextIO] = None, err: Optional[TextIO] = None):
        self.config = Config
        self.out = out or sys.stdout
        self.err = err or sys.stderr
        self.version = "1.0.0"
        self.commands: Dict[str, object] = {}

        # Options every subcommand accepts after its name
        self.common = LabParser(add_help=False)
        self.common.add_argument('--budget', type=int, default=None,
                                 help=f"omega copies sampled (default {Config.BUDGET})")
        self.common.add_argument('--seed', type=int, default=None,
                                 help=f"random seed (default {Config.SEED})")
        self.common.add_argument('--format', choices=FORMATS, default=None,
                                 help=f"report format (default {Config.FORMAT})")

        self.parser = LabParser(prog='inertlab', description="Inertial automorphisms of abelian groups")
        self.parser.add_argument('--version', action='version', version=f"inertlab {self.version}")
        self.subparsers = self.parser.add_subparsers(dest='command', metavar='<subcommand>',
                                                     parser_class=LabParser)

    def load_commands(self):
        """Import every command module and let it register its subcommands."""
        for name in COMMAND_MODULES:
            try:
                module = importlib.import_module(name)
                module.setup(self)
                logger.info(f"Loaded command module: {name}")
            except Exception as e:
                logger.error(f"Failed to load command module {name}: {e}")

    def add_command(self, command) -> None:
        command.register(self.subparsers)
        self.commands[type(command).__name__] = command

    def add_parser(self, subparsers, name: str, help: str) -> argparse.ArgumentParser:
        """A subcommand parser that also accepts the common options."""
        return subparsers.add_parser(name, help=help, description=help, parents=[self.common])

    def run(self, argv: Sequence[str]) -> int:
        fmt = None
        try:
            args = self.parser.parse_args(list(argv))
            fmt = getattr(args, 'format', None)
            handler = getattr(args, 'handler', None)
            if handler is None:
                raise UsageError(f"{self.parser.prog}: a subcommand is required")
            report = handler(args)
        except SystemExit as done:
            # --help and --version
            return int(done.code or 0)
        except Exception as error:
            return self.on_command_error(error, fmt)
        self.out.write(report.render(fmt) + '\n')
        return EXIT_PASS if report.passed else EXIT_FAIL

    def on_command_error(self, error: Exception, fmt: Optional[str] = None) -> int:
        """Global error handler: one report per error class, then an exit status."""
        if isinstance(error, UsageError):
            report, status = self._error_report("Usage", str(error)), EXIT_USAGE
        elif isinstance(error, GroupSpecError):
            report, status = self._error_report("Parse Error", str(error)), EXIT_USAGE
            report.data.update({'token': error.token, 'position': error.position})
        elif isinstance(error, (OSError, json.JSONDecodeError)):
            report, status = self._error_report("File Error", str(error)), EXIT_USAGE
        elif isinstance(error, HypothesisError):
            report, status = self._error_report("Hypotheses Not Met", str(error)), EXIT_FAIL
        elif isinstance(error, InvalidAutomorphismError):
            report, status = self._error_report("Not An Automorphism", str(error)), EXIT_FAIL
            report.data['failures'] = error.failures
        elif isinstance(error, (StabilityError, AmbientMismatchError, NotContainedError)):
            report, status = self._error_report(type(error).__name__, str(error)), EXIT_FAIL
        elif isinstance(error, InertLabError):
            report, status = self._error_report("Error", str(error)), EXIT_FAIL
        else:
            logger.exception(f"Command error: {error}")
            report, status = self._error_report("Error", "An unexpected error occurred."), EXIT_FAIL
        logger.debug("exit status %d after %s", status, type(error).__name__)
        self.err.write(report.render(fmt) + '\n')
        return status

    def _error_report(self, title: str, description: str) -> Report:
        """Create a standardized error report."""
        return Report(f"error: {title}", description, failed=True)


def run_command(argv: Sequence[str], out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> int:
    lab = InertLab(out, err)
    lab.load_commands()
    return lab.run(argv)


def main():
    """Entry point for the CLI."""
    configure_logging()
    sys.exit(run_command(sys.argv[1:]))


if __name__ == '__main__':
    main()
