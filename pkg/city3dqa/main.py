"""Command-line entry point: `city3dqa <subcommand> ...`."""

import argparse
import logging
import sys
import time
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .commands import answer_space, baseline, evaluate, generate, graph, ingest, query, split, stats
from .config import CliConfig, Settings, load_settings
from .exceptions import City3DQAError, ConfigurationError, UsageError, describe_validation_error
from .services.logger import RunLog, configure_logging

logger = logging.getLogger(__name__)

COMMANDS = {m.NAME: m for m in (ingest, graph, generate, split, evaluate, stats, query, answer_space, baseline)}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEGRADED = 3


class CliParser(argparse.ArgumentParser):
    """Argument parser that raises on bad usage instead of exiting."""

    def error(self, message: str):
        """Print the usage line and raise `UsageError`."""
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def common_flags() -> argparse.ArgumentParser:
    """Flags shared by every subcommand."""
    common = CliParser(add_help=False)
    common.add_argument("--config", type=Path, help="env-style settings file used instead of .env")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING (default) or ERROR")
    common.add_argument("-q", "--quiet", action="store_true", help="errors only, no progress bars")
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--jobs", type=int, help="worker threads (default 1); outputs do not depend on it")
    return common


def build_parser() -> CliParser:
    """The top-level parser with one subparser per command."""
    parser = CliParser(
        prog="city3dqa",
        description="City-scale 3D question answering: scene graphs, template QA generation and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    common = common_flags()
    for module in COMMANDS.values():
        module.register(subparsers, common)
    return parser


def _parameters(args: argparse.Namespace) -> dict:
    """JSON-safe view of the parsed flags for the run ledger."""

    def plain(value):
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, list | tuple):
            return [plain(v) for v in value]
        return value

    return {key: plain(value) for key, value in sorted(vars(args).items())}


def _record(settings: Settings | None, args: argparse.Namespace, status: int, start: float, error: str) -> None:
    if settings is None or not settings.RUN_LOG_URL:
        return
    RunLog.add_run(
        settings.RUN_LOG_URL,
        args.command,
        _parameters(args),
        status,
        start,
        error=error,
        retention_days=settings.RUN_LOG_RETENTION_DAYS,
    )


def dispatch(argv: list[str] | None = None) -> int:
    """Parse `argv`, run the subcommand and return its exit code.

    Exit codes: 0 success, 1 usage error, 2 data or validation error,
    3 paraphrase requests failed and template questions were kept.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK

    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    start = time.time()
    settings = None
    status, error = EXIT_OK, ""
    try:
        try:
            settings = load_settings(args.config)
        except ValidationError as exc:
            raise ConfigurationError(f"settings: {describe_validation_error(exc)}") from None
        configure_logging("ERROR" if args.quiet else args.log_level or settings.LOG_LEVEL)
        try:
            config = CliConfig.from_sources(settings, args)
        except ValidationError as exc:
            raise UsageError(f"{parser.prog} {args.command}: error: {describe_validation_error(exc)}") from None
        status = COMMANDS[args.command].run(args, config)
    except UsageError as exc:
        status, error = EXIT_USAGE, str(exc)
        print(exc, file=sys.stderr)
    except (City3DQAError, OSError) as exc:
        status, error = EXIT_DATA, str(exc)
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)

    _record(settings, args, status, start, error)
    return status


def main() -> None:
    """Console-script entry point."""
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
