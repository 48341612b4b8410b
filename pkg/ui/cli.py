"""
Command line interface for Ladartrack
Subcommands ``simulate``, ``track`` and ``eval`` on top of the ApplicationService.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from application import ApplicationService, ErrorKind, UseCaseResult
from application.use_cases.tracking_use_cases import POLICY_NAMES

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _absolute(path: Optional[str]) -> Optional[Path]:
    return Path(path).absolute() if path else None


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(prog='ladartrack', description="2D LADAR vehicle tracking harness")
    parser.add_argument('--log-level', default='WARNING', type=str.upper, choices=LOG_LEVELS,
                        help="logging threshold (default WARNING)")
    commands = parser.add_subparsers(dest='command', required=True, parser_class=CliArgumentParser)

    simulate = commands.add_parser('simulate', help="render a scenario into a scan log")
    simulate.add_argument('--scenario', required=True, help="scenario JSON file")
    simulate.add_argument('--out', required=True, help="output directory")
    simulate.add_argument('--seed', type=int, help="override the scenario seed")

    track = commands.add_parser('track', help="track a scan log and score it")
    track.add_argument('--out', required=True, help="output directory")
    track.add_argument('--scan-log', help="scan log (default <out>/scan_log.jsonl)")
    track.add_argument('--tracker-config', help="JSON file of tracker overrides")
    track.add_argument('--policy', choices=POLICY_NAMES, help="hypothesis policy")
    track.add_argument('--seed', type=int, help="tracker random seed")

    evaluate = commands.add_parser('eval', help="simulate a scenario and track it")
    evaluate.add_argument('--scenario', required=True, help="scenario JSON file")
    evaluate.add_argument('--out', required=True, help="output directory")
    evaluate.add_argument('--seed', type=int, help="seed for simulation and tracker")
    evaluate.add_argument('--tracker-config', help="JSON file of tracker overrides")
    evaluate.add_argument('--policy', choices=POLICY_NAMES, help="hypothesis policy")

    for sub in (simulate, track, evaluate):
        sub.add_argument('--log-level', type=str.upper, choices=LOG_LEVELS, default=argparse.SUPPRESS,
                         help=argparse.SUPPRESS)
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr, force=True)


def _summary(command: str, result: UseCaseResult) -> str:
    data = result.data
    if command == 'simulate':
        return f"wrote {data.frames} frames to {data.scan_log_path}"
    tracking = data if command == 'track' else data.tracking
    return (f"tracked {tracking.frames} frames ({tracking.track_rows} track rows) -> "
            f"{tracking.tracks_path}, {tracking.metrics_path}")


def exit_code(result: UseCaseResult) -> int:
    if result.success:
        return EXIT_OK
    return EXIT_USAGE if result.error_kind is ErrorKind.VALIDATION else EXIT_DATA


def main(argv: Optional[List[str]] = None, service: Optional[ApplicationService] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    service = service or ApplicationService()

    if args.command == 'simulate':
        result = service.simulate(_absolute(args.scenario), _absolute(args.out), args.seed)
    elif args.command == 'track':
        result = service.track(_absolute(args.out), _absolute(args.scan_log), _absolute(args.tracker_config),
                               args.policy, args.seed)
    else:
        result = service.evaluate(_absolute(args.scenario), _absolute(args.out), args.seed,
                                  _absolute(args.tracker_config), args.policy)

    for warning in result.warnings or []:
        print(f"warning: {warning}", file=sys.stderr)
    if not result.success:
        print(f"error: {result.error}", file=sys.stderr)
        return exit_code(result)
    print(_summary(args.command, result))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
