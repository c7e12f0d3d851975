"""
Command-Line Entry Point for the Choreography Toolkit

Main application entry point with:
- Argument parsing for the check / amend / project / traces / verify /
  conformance commands
- Logging setup (stderr; results go to stdout)
- Mapping of toolkit errors to exit codes and JSON diagnostics
"""

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from choreo.config import (
    APP_DESCRIPTION,
    APP_NAME,
    APP_VERSION,
    DEFAULT_EXPANSION_BUDGET,
    DEFAULT_FRESH_PREFIX,
    DEFAULT_MAX_ROUNDS,
    DEFAULT_TRACE_CAP,
    EXIT_OK,
    EXIT_PARSE_ERROR,
    EXIT_PROPERTY_FAILED,
    EXIT_RESOURCE,
    LOG_LEVEL,
)
from choreo.errors import (
    CapExceeded,
    ChoreographyError,
    EmptyChoreography,
    NoCommonSender,
    NonConvergence,
    ParseError,
)
from choreo.models import AmendConfig, CheckResult, SystemSemantics, TraceMode
from choreo.services import amend as amend_service
from choreo.services import analysis, equivalence
from choreo.services.endpoint import format_sys_label, render_system
from choreo.services.projection import project
from choreo.services.semantics import format_label, sorted_traces
from choreo.services.syntax import Choreography, parse, render
from choreo.utils import read_source, setup_logging, to_json, validate_positive, write_json

logger = logging.getLogger(__name__)


# ============================================================================
# HELPERS
# ============================================================================

def _load(path: str) -> Choreography:
    return parse(read_source(path))


def _emit(data) -> None:
    print(to_json(data))


def _diagnose(exc: Exception, extra: Optional[dict] = None) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    payload.update(extra or {})
    print(to_json(payload), file=sys.stderr)


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_check(args: argparse.Namespace) -> int:
    """
    Report connectedness violations.

    Exit 0 when connected, 1 otherwise.
    """
    c = _load(args.file)
    violations = analysis.check_all(c)
    result = CheckResult(connected=not violations, violations=violations)
    if args.advise_rename:
        result.rename_advice = analysis.advise_renames(c)
    _emit(result.to_json())
    return EXIT_OK if result.connected else EXIT_PROPERTY_FAILED


def cmd_amend(args: argparse.Namespace) -> int:
    """Print the amended choreography; optionally write the report."""
    c = _load(args.file)
    config = AmendConfig(
        max_rounds=args.max_rounds,
        expansion_budget=args.expansion_budget,
        fresh_prefix=args.fresh_prefix,
    )
    amended, report = amend_service.amend(c, config)
    print(render(amended))
    if args.emit_report:
        write_json(args.emit_report, report.to_json())
    logger.info(
        "Amended in %d rounds: %d steps, %d private interactions, %d fresh roles",
        report.rounds, len(report.steps), report.added_interactions, report.fresh_roles,
    )
    return EXIT_OK


def cmd_project(args: argparse.Namespace) -> int:
    """Print the projected system; refuse disconnected input unless forced."""
    c = _load(args.file)
    violations = analysis.check_all(c)
    if violations and not args.force:
        logger.warning("Refusing to project a choreography that is not connected (use --force)")
        print(to_json({"violations": [v.to_json() for v in violations]}), file=sys.stderr)
        return EXIT_PROPERTY_FAILED
    print(render_system(project(c)))
    return EXIT_OK


def cmd_traces(args: argparse.Namespace) -> int:
    """Print the sorted trace set as JSON."""
    c = _load(args.file)
    mode = TraceMode.WEAK if args.weak else TraceMode.STRONG
    if args.mode == "chor":
        traces = sorted_traces(equivalence.chor_traces(c, mode, args.cap), format_label)
    else:
        system = project(c)
        traces = sorted_traces(
            equivalence.sys_traces(system, SystemSemantics(args.mode), mode, args.cap),
            format_sys_label,
        )
    _emit(traces)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Compare two choreographies; exit 1 when their traces differ."""
    first = _load(args.first)
    second = _load(args.second)
    mode = TraceMode.STRONG if args.strong else TraceMode.WEAK
    result = equivalence.verify(first, second, mode, args.cap)
    _emit(result.model_dump(mode="json", include={"equivalent", "mode", "witness"}, exclude_none=True))
    return EXIT_OK if result.equivalent else EXIT_PROPERTY_FAILED


def cmd_conformance(args: argparse.Namespace) -> int:
    """Compare choreography traces with synchronous projection traces."""
    result = equivalence.proj_conformance(_load(args.file), args.cap)
    _emit(result.model_dump(mode="json", exclude_none=True))
    return EXIT_OK if result.sync_strong_equal else EXIT_PROPERTY_FAILED


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

def _positive(text: str) -> int:
    try:
        return validate_positive(int(text), "value")
    except (ValueError, ChoreographyError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cap", type=_positive, default=DEFAULT_TRACE_CAP,
                        help="maximum number of traces to enumerate")
    common.add_argument("--verbose", action="store_true", help="log at DEBUG level")

    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {APP_VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", parents=[common], help="report connectedness violations")
    check.add_argument("file", help="DSL file, or - for stdin")
    check.add_argument("--advise-rename", action="store_true",
                       help="list causality issues that renaming an operation would remove")
    check.set_defaults(handler=cmd_check)

    amend = commands.add_parser("amend", parents=[common], help="amend into a connected choreography")
    amend.add_argument("file")
    amend.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
    amend.add_argument("--expansion-budget", type=int, default=DEFAULT_EXPANSION_BUDGET)
    amend.add_argument("--fresh-prefix", default=DEFAULT_FRESH_PREFIX)
    amend.add_argument("--emit-report", metavar="PATH", help="write the amendment report as JSON")
    amend.set_defaults(handler=cmd_amend)

    projection = commands.add_parser("project", parents=[common], help="print the endpoint system")
    projection.add_argument("file")
    projection.add_argument("--force", action="store_true", help="project even if not connected")
    projection.set_defaults(handler=cmd_project)

    traces = commands.add_parser("traces", parents=[common], help="print maximal traces as JSON")
    traces.add_argument("file")
    traces.add_argument("--mode", choices=["chor", "sync", "async"], default="chor")
    traces.add_argument("--weak", action="store_true", help="erase private operations")
    traces.set_defaults(handler=cmd_traces)

    verify = commands.add_parser("verify", parents=[common], help="compare two choreographies")
    verify.add_argument("first")
    verify.add_argument("second")
    strength = verify.add_mutually_exclusive_group()
    strength.add_argument("--weak", action="store_true", help="compare weak traces (default)")
    strength.add_argument("--strong", action="store_true", help="compare strong traces")
    verify.set_defaults(handler=cmd_verify)

    conformance = commands.add_parser("conformance", parents=[common],
                                      help="check the projection against the choreography")
    conformance.add_argument("file")
    conformance.set_defaults(handler=cmd_conformance)

    return parser


# ============================================================================
# ENTRY POINT
# ============================================================================

def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 ok, 1 property fails, 2 parse or usage error, 3 resource limit
    """
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else LOG_LEVEL)

    try:
        return args.handler(args)
    except ParseError as exc:
        _diagnose(exc, {"line": exc.line, "column": exc.column})
        return EXIT_PARSE_ERROR
    except ValidationError as exc:
        _diagnose(exc, {"details": json.loads(exc.json())})
        return EXIT_PARSE_ERROR
    except NonConvergence as exc:
        _diagnose(exc, {"residual": [v.to_json() for v in exc.residual]})
        return EXIT_RESOURCE
    except (CapExceeded, NoCommonSender) as exc:
        _diagnose(exc)
        return EXIT_RESOURCE
    except EmptyChoreography as exc:
        _diagnose(exc)
        return EXIT_PROPERTY_FAILED
    except ChoreographyError as exc:
        _diagnose(exc)
        return EXIT_PARSE_ERROR
    except OSError as exc:
        _diagnose(exc)
        return EXIT_PARSE_ERROR


if __name__ == "__main__":
    sys.exit(main())
