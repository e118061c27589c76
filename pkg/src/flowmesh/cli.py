"""Command-line interface: run scenarios, validate inputs, import DAX files."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dax import DEFAULT_REFERENCE_MIPS, import_dax
from .errors import SimulationError
from .inputs import parse_config, parse_topology, parse_workflows, workflows_to_json
from .scenario import load_bundle, run_bundle
from .workflow import validate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowmesh",
        description="Deterministic workflow simulation over graph-topology "
                    "fog infrastructures")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario bundle")
    run.add_argument("--topology", required=True, help="Topology.json path")
    run.add_argument("--workflows", required=True, help="Workflows.json path")
    run.add_argument("--config", help="Config.json path (defaults apply)")
    run.add_argument("--trace", help="write the event trace to this file")
    run.add_argument("--report", help="write the run report to this file")
    run.add_argument("--format", choices=("json", "csv"), default="json",
                     help="report format (default json)")
    run.add_argument("--seed", type=int, help="override the config seed")

    check = sub.add_parser("validate", help="validate input documents")
    check.add_argument("paths", nargs="+", help="documents to validate; the "
                       "kind is detected from the root tag")

    dax = sub.add_parser("import-dax",
                         help="convert a DAX XML workflow to Workflows.json")
    dax.add_argument("path", help="DAX file")
    dax.add_argument("--ref-mips", type=float, default=DEFAULT_REFERENCE_MIPS,
                     help="reference MIPS for runtime-to-instructions "
                          "conversion (default %(default)s)")
    dax.add_argument("-o", "--output", help="output path (default stdout)")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.topology, args.workflows, args.config,
                         seed_override=args.seed)
    report, _ = run_bundle(bundle, trace_path=args.trace)
    text = report.to_json() if args.format == "json" else report.tasks_csv()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    summary = ", ".join(f"{k}={v}" for k, v in report.counts.items())
    print(f"simulated {report.total_time!r}s: {summary}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
            document = json.loads(text)
            if "workflows" in document:
                workflows, _ = parse_workflows(document)
                for workflow in workflows:
                    validate(workflow)
                kind = "workflows"
            elif "fog_devices" in document:
                parse_topology(document)
                kind = "topology"
            else:
                parse_config(document)
                kind = "config"
        except (SimulationError, OSError, json.JSONDecodeError) as exc:
            print(f"{path}: INVALID: {exc}", file=sys.stderr)
            status = EXIT_INVALID
        else:
            print(f"{path}: OK ({kind})")
    return status


def _cmd_import_dax(args: argparse.Namespace) -> int:
    workflow = import_dax(Path(args.path).read_text(encoding="utf-8"),
                          reference_mips=args.ref_mips)
    text = json.dumps(workflows_to_json([workflow]), indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "import-dax":
            return _cmd_import_dax(args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
