"""Command line: ``cloudbroker {simulate,sweep,validate} CONFIG``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .engine import SimulationError, Simulation
from .experiment import CellError, emit_report, grid_from_document, run_sweep
from .scenario import ScenarioError, load_scenario


def _read_document(path):
    if path == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"{path}: {exc.strerror}") from None
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error: {exc}") from None


def _print_summary(scenario, sim, metrics, out):
    print(f"scenario {scenario.name}: broker={scenario.broker_policy} lb={scenario.lb_policy} "
          f"dcs={'+'.join(f'R{r}' for r in scenario.dc_placement)} seed={scenario.seed}", file=out)
    print(f"events drained at {sim.clock} ms", file=out)
    print(f"{'scope':<11}{'id':>6}{'requests':>14}{'avg_ms':>12}{'min_ms':>12}{'max_ms':>12}", file=out)
    for row in metrics.summarize():
        cells = ["-" if row[k] is None else row[k] for k in ("requests", "avg_ms", "min_ms", "max_ms")]
        print(f"{row['scope']:<11}{str(row['id']):>6}{cells[0]:>14}{cells[1]:>12}{cells[2]:>12}{cells[3]:>12}",
              file=out)


def cmd_validate(args):
    document = _read_document(args.config)
    scenario = load_scenario(document)
    grid = grid_from_document(scenario, document)
    print(f"ok: {scenario.name}, {len(scenario.user_bases)} user bases, "
          f"{len(scenario.dc_placement)} data centers, sweep of {len(grid)} cells")
    return 0


def cmd_simulate(args):
    scenario = load_scenario(_read_document(args.config))
    sim = Simulation(scenario)
    metrics = sim.run()
    _print_summary(scenario, sim, metrics, sys.stdout)
    return 0


def cmd_sweep(args):
    document = _read_document(args.config)
    grid = grid_from_document(load_scenario(document), document)
    results = run_sweep(grid, parallelism=args.parallel)
    emit_report(results, args.out if args.out else sys.stdout)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cloudbroker",
        description="Simulate service-broker and VM load-balancing policies across cloud regions.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and print its summary")
    p.add_argument("config", help="JSON scenario document ('-' for stdin)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run the policy grid and write a CSV report")
    p.add_argument("config", help="JSON scenario document ('-' for stdin)")
    p.add_argument("--parallel", type=int, default=None,
                   help="worker processes (default: $CLOUDBROKER_PARALLEL or 1)")
    p.add_argument("--out", help="CSV destination (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a scenario document")
    p.add_argument("config", help="JSON scenario document ('-' for stdin)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, CellError) as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
