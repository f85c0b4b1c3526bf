"""Command-line front end.

Subcommands: ``simulate`` (event logs or per-run rate tables), ``analytic``
(sampled density/CDF tables), ``compare`` (simulation vs analytic with
pass/fail thresholds), and ``preset`` (canned multi-run experiment bundles).

Exit codes: 0 success, 1 usage or invalid parameters, 2 numeric failure,
3 acceptance failure from compare mode.
"""

import argparse
import json
import sys

from . import experiments
from .exceptions import (AcceptanceFailure, MalformedLogError, NumericError,
                         ParameterError, SpecError)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_ACCEPTANCE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; 2 is reserved for numeric
    failures here, so usage problems are rerouted to exit 1."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _add_common(p, *, with_executor=False):
    p.add_argument("--k", help="redundancy constant; sweep as '1..5' or '1,3'")
    p.add_argument("--n", help="single-cell size; sweep syntax allowed")
    p.add_argument("--side", type=int, help="grid side length (side^2 nodes)")
    p.add_argument("--range", dest="radius",
                   help="grid transmission range R; sweep syntax allowed")
    p.add_argument("--eta", help="listen-only fraction in [0,1); sweep allowed")
    p.add_argument("--tau-h", dest="tau_h", type=float, help="max interval length")
    p.add_argument("--tau-l", dest="tau_l", type=float, help="min interval length")
    p.add_argument("--horizon", type=float, help="virtual time units per run")
    p.add_argument("--runs", type=int, help="replicates per sweep point")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--warmup", type=float, help="measurement warm-up time")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--config", help="JSON file mirroring ExperimentSpec")
    if with_executor:
        p.add_argument("--executor", choices=("fast", "reference"),
                       help="event executor (default fast)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tricklesim",
                     description="Trickle dissemination: simulate, analyze, compare.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_sim = sub.add_parser("simulate", help="run the simulator")
    _add_common(p_sim, with_executor=True)

    p_ana = sub.add_parser("analytic", help="evaluate analytic tables")
    p_ana.add_argument("table", choices=experiments.TABLE_KINDS,
                       help="which sampled curve to write")
    p_ana.add_argument("--k", help="redundancy constant")
    p_ana.add_argument("--n", help="cell size")
    p_ana.add_argument("--eta", help="listen-only fraction in [0,1)")
    p_ana.add_argument("--grid", help="abscissae as start:stop:step")
    p_ana.add_argument("--out", help="output CSV path")
    p_ana.add_argument("--config", help="JSON file mirroring ExperimentSpec")

    p_cmp = sub.add_parser("compare", help="simulation vs analytic with thresholds")
    _add_common(p_cmp)
    p_cmp.add_argument("--full-scale", action="store_true",
                       help="use the tighter full-scale thresholds")

    p_pre = sub.add_parser("preset", help="run a named reproduction")
    p_pre.add_argument("name", choices=sorted(experiments.PRESETS),
                       help="preset to run")
    p_pre.add_argument("--out", help="output directory (default .)")
    p_pre.add_argument("--seed", type=int)
    p_pre.add_argument("--runs", type=int)
    p_pre.add_argument("--max-n", dest="max_n", type=int,
                       help="largest cell size for the rate sweeps")
    p_pre.add_argument("--full-scale", action="store_true",
                       help="original scale: 1000 runs, 50x50 grid")
    p_pre.add_argument("--no-plot", action="store_true",
                       help="skip the PNG figure, write CSV tables only")
    p_pre.add_argument("--k", type=int, help="override k (distribution presets)")
    p_pre.add_argument("--n", type=int, help="override n (distribution presets)")
    p_pre.add_argument("--eta", type=float,
                       help="override eta (distribution presets)")
    return parser


def _spec_from_args(args, mode: str) -> experiments.ExperimentSpec:
    raw = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecError(f"{args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise SpecError(f"{args.config}: top level must be a JSON object")
    raw["mode"] = mode
    for key in ("k", "n", "side", "radius", "eta", "tau_l", "tau_h", "horizon",
                "runs", "seed", "warmup", "out", "executor", "grid", "table"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return experiments.validate_spec(raw)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "preset":
            paths = experiments.run_preset(
                args.name, args.out or ".", seed=args.seed, runs=args.runs,
                max_n=args.max_n, full_scale=args.full_scale,
                render=not args.no_plot, k=args.k, n=args.n, eta=args.eta)
        else:
            spec = _spec_from_args(args, args.command)
            paths = experiments.run_experiment(
                spec, full_scale=getattr(args, "full_scale", False))
        for path in paths:
            print(f"wrote {path}")
        return EXIT_OK
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpecError, ParameterError, MalformedLogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        detail = f" [{exc.diagnostics}]" if getattr(exc, "diagnostics", None) else ""
        print(f"numeric failure: {exc}{detail}", file=sys.stderr)
        return EXIT_NUMERIC
    except AcceptanceFailure as exc:
        print(f"acceptance failure: {exc}", file=sys.stderr)
        return EXIT_ACCEPTANCE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
