"""Command line entry point.

    cellswitch run --config scenario.json --out results/
    cellswitch sweep --config scenario.json --n 10,20,40 --out sweep/
    cellswitch gen-trace --seed 7 --slots 144 --sbs 20 --out trace.csv

Exit codes: 0 success, 2 usage or config error, 3 infeasible decision (a bug).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .netmodel import InfeasibleDecisionError, UsageError
from .traffic import FormatError, synth_trace, write_trace_csv

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _scenario(args) -> harness.Scenario:
    scn = harness.load_scenario(args.config) if args.config else harness.Scenario()
    changes = {}
    if args.policies is not None:
        changes["policies"] = tuple(args.policies.split(","))
    if args.b_th is not None:
        changes["b_th"] = args.b_th
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "no_timing", False):
        changes["record_wall_clock"] = False
    return scn.replace(**changes) if changes else scn


def cmd_run(args) -> int:
    scn = _scenario(args)
    cell = harness.build_cell(scn)
    trace = harness.build_trace(scn, cell)
    reports = harness.run_trace(scn, cell, trace)
    harness.write_run(reports, scn, args.out, trace.metadata)
    for r in reports:
        print(f"{r.policy_name:7s} energy={r.total_energy:.1f} J  saved={r.energy_saved_vs_aao:.1f} J  "
              f"co2_saved={r.co2_saved_kg:.4f} kg  candidates={r.candidates_evaluated}")
    return 0


def cmd_sweep(args) -> int:
    scn = _scenario(args)
    results = harness.sweep(args.n, scn, args.es_limit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.write_sweep(results, out / "sweep.csv")
    for n, reports in results:
        sub = out / f"n{n}"
        harness.write_run(reports, scn.replace(n_sbs=n, policies=tuple(r.policy_name for r in reports)), sub)
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_gen_trace(args) -> int:
    scn = _scenario(args)
    kinds = harness.assign_kinds(args.sbs, scn.sbs_kind_mix)
    trace = synth_trace(args.seed if args.seed is not None else scn.seed, args.slots, args.sbs, kinds,
                        scn.slot_minutes)
    write_trace_csv(trace, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--policies", help="comma separated subset of aao,es,mlc,thesis")
    common.add_argument("--b-th", type=int, dest="b_th", help="THESIS cluster-size threshold")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cellswitch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--no-timing", action="store_true", help="leave wall_clock_s empty")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="run a scenario for several SBS counts")
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--es-limit", type=int, default=harness.SWEEP_ES_LIMIT)
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-trace", parents=[common], help="write a synthetic trace CSV")
    p.add_argument("--slots", type=int, default=144)
    p.add_argument("--sbs", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InfeasibleDecisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, FormatError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
