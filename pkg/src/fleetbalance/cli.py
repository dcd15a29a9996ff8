"""Command-line entry point: ``fleetbalance <command> --scenario FILE ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from fleetbalance.feasibility import Executor, feasibility_matrix, station_diagnostics
from fleetbalance.incentives import (
    BERNOULLI,
    DETERMINISTIC,
    AcceptanceModel,
    ProcessError,
    derive_caps,
    monte_carlo,
    run_rounds,
)
from fleetbalance.milp import BuildMode, build_ilp1, build_ilp2, model_dimensions, write_lp
from fleetbalance.report import (
    InfeasibleError,
    build_report,
    export_dot,
    one_decimal,
    render_csv,
    render_json,
    render_moves_table,
    render_table,
    solve_plan,
)
from fleetbalance.scenario import Scenario, ScenarioError, load_scenario, validate_scenario, with_bounds
from fleetbalance.solver import PlanError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

DEFAULT_SEED = 20240101


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _emit(args, text: str) -> None:
    if not args.quiet:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load(args) -> Scenario:
    try:
        s = load_scenario(args.scenario)
    except OSError as exc:
        raise CliError(f"cannot read scenario: {exc}", EXIT_IO)
    except ScenarioError as exc:
        raise CliError(f"invalid scenario: {exc}", EXIT_VALIDATION)
    problems = validate_scenario(s)
    if problems:
        text = "\n".join(f"  {v.code}: {v.message}" for v in problems)
        raise CliError(f"scenario failed validation:\n{text}", EXIT_VALIDATION)
    return s


def relax_bounds(s: Scenario) -> tuple[Scenario, list[str]]:
    """Widen per-station bounds to the reachable stock interval."""
    bounds, changes = [], []
    for p, diag in enumerate(station_diagnostics(s)):
        lo, hi = s.bounds(p)
        new_lo = lo - diag["deficit"]
        new_hi = hi + diag["excess"]
        if (new_lo, new_hi) != (lo, hi):
            changes.append(f"station {diag['station']}: bounds [{lo}, {hi}] -> [{new_lo}, {new_hi}]")
        bounds.append((new_lo, new_hi))
    return with_bounds(s, bounds), changes


def _with_relaxation(args, s: Scenario, action):
    try:
        return action(s)
    except InfeasibleError:
        if not getattr(args, "auto_relax_bounds", False):
            raise
        relaxed, changes = relax_bounds(s)
        if not changes:
            raise
        for line in changes:
            print(f"auto-relax-bounds: {line}", file=sys.stderr)
        return action(relaxed)


def _caps(args, s: Scenario) -> tuple[int, ...]:
    caps = args.caps if args.caps is not None else derive_caps(s.user_population, s.levels)
    if len(caps) != len(s.levels):
        raise CliError(f"--caps needs {len(s.levels)} values", EXIT_VALIDATION)
    return caps


def cmd_plan(args) -> int:
    s = _load(args)
    caps = _caps(args, s) if args.model == "ilp2" else None
    plan = _with_relaxation(
        args, s, lambda sc: solve_plan(sc, args.model, caps, mode=args.mode, node_limit=args.seednodes)
    )
    doc = {"objective": round(plan.total_cost, 9), "status": "optimal", **plan.to_dict()}
    if args.out == "json":
        _emit(args, json.dumps(doc, indent=2))
    elif args.out == "csv":
        rows = ["vehicle,from,to,executor,km,cost"]
        rows += [f"{m['vehicle']},{m['from']},{m['to']},{m['executor']},{m['km']},{m['cost']}" for m in doc["moves"]]
        _emit(args, "\n".join(rows))
    else:
        lines = [
            f"objective       {one_decimal(plan.total_cost):.1f} EUR/day ({args.model}, {args.mode})",
            f"incentive_paid  {one_decimal(plan.incentive_paid):.1f}",
            f"staff_cost      {one_decimal(plan.staff_cost):.1f}",
            *render_moves_table(plan),
            f"final stocks    {', '.join(map(str, plan.final_stocks))}",
        ]
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_report(args) -> int:
    s = _load(args)
    caps = _caps(args, s)
    report = _with_relaxation(
        args, s, lambda sc: build_report(sc, caps=caps, mode=args.mode, node_limit=args.seednodes)
    )
    render = {"json": render_json, "csv": render_csv, "table": render_table}[args.out]
    _emit(args, render(report))
    return EXIT_OK


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FLEETBALANCE_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"FLEETBALANCE_SEED must be an integer, got {env!r}", EXIT_VALIDATION)
    return DEFAULT_SEED


def cmd_simulate(args) -> int:
    s = _load(args)
    if args.acceptance == "deterministic":
        acc = AcceptanceModel(DETERMINISTIC, seed=_seed(args))
    else:
        probs = args.probs if args.probs is not None else tuple(lv.acceptance_rate for lv in s.levels)
        if len(probs) != len(s.levels):
            raise CliError(f"--probs needs {len(s.levels)} values", EXIT_VALIDATION)
        try:
            acc = AcceptanceModel(BERNOULLI, probs, args.defect, _seed(args))
        except ValueError as exc:
            raise CliError(str(exc), EXIT_VALIDATION)
    try:
        if args.trials > 1:
            summary = monte_carlo(s, acc, args.trials, mode=args.mode, workers=args.workers)
            doc = summary.to_dict()
            if args.out == "table":
                lines = [f"{k:<10} {v}" for k, v in doc.items()]
                _emit(args, "\n".join(lines))
            else:
                _emit(args, json.dumps(doc, indent=2))
            return EXIT_OK
        log, plan = run_rounds(s, acc, mode=args.mode)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_VALIDATION)
    except ProcessError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE)
    doc = log.to_dict()
    doc["moves"] = plan.to_dict()["moves"]
    if args.out == "table":
        lines = [f"{'level':>5} {'rate':>5} {'offered':>7} {'accepted':>8} {'defected':>8} {'filled':>6}"]
        for r in log.rounds:
            lines.append(
                f"{r.level:>5} {r.rate:>5} {r.offered:>7} {r.acceptances:>8} {r.defections:>8} {r.filled:>6}"
            )
        lines += [
            f"staff fallback      {log.staff_fallback}",
            f"realized cost       {one_decimal(log.realized_cost):.1f} EUR/day",
            f"realized incentives {one_decimal(log.realized_incentives):.1f} EUR/day",
        ]
        _emit(args, "\n".join(lines))
    else:
        _emit(args, json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_feasibility(args) -> int:
    s = _load(args)
    table = feasibility_matrix(s)
    ids = [st.id for st in s.stations]
    if args.out == "json" or args.json:
        doc = {
            "stations": ids,
            "relaxation": s.relaxation.value,
            "arc_counts": {ex.value: table.per_arc[ex].tolist() for ex in Executor},
            "diagnostics": station_diagnostics(s),
        }
        _emit(args, json.dumps(doc, indent=2))
        return EXIT_OK
    lines = []
    for ex in Executor:
        lines.append(f"{ex.value} executable vehicles per arc (row = origin)")
        lines.append("      " + "".join(f"{'S' + str(i):>5}" for i in ids))
        for p, i in enumerate(ids):
            lines.append(f"{'S' + str(i):>5} " + "".join(f"{int(v):>5}" for v in table.per_arc[ex][p]))
        lines.append("")
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_build(args) -> int:
    s = _load(args)
    if args.model == "ilp1":
        model = build_ilp1(s, args.mode)
    else:
        model = build_ilp2(s, _caps(args, s), args.mode)
    text = write_lp(model)
    dims = model_dimensions(model)
    if args.lp_out:
        try:
            Path(args.lp_out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.lp_out}: {exc}", EXIT_IO)
        _emit(args, json.dumps(dims) if args.out == "json" else " ".join(f"{k}={v}" for k, v in dims.items()))
    else:
        _emit(args, text)
    return EXIT_OK


def cmd_export_dot(args) -> int:
    s = _load(args)
    caps = _caps(args, s) if args.model == "ilp2" else None
    plan = _with_relaxation(
        args, s, lambda sc: solve_plan(sc, args.model, caps, mode=args.mode, node_limit=args.seednodes)
    )
    text = export_dot(s, plan, title=f"{s.name} {args.model}")
    if args.dot_out:
        try:
            Path(args.dot_out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.dot_out}: {exc}", EXIT_IO)
    else:
        _emit(args, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file, or a bundled name like scenario1")
    common.add_argument("--out", choices=["json", "table", "csv"], default="table")
    common.add_argument("--mode", choices=[m.value for m in BuildMode], default=BuildMode.PHYSICAL.value)
    common.add_argument("--quiet", action="store_true", help="suppress normal output")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--caps", type=_int_list, default=None, help="user level caps, e.g. 1,1,2")
    solving.add_argument("--seednodes", type=int, default=1_000_000, help="branch-and-bound node budget")
    solving.add_argument(
        "--auto-relax-bounds",
        action="store_true",
        help="on infeasibility, widen station bounds to the reachable interval and retry (changes are printed)",
    )

    parser = argparse.ArgumentParser(prog="fleetbalance", description="Vehicle relocation planning for station-based sharing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common, solving], help="solve one model and print the relocation plan")
    p.add_argument("--model", choices=["ilp1", "ilp2"], default="ilp2")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("report", parents=[common, solving], help="compare staff-only and incentive costs")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", parents=[common], help="simulate the escalating bid process")
    p.add_argument("--acceptance", choices=["deterministic", "bernoulli"], default="deterministic")
    p.add_argument("--probs", type=_float_list, default=None, help="acceptance probability per level")
    p.add_argument("--defect", type=float, default=0.0, help="probability an accepting user defects")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1, help="processes for Monte Carlo trials")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("feasibility", parents=[common], help="battery feasibility per arc")
    p.add_argument("--json", action="store_true", help="same as --out json")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("build", parents=[common], help="write a model in LP format")
    p.add_argument("--model", choices=["ilp1", "ilp2"], default="ilp1")
    p.add_argument("--caps", type=_int_list, default=None)
    p.add_argument("--lp-out", default=None, help="write the LP text here instead of stdout")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("export-dot", parents=[common, solving], help="relocation map in DOT format")
    p.add_argument("--model", choices=["ilp1", "ilp2"], default="ilp2")
    p.add_argument("--dot-out", default=None)
    p.set_defaults(func=cmd_export_dot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            if d["deficit"] or d["excess"]:
                print(
                    f"  station {d['station']}: stock {d['initial']}, bounds [{d['n_min']}, {d['n_max']}],"
                    f" short by {d['deficit']}, over by {d['excess']}",
                    file=sys.stderr,
                )
        return EXIT_INFEASIBLE
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
