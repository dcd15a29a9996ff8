"""Cost reports for both models and DOT maps of relocation plans."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from fleetbalance.feasibility import station_diagnostics
from fleetbalance.incentives import derive_caps
from fleetbalance.milp import BuildMode, build_ilp1, build_ilp2
from fleetbalance.scenario import Scenario, stock_counts
from fleetbalance.solver import OPTIMAL, Plan, extract_plan, solve

REFERENCE_TOL = 1e-6


class InfeasibleError(RuntimeError):
    """A model has no feasible plan; ``diagnostics`` holds per-station detail."""

    def __init__(self, message: str, diagnostics: list[dict] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


def one_decimal(value: float) -> float:
    """Round half-up to one decimal, ignoring float noise below 1e-9."""
    return float(Decimal(repr(round(value, 9))).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def percent_reduction(rc: float, rci: float) -> float:
    if rc == 0:
        return 0.0
    return one_decimal(100.0 * (rc - rci) / rc)


def _num(value: float) -> float | int:
    value = round(value, 9)
    return int(value) if float(value).is_integer() else value


def solve_plan(
    s: Scenario,
    model: str = "ilp1",
    caps: Sequence[int] | None = None,
    *,
    mode: BuildMode | str = BuildMode.PHYSICAL,
    node_limit: int = 1_000_000,
) -> Plan:
    """Build, solve and extract one model; raises InfeasibleError when it has no plan."""
    m = build_ilp1(s, mode) if model == "ilp1" else build_ilp2(s, caps, mode)
    res = solve(m, node_limit=node_limit)
    if res.status != OPTIMAL:
        raise InfeasibleError(f"{model} is {res.status}", station_diagnostics(s))
    return extract_plan(res, m, s)


@dataclass
class Report:
    scenario: str
    mode: str
    caps: tuple[int, ...]
    rc: float
    rci: float
    incentive_paid: float
    staff_cost: float
    percent_reduction: float
    staff_plan: Plan = field(repr=False)
    incentive_plan: Plan = field(repr=False)
    notes: list[str] = field(default_factory=list)

    @property
    def final_stocks(self) -> tuple[int, ...]:
        return self.incentive_plan.final_stocks

    def summary(self) -> dict:
        return {
            "rc": one_decimal(self.rc),
            "rci": one_decimal(self.rci),
            "incentive_paid": one_decimal(self.incentive_paid),
            "staff_cost": one_decimal(self.staff_cost),
            "percent_reduction": self.percent_reduction,
        }

    def to_dict(self) -> dict:
        out = {"scenario": self.scenario, "mode": self.mode, "caps": list(self.caps)}
        out.update(self.summary())
        out["moves"] = {"ilp1": _move_rows(self.staff_plan), "ilp2": _move_rows(self.incentive_plan)}
        out["final_stocks"] = list(self.final_stocks)
        out["notes"] = list(self.notes)
        return out


def _move_rows(plan: Plan) -> list[dict]:
    return [{**mv.to_dict(), "km": _num(mv.km), "cost": _num(mv.cost)} for mv in plan.moves]


def _reference_notes(s: Scenario, values: dict) -> list[str]:
    notes = []
    for key, ref in sorted((s.reference_results or {}).items()):
        if key not in values:
            continue
        got = values[key]
        if abs(got - ref) <= REFERENCE_TOL * max(1.0, abs(ref)):
            notes.append(f"{key} {one_decimal(got)} matches the reference value")
        else:
            notes.append(f"{key} {one_decimal(got)} differs from the reference value {ref} by {one_decimal(got - ref)}")
    return notes


def build_report(
    s: Scenario,
    *,
    caps: Sequence[int] | None = None,
    mode: BuildMode | str = BuildMode.PHYSICAL,
    node_limit: int = 1_000_000,
) -> Report:
    """Solve both models and assemble the cost comparison."""
    mode = BuildMode(mode)
    caps = tuple(caps) if caps is not None else derive_caps(s.user_population, s.levels)
    staff = solve_plan(s, "ilp1", mode=mode, node_limit=node_limit)
    incentive = solve_plan(s, "ilp2", caps, mode=mode, node_limit=node_limit)
    rc, rci = staff.total_cost, incentive.total_cost
    values = {"rc": rc, "rci": rci, "incentive_paid": incentive.incentive_paid, "staff_cost": incentive.staff_cost}
    return Report(
        scenario=s.name,
        mode=mode.value,
        caps=caps,
        rc=rc,
        rci=rci,
        incentive_paid=incentive.incentive_paid,
        staff_cost=incentive.staff_cost,
        percent_reduction=percent_reduction(rc, rci),
        staff_plan=staff,
        incentive_plan=incentive,
        notes=_reference_notes(s, values),
    )


def _fmt(value: float) -> str:
    return f"{one_decimal(value):.1f}"


def render_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False)


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for key, value in report.summary().items():
        w.writerow([key, f"{value:.1f}"])
    w.writerow([])
    w.writerow(["model", "vehicle", "from", "to", "executor", "km", "cost"])
    for model, plan in (("ilp1", report.staff_plan), ("ilp2", report.incentive_plan)):
        for row in _move_rows(plan):
            w.writerow([model, row["vehicle"], row["from"], row["to"], row["executor"], row["km"], row["cost"]])
    return buf.getvalue()


def render_moves_table(plan: Plan) -> list[str]:
    lines = [f"  {'vehicle':>7}  {'from':>4}  {'to':>4}  {'executor':<9}  {'km':>6}  {'cost':>6}"]
    for row in _move_rows(plan):
        lines.append(
            f"  {row['vehicle']:>7}  {row['from']:>4}  {row['to']:>4}  {row['executor']:<9}"
            f"  {row['km']:>6}  {row['cost']:>6}"
        )
    return lines


def render_table(report: Report) -> str:
    sm = report.summary()
    lines = [
        f"scenario        {report.scenario} ({report.mode})",
        f"caps            {', '.join(map(str, report.caps))}",
        f"rc              {sm['rc']:.1f} EUR/day",
        f"rci             {sm['rci']:.1f} EUR/day",
        f"incentive_paid  {sm['incentive_paid']:.1f} EUR/day",
        f"staff_cost      {sm['staff_cost']:.1f} EUR/day",
        f"reduction       {sm['percent_reduction']:.1f} %",
        "",
        "staff-only moves",
        *render_moves_table(report.staff_plan),
        "",
        "moves with incentives",
        *render_moves_table(report.incentive_plan),
        "",
        f"final stocks    {', '.join(map(str, report.final_stocks))}",
    ]
    if report.notes:
        lines += ["", "notes", *(f"  - {n}" for n in report.notes)]
    return "\n".join(lines) + "\n"


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(s: Scenario, plan: Plan | None, title: str = "relocation") -> str:
    """Directed graph of a plan: staff moves red, user moves green."""
    start = stock_counts(s)
    final = plan.final_stocks if plan is not None else start
    lines = [f"digraph {_dot_id(title)} {{", "  node [shape=circle];"]
    for p, st in enumerate(s.stations):
        lines.append(f"  S{st.id} [label={_dot_id(f'S{st.id}: {start[p]} → {final[p]}')}];")
    for mv in plan.moves if plan is not None else ():
        label = f"EV{mv.vehicle}, {_num(mv.km)} km"
        if mv.by_user:
            label += f", level {mv.level}"
            color = "green"
        else:
            color = "red"
        lines.append(f"  S{mv.origin} -> S{mv.destination} [label={_dot_id(label)}, color={color}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
