import csv
import io
import json
from dataclasses import replace

import pydot
import pytest

from fleetbalance.cli import DEFAULT_SEED, EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main, relax_bounds
from fleetbalance.report import (
    InfeasibleError,
    build_report,
    export_dot,
    one_decimal,
    percent_reduction,
    render_csv,
    render_json,
    render_table,
    solve_plan,
)
from fleetbalance.scenario import stock_counts, with_bounds


@pytest.fixture(scope="module")
def report1(scenario1):
    return build_report(scenario1)


@pytest.fixture(scope="module")
def report2(scenario2):
    return build_report(scenario2)


def test_rounding_half_up():
    assert one_decimal(23.52941) == 23.5
    assert one_decimal(0.25) == 0.3
    assert one_decimal(2.05) == 2.1  # 2.05 is stored just below, but reports round as written
    assert one_decimal(-0.04) == -0.0


def test_percent_reduction():
    assert percent_reduction(34, 26) == 23.5
    assert percent_reduction(0, 0) == 0.0


def test_scenario1_report(report1):
    assert report1.summary() == {
        "rc": 34.0,
        "rci": 26.0,
        "incentive_paid": 20.0,
        "staff_cost": 6.0,
        "percent_reduction": 23.5,
    }
    assert report1.caps == (1, 1, 2)
    assert report1.final_stocks == (17, 10, 5, 5, 5, 18)
    assert all("matches" in n for n in report1.notes)


def test_scenario2_report_flags_reference_gap(report2):
    sm = report2.summary()
    assert sm["rc"] == 25.0
    assert sm["rci"] <= 25.0
    assert sm["rci"] == pytest.approx(sm["incentive_paid"] + sm["staff_cost"], abs=0.11)
    rci_note = [n for n in report2.notes if n.startswith("rci ")]
    assert rci_note and "differs from the reference value 17.4" in rci_note[0]
    assert any(n.startswith("rc ") and "matches" in n for n in report2.notes)


def test_balanced_scenario_costs_nothing(scenario1):
    counts = stock_counts(scenario1)
    s = with_bounds(scenario1, [(c, c) for c in counts])
    r = build_report(s)
    assert (r.rc, r.rci, r.percent_reduction) == (0.0, 0.0, 0.0)
    assert r.staff_plan.moves == ()


def test_reruns_are_byte_identical(scenario1, report1):
    assert render_json(build_report(scenario1)) == render_json(report1)


def test_renderings_agree(report1):
    doc = json.loads(render_json(report1))
    rows = list(csv.reader(io.StringIO(render_csv(report1))))
    metrics = {r[0]: float(r[1]) for r in rows[1:6]}
    table = render_table(report1)
    for key in ("rc", "rci", "incentive_paid", "staff_cost", "percent_reduction"):
        assert metrics[key] == doc[key]
    assert "rci             26.0 EUR/day" in table
    assert "reduction       23.5 %" in table
    move_rows = [r for r in rows if r and r[0] in ("ilp1", "ilp2")]
    assert len(move_rows) == len(doc["moves"]["ilp1"]) + len(doc["moves"]["ilp2"])


def test_infeasible_plan_raises_with_diagnostics(scenario1):
    n = scenario1.n_vehicles
    s = with_bounds(scenario1, [(0, n)] * 5 + [(n, n)])
    s = replace(s, vehicles=tuple(replace(v, autonomy_km=0.0) for v in s.vehicles))
    with pytest.raises(InfeasibleError) as info:
        solve_plan(s, "ilp1")
    assert len(info.value.diagnostics) == s.n_stations


def _edges(dot):
    (graph,) = pydot.graph_from_dot_data(dot)
    return graph, graph.get_edges()


def test_dot_staff_plan(scenario1, report1):
    graph, edges = _edges(export_dot(scenario1, report1.staff_plan))
    assert len([n for n in graph.get_nodes() if n.get_name().startswith("S")]) == 6
    assert len(edges) == 6
    assert {e.get("color") for e in edges} == {"red"}


def test_dot_incentive_plan(scenario1, report1):
    _, edges = _edges(export_dot(scenario1, report1.incentive_plan))
    green = [e for e in edges if e.get("color") == "green"]
    red = [e for e in edges if e.get("color") == "red"]
    assert (len(green), len(red)) == (4, 2)
    levels = sorted(int(e.get("label").strip('"').rsplit("level ", 1)[1]) for e in green)
    assert levels == [1, 2, 3, 3]


def test_dot_empty_plan(scenario1):
    graph, edges = _edges(export_dot(scenario1, None))
    assert len([n for n in graph.get_nodes() if n.get_name().startswith("S")]) == 6
    assert edges == []


def test_relax_bounds_widens_only_what_is_needed(scenario1):
    n = scenario1.n_vehicles
    s = with_bounds(scenario1, [(0, n)] * 5 + [(n + 2, n + 3)])
    relaxed, changes = relax_bounds(s)
    assert len(changes) == 1 and changes[0].startswith("station 6")
    assert relaxed.bounds(5)[0] <= n


# CLI


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_report_json(capsys):
    code, out, _ = run(capsys, "report", "--scenario", "scenario1", "--out", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert (doc["rc"], doc["rci"], doc["percent_reduction"]) == (34.0, 26.0, 23.5)


@pytest.mark.parametrize("out", ["json", "table", "csv"])
def test_cli_plan_formats(capsys, out):
    code, text, _ = run(capsys, "plan", "--scenario", "scenario1", "--model", "ilp1", "--out", out)
    assert code == EXIT_OK and text


def test_cli_plan_caps_override(capsys):
    code, out, _ = run(capsys, "plan", "--scenario", "scenario1", "--caps", "0,0,0", "--out", "json")
    assert code == EXIT_OK
    assert json.loads(out)["objective"] == 34


def test_cli_wrong_cap_count(capsys):
    code, _, err = run(capsys, "plan", "--scenario", "scenario1", "--caps", "1,1")
    assert code == EXIT_VALIDATION and "--caps" in err


def test_cli_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "report", "--scenario", str(tmp_path / "nope.json"))
    assert code == EXIT_IO


def test_cli_invalid_scenario(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _, _ = run(capsys, "report", "--scenario", str(path))
    assert code == EXIT_VALIDATION


def test_cli_validation_failure(capsys, tmp_path, scenario1):
    from fleetbalance.scenario import scenario_to_dict

    doc = scenario_to_dict(scenario1)
    doc["cost_per_km"] = -1
    path = tmp_path / "neg.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "report", "--scenario", str(path))
    assert code == EXIT_VALIDATION


def _unreachable(tmp_path, scenario1):
    from fleetbalance.scenario import scenario_to_dict

    n = scenario1.n_vehicles
    s = with_bounds(scenario1, [(0, n)] * 5 + [(n - 1, n)])
    s = replace(s, vehicles=tuple(replace(v, autonomy_km=0.0) for v in s.vehicles))
    path = tmp_path / "stuck.json"
    path.write_text(json.dumps(scenario_to_dict(s)))
    return path


def test_cli_infeasible_prints_diagnostics(capsys, tmp_path, scenario1):
    code, _, err = run(capsys, "report", "--scenario", str(_unreachable(tmp_path, scenario1)))
    assert code == EXIT_INFEASIBLE
    assert "station 6" in err and "short by" in err


def test_cli_auto_relax(capsys, tmp_path, scenario1):
    path = _unreachable(tmp_path, scenario1)
    code, out, err = run(capsys, "report", "--scenario", str(path), "--auto-relax-bounds", "--out", "json")
    assert code == EXIT_OK
    assert "auto-relax-bounds: station 6" in err
    assert json.loads(out)["rc"] == 0.0


def test_cli_simulate_seed_from_env(capsys, monkeypatch):
    argv = ["simulate", "--scenario", "scenario1", "--acceptance", "bernoulli", "--probs", "0.01,0.01,0.01",
            "--out", "json"]
    monkeypatch.setenv("FLEETBALANCE_SEED", "7")
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv, "--seed", "7")[1]
    monkeypatch.delenv("FLEETBALANCE_SEED")
    c = run(capsys, *argv, "--seed", str(DEFAULT_SEED))[1]
    d = run(capsys, *argv)[1]
    assert a == b and c == d


def test_cli_simulate_bad_seed(capsys, monkeypatch):
    monkeypatch.setenv("FLEETBALANCE_SEED", "abc")
    code, _, _ = run(capsys, "simulate", "--scenario", "scenario1", "--acceptance", "bernoulli")
    assert code == EXIT_VALIDATION


def test_cli_simulate_deterministic(capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", "scenario1", "--out", "json")
    assert code == EXIT_OK and json.loads(out)["realized_cost"] == 26.0


def test_cli_simulate_monte_carlo(capsys):
    code, out, _ = run(
        capsys, "simulate", "--scenario", "scenario1", "--acceptance", "bernoulli", "--probs", "0,0,0",
        "--trials", "5", "--out", "json",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert (doc["trials"], doc["mean"], doc["stddev"]) == (5, 34.0, 0.0)


def test_cli_simulate_bad_probability(capsys):
    code, _, _ = run(capsys, "simulate", "--scenario", "scenario1", "--acceptance", "bernoulli", "--probs", "2,0,0")
    assert code == EXIT_VALIDATION


def test_cli_feasibility_json(capsys):
    code, out, _ = run(capsys, "feasibility", "--scenario", "scenario1", "--json")
    assert code == EXIT_OK
    json.loads(out)


def test_cli_build_lp_out(capsys, tmp_path):
    target = tmp_path / "m.lp"
    code, _, _ = run(capsys, "build", "--scenario", "scenario1", "--lp-out", str(target))
    assert code == EXIT_OK
    text = target.read_text()
    assert "\nMinimize\n" in text and text.rstrip().endswith("End")


def test_cli_build_unwritable(capsys, tmp_path):
    code, _, _ = run(capsys, "build", "--scenario", "scenario1", "--lp-out", str(tmp_path / "no" / "m.lp"))
    assert code == EXIT_IO


def test_cli_export_dot(capsys, tmp_path):
    target = tmp_path / "plan.dot"
    code, _, _ = run(capsys, "export-dot", "--scenario", "scenario1", "--dot-out", str(target))
    assert code == EXIT_OK
    (graph,) = pydot.graph_from_dot_data(target.read_text())
    assert len(graph.get_edges()) == 6


def test_cli_quiet(capsys):
    code, out, _ = run(capsys, "report", "--scenario", "scenario1", "--quiet")
    assert code == EXIT_OK and out == ""


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "fleetbalance", "report", "--scenario", "scenario2", "--out", "csv"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == EXIT_OK
    assert proc.stdout.startswith("metric,value\nrc,25.0\n")


def test_cli_plan_json_schema(capsys):
    code, out, _ = run(capsys, "plan", "--scenario", "scenario1", "--model", "ilp2", "--out", "json")
    doc = json.loads(out)
    assert {"objective", "status", "moves", "incentive_paid", "staff_cost", "final_stocks"} <= set(doc)
    assert set(doc["moves"][0]) == {"vehicle", "from", "to", "executor", "km", "cost"}
    assert (doc["objective"], doc["status"]) == (26, "optimal")
