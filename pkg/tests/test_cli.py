import csv
import io
import json

import pytest

from mjq import lambda_ideal
from mjq.cli import load_scenario, main
from mjq.randomness import Exponential, HyperExp2, ScenarioError

from conftest import scenario_path

GOOD = """
name = "mini"
servers = 2

[arrival]
rate = 0.5

[[classes]]
demand = 1
probability = 0.5
service = { family = "exponential", mean = 1.0 }

[[classes]]
demand = 2
probability = 0.5
service = { family = "deterministic", value = 0.5 }
"""

UNSTABLE = """
servers = 1

[arrival]
rate = 2.0

[[classes]]
demand = 1
probability = 1.0
service = { family = "exponential", mean = 1.0 }
"""


@pytest.fixture
def mini(tmp_path):
    p = tmp_path / "mini.toml"
    p.write_text(GOOD)
    return str(p)


def test_load_shipped_scenarios():
    sc = load_scenario(scenario_path("table1_exponential"))
    assert sc.servers == 20
    assert len(sc.classes) == 5
    assert lambda_ideal(sc) == pytest.approx(2.11, abs=0.01)
    two = load_scenario(scenario_path("table2_twoclass"))
    assert two.servers == 256
    assert two.classes[0].probability == 1e-3
    assert two.classes[0].service == Exponential(40.0)
    assert two.classes[1].service == Exponential(1.0)
    hyp = load_scenario(scenario_path("table1_hyperexp2"))
    assert hyp.classes[0].service == HyperExp2(25.0, 0.25, 0.01)
    for name in ("table1_erlang3", "table1_bounded_pareto",
                 "fig2_saturation", "cellb_template"):
        load_scenario(scenario_path(name))


def test_load_rejects_bad_probabilities(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text(GOOD.replace('probability = 0.5\nservice = { family = "d',
                              'probability = 0.4\nservice = { family = "d'))
    with pytest.raises(ScenarioError):
        load_scenario(str(p))


def test_load_renormalizes_tiny_drift(tmp_path):
    p = tmp_path / "drift.toml"
    p.write_text(GOOD.replace("probability = 0.5",
                              "probability = 0.50000000001", 1))
    sc = load_scenario(str(p))
    assert sum(c.probability for c in sc.classes) == pytest.approx(1.0,
                                                                   abs=1e-12)


def test_load_parse_and_field_errors(tmp_path):
    p = tmp_path / "broken.toml"
    p.write_text("servers = [unclosed")
    with pytest.raises(ScenarioError):
        load_scenario(str(p))
    p.write_text("servers = 2\n[arrival]\nrate = 1.0\n")
    with pytest.raises(ScenarioError, match="classes"):
        load_scenario(str(p))
    p.write_text(GOOD.replace('family = "exponential"', 'family = "zipf"'))
    with pytest.raises(ScenarioError, match="zipf"):
        load_scenario(str(p))


def test_cli_usage_errors(mini, capsys):
    assert main(["sps", mini, "--replicas", "0"]) == 2
    capsys.readouterr()
    assert main(["sps", "/nonexistent/file.toml"]) == 2
    capsys.readouterr()
    assert main(["stability", mini, "--epsilon", "-1"]) == 2
    capsys.readouterr()
    assert main(["forward", mini, "--rate", "-2"]) == 2


def test_cli_sps_tabular_and_reproducible(mini, tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out in (out1, out2):
        assert main(["sps", mini, "--replicas", "50", "--ell0", "64",
                     "--output", str(out)]) == 0
    assert out1.read_text() == out2.read_text()
    rows = list(csv.DictReader(io.StringIO(out1.read_text())))
    assert len(rows) == 50
    assert {"replica", "converged", "ell_final", "waiting_time"} <= set(
        rows[0])
    manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    assert manifest["command"] == "sps"
    assert manifest["config"]["seed"] == 0
    assert manifest["config"]["replicas"] == 50
    assert "numpy" in manifest["versions"]
    assert manifest["converged"] is True


def test_cli_sps_structured(mini, capsys):
    assert main(["sps", mini, "--replicas", "5", "--ell0", "64",
                 "--format", "structured"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["command"] == "sps"
    assert len(doc["rows"]) == 5


def test_cli_stability_and_exit_codes(mini, tmp_path, capsys):
    assert main(["stability", mini, "--ell0", "2000"]) == 0
    out = capsys.readouterr().out
    rows = list(csv.DictReader(io.StringIO(out)))
    q = {r["quantity"]: r for r in rows}
    assert float(q["gamma"]["value"]) > 0
    assert float(q["lambda_c"]["value"]) == pytest.approx(
        1.0 / float(q["gamma"]["value"]))
    # non-convergence exits 3 unless allowed
    p = tmp_path / "unstable.toml"
    p.write_text(UNSTABLE)
    assert main(["sps", str(p), "--replicas", "3", "--ell0", "16",
                 "--ell-max", "32"]) == 3
    capsys.readouterr()
    assert main(["sps", str(p), "--replicas", "3", "--ell0", "16",
                 "--ell-max", "32", "--allow-nonconverged"]) == 0


def test_cli_stability_cycle_method(capsys):
    path = scenario_path("table2_twoclass")
    assert main(["stability", path, "--method", "cycle",
                 "--cycles", "2000"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    q = {r["quantity"] for r in rows}
    assert "gamma_stderr" in q


def test_cli_forward_and_des_agree(mini, capsys):
    assert main(["forward", mini, "--n-jobs", "200"]) == 0
    fwd = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert main(["des", mini, "--n-jobs", "200"]) == 0
    des = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(fwd) == 200
    assert len(des) == 201  # trailing time-averages row
    for a, b in zip(fwd, des):
        assert abs(float(a["waiting_time"]) - float(b["waiting_time"])) \
            <= 1e-9
    assert des[-1]["horizon"] != ""


def test_cli_metrics(mini, capsys):
    assert main(["metrics", mini, "--replicas", "200", "--ell0", "64",
                 "--percentiles", "50,99"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    metrics = {r["metric"] for r in rows}
    assert {"waiting_time", "system_time", "waste", "waste_hol",
            "mean_jobs"} <= metrics
    wait_rows = [r for r in rows if r["metric"] == "waiting_time"]
    assert any(r["demand"] == "0" for r in wait_rows)  # overall row
    assert {"p50", "p99"} <= set(rows[0])


def test_cli_compare_ra(mini, capsys):
    assert main(["compare-ra", mini, "--ell0", "20000"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    by = {r["policy"]: r for r in rows}
    assert by["ra_lt_fcfs"]["converged"] == "True"
    assert float(by["ra"]["lambda_c"]) < float(by["fcfs"]["lambda_c"])


def test_cli_rate_override(mini, capsys):
    assert main(["stability", mini, "--ell0", "2000", "--rate", "0.1"]) == 0
    a = capsys.readouterr().out
    assert main(["stability", mini, "--ell0", "2000"]) == 0
    b = capsys.readouterr().out
    # gamma ignores arrivals entirely, so the tables must coincide
    assert a == b
