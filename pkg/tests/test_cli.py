from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from conftest import interval_fn, star_fn
from nodalot.cli import main, sweep_beta_rows


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def write(tmp_path, f, name="f.json"):
    path = tmp_path / name
    path.write_text(json.dumps(f.to_json()))
    return str(path)


def test_minimize_interval(capsys):
    code, out = run(capsys, "minimize", "--domain", "interval", "--length", "1", "--cinf", "1", "--c1", "1", "--n", "1", "--p", "1")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.25, rel=1e-15)


def test_minimize_even_star(capsys):
    code, out = run(capsys, "minimize", "--domain", "star", "--edges", "2,2,2,2", "--cinf", "1", "--c1", "1", "--n", "1", "--p", "1")
    data = json.loads(out)
    assert code == 0
    assert data["value"] == pytest.approx(0.125, rel=1e-15)
    assert data["effective_N"] == 2


def test_minimize_odd_circle_is_a_parity_error(capsys):
    code, out = run(capsys, "minimize", "--domain", "circle", "--cinf", "1", "--c1", "1", "--n", "3", "--p", "1")
    assert code == 2
    assert json.loads(out)["error"]["kind"] == "parity"


def test_minimize_infeasible_is_invalid_input(capsys):
    code, out = run(capsys, "minimize", "--domain", "interval", "--length", "0.1", "--cinf", "1", "--c1", "1", "--n", "1")
    assert code == 2
    assert "error" in json.loads(out)


def test_minimize_writes_the_minimizer(capsys, tmp_path):
    path = tmp_path / "fstar.json"
    code, out = run(capsys, "minimize", "--domain", "interval", "--cinf", "2", "--c1", "1", "--n", "2", "--p", "2", "--f-star", str(path))
    assert code == 0
    code, out2 = run(capsys, "wasserstein", "--input", str(path), "--p", "2")
    assert json.loads(out2)["value"] == pytest.approx(json.loads(out)["value"], rel=1e-12)


def test_wasserstein_and_plan(capsys, tmp_path):
    path = write(tmp_path, interval_fn(1, (0, 0.4, 0.5), (0.5, 0.7, -1)))
    code, out = run(capsys, "wasserstein", "--input", path, "--p", "1", "--plan")
    data = json.loads(out)
    assert code == 0
    assert data["value"] == pytest.approx(0.08, rel=1e-12)
    assert "plan" in data


def test_wasserstein_imbalanced_input_is_rejected(capsys, tmp_path):
    path = write(tmp_path, interval_fn(1, (0, 0.4, 1), (0.5, 0.7, -1)))
    code, out = run(capsys, "wasserstein", "--input", path)
    assert code == 2
    assert json.loads(out)["error"]["kind"] == "imbalance"


def test_unreadable_input(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _ = run(capsys, "wasserstein", "--input", str(bad))
    assert code == 2


def test_reduce(capsys, tmp_path):
    path = write(tmp_path, interval_fn(1, (0, 0.4, 0.5), (0.5, 0.7, -1)))
    code, out = run(capsys, "reduce", "--input", path, "--mode", "both")
    data = json.loads(out)
    assert code == 0
    assert data["concentrate"]["output_cost"] == pytest.approx(0.04, rel=1e-12)
    assert data["shift"]["adjacent"] is True


def test_oracle(capsys, tmp_path):
    path = write(tmp_path, star_fn((1, 1, 1), (0, 0, 0.4, 1.0), (1, 0, 0.2, -1.0), (2, 0, 0.2, -1.0)))
    code, out = run(capsys, "oracle", "--input", path, "--p", "1", "--h", "1e-3")
    assert code == 0
    assert abs(json.loads(out)["value"] - 0.12) <= 3e-3


def test_verify(capsys):
    code, out = run(capsys, "verify", "--trials", "5", "--seed", "1", "--checks", "bound,reduction", "--domain-kinds", "interval,circle")
    data = json.loads(out)
    assert code == 0 and data["ok"]
    assert data["min_bound_slack"] >= -1e-8


def test_verify_zero_trials(capsys):
    code, out = run(capsys, "verify", "--trials", "0")
    assert code == 0 and json.loads(out)["ok"]


def test_verify_unknown_check(capsys):
    code, _ = run(capsys, "verify", "--checks", "bogus")
    assert code == 2


@pytest.mark.parametrize("beta, expected", [(0.0, 0.25), (0.1, 0.21), (0.25, 0.1875)])
def test_sweep_values(beta, expected):
    rows = {round(r[0], 12): r[1] for r in sweep_beta_rows(1, 21)}
    assert rows[beta] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_sweep_endpoints_and_monotonicity(n):
    rows = sweep_beta_rows(n, 21)
    values = [r[1] for r in rows]
    assert values[0] == pytest.approx(1 / (4 * n), rel=1e-10)
    assert values[-1] == pytest.approx(1 / (4 * (n + 1 / 3)), rel=1e-10)
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(rows[0][3], rel=1e-10)
    assert values[-1] == pytest.approx(rows[0][2], rel=1e-10)


def test_sweep_csv(capsys):
    code, out = run(capsys, "sweep-beta", "--n", "1", "--points", "3")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["beta", "short_edge", "long_edge_odd", "interval"]
    assert [float(v) for v in rows[1]] == [0.0, 0.25, 0.1875, 0.25]
    assert float(rows[3][1]) == pytest.approx(0.1875, rel=1e-15)


def test_sweep_rejects_bad_arguments(capsys):
    code, _ = run(capsys, "sweep-beta", "--n", "0")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep-beta", "--n", "2", "--points", "7"],
        ["verify", "--trials", "4", "--seed", "11", "--domain-kinds", "interval,star"],
        ["minimize", "--domain", "star", "--edges", "1,1,1", "--cinf", "1", "--c1", "1", "--n", "2", "--method", "numeric", "--seed", "3"],
    ],
)
def test_outputs_are_byte_identical(argv):
    cmd = [sys.executable, "-m", "nodalot", *argv]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a
