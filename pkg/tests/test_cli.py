import csv
import io
import json

import numpy as np
import pytest
from click.testing import CliRunner

from droprobust.cli import main
from droprobust.core import make_dataset
from droprobust.scores import ADDITIVE_ONE_EXACT, additive_audit


@pytest.fixture
def runner():
    return CliRunner()


def _generate(runner, tmp_path, scenario, *args):
    out = tmp_path / f"{scenario}.csv"
    result = runner.invoke(
        main, ["generate", scenario, "--out", str(out), *args]
    )
    assert result.exit_code == 0, result.output
    return out


def test_generate_writes_csv_and_sidecar(runner, tmp_path):
    out = _generate(runner, tmp_path, "simpsons")
    rows = out.read_text().splitlines()
    assert rows[0] == "x,y"
    assert len(rows) == 1011
    sidecar = json.loads((tmp_path / "simpsons.csv.meta.json").read_text())
    assert sidecar["scenario"] == "simpsons"
    assert len(sidecar["known_set"]) == 10
    assert isinstance(sidecar["seed"], int)


def test_generate_deterministic_bytes(runner, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a = _generate(runner, tmp_path / "a", "one_outlier")
    b = _generate(runner, tmp_path / "b", "one_outlier")
    assert a.read_bytes() == b.read_bytes()


def test_generate_prop1_exact_rows(runner, tmp_path):
    out = _generate(runner, tmp_path, "prop1_example", "--param", "lam=1")
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["x1", "x2", "y"]
    assert [float(v) for v in rows[1]] == [1.0, 0.0, 1.0]
    assert [float(v) for v in rows[2]] == [3.0, 4.0, 2.0]
    assert [float(v) for v in rows[3]] == [5.0, 6.0, 3.0]


def test_audit_one_outlier_table_and_exit_code(runner, tmp_path):
    out = _generate(runner, tmp_path, "one_outlier")
    result = runner.invoke(main, [
        "audit", str(out), "-y", "y", "--coef", "x",
        "--alpha", str(1 / 1001), "--methods", "all",
        "--known-set", str(out) + ".meta.json",
    ])
    assert result.exit_code == 2
    assert "failure_with_rerun" in result.output
    assert "no_failure" in result.output
    # greedy rows show an em dash for the predicted column
    assert "—" in result.output


def test_audit_round_trips_in_process_numbers(runner, tmp_path):
    out = _generate(runner, tmp_path, "one_outlier")
    result = runner.invoke(main, [
        "audit", str(out), "-y", "y", "--alpha", str(1 / 1001),
        "--methods", "add1e", "--format", "json",
    ])
    assert result.exit_code == 2
    doc = json.loads(result.output)
    (report,) = doc["reports"]

    # independent in-process run on the serialized data
    rows = np.loadtxt(str(out), delimiter=",", skiprows=1)
    ds = make_dataset(rows[:, :1], rows[:, 1], ["x"], add_intercept=True)
    audit = additive_audit(ds, 0, 1 / 1001, ADDITIVE_ONE_EXACT)
    assert report["predicted_estimate"] == audit.predicted_estimate
    assert report["refit_estimate"] == audit.refit_estimate
    assert tuple(report["dropped_indices"]) == audit.drop.indices


def test_audit_json_and_csv_agree(runner, tmp_path):
    out = _generate(runner, tmp_path, "one_outlier")
    args = ["audit", str(out), "-y", "y", "--alpha", str(1 / 1001),
            "--methods", "amip,add1e"]
    js = runner.invoke(main, args + ["--format", "json"])
    cs = runner.invoke(main, args + ["--format", "csv"])
    doc = json.loads(js.output)
    rows = list(csv.DictReader(io.StringIO(cs.output)))
    for jrep, crow in zip(doc["reports"], rows):
        assert jrep["method"] == crow["method"]
        assert jrep["refit_estimate"] == float(crow["refit_estimate"])
        assert jrep["predicted_estimate"] == float(crow["predicted_estimate"])


def test_audit_exit_zero_when_no_flip_found(runner, tmp_path):
    out = _generate(runner, tmp_path, "one_outlier")
    result = runner.invoke(main, [
        "audit", str(out), "-y", "y", "--alpha", str(1 / 1001),
        "--methods", "amip",
    ])
    assert result.exit_code == 0


def test_audit_usage_errors_exit_one(runner, tmp_path):
    out = _generate(runner, tmp_path, "one_outlier")
    budget_zero = runner.invoke(main, [
        "audit", str(out), "-y", "y", "--alpha", "1e-9",
    ])
    assert budget_zero.exit_code == 1
    assert "nothing to audit" in budget_zero.output

    missing = runner.invoke(main, ["audit", "/nonexistent.csv", "-y", "y"])
    assert missing.exit_code == 1

    bad_col = runner.invoke(main, ["audit", str(out), "-y", "nope"])
    assert bad_col.exit_code == 1
    assert "nope" in bad_col.output


def test_audit_non_numeric_cell_reports_column(runner, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1.0,2.0\nfoo,3.0\n4.0,5.0\n")
    result = runner.invoke(main, ["audit", str(path), "-y", "y"])
    assert result.exit_code == 1
    assert "'x'" in result.output and "foo" in result.output


def test_audit_oracle_agrees_with_greedy_on_thinned_simpsons(runner, tmp_path):
    out = _generate(runner, tmp_path, "simpsons",
                    "--param", "n_bulk=36", "--param", "n_outlier=4")
    result = runner.invoke(main, [
        "audit", str(out), "-y", "y", "--alpha", "0.1",
        "--methods", "oracle,greedy-1e", "--format", "json",
    ])
    assert result.exit_code == 2
    doc = json.loads(result.output)
    by_method = {r["method"]: r for r in doc["reports"]}
    oracle_set = set(by_method["oracle"]["dropped_indices"])
    greedy_set = set(by_method["greedy_one_exact"]["dropped_indices"])
    assert oracle_set == greedy_set == {36, 37, 38, 39}


def test_diagnose_outputs(runner, tmp_path):
    out = _generate(runner, tmp_path, "one_outlier")
    prefix = tmp_path / "diag"
    result = runner.invoke(main, [
        "diagnose", str(out), "-y", "y", "--out", str(prefix),
    ])
    assert result.exit_code == 0
    rows = list(csv.DictReader(io.StringIO((tmp_path / "diag.csv").read_text())))
    assert list(rows[0]) == ["index", "leverage", "residual", "influence",
                             "one_exact"]
    leverages = [float(r["leverage"]) for r in rows]
    assert int(rows[int(np.argmax(leverages))]["index"]) == 1000
    doc = json.loads((tmp_path / "diag.json").read_text())
    for n, m, h, b in [(p["n"], p["m"], p["h_nm"], p["bound"])
                       for p in doc["pairs"]]:
        assert abs(h) <= b + 1e-10


def test_benchmark_csv(runner):
    result = runner.invoke(main, [
        "benchmark", "--n", "200", "--p", "3", "--alpha", "0.05",
        "--methods", "amip,add1e", "--repeats", "3",
    ])
    assert result.exit_code == 0
    rows = list(csv.reader(io.StringIO(result.output)))
    assert rows[0] == ["method", "N", "P", "alpha", "seconds", "repeats"]
    assert len(rows) == 3
    assert all(float(r[4]) > 0 for r in rows[1:])
