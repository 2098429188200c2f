import csv
import io
import json

import pytest

from growthnet import cli


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = cli.main(list(argv) + ["--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


def strip_time(text):
    doc = json.loads(text)
    doc.pop("generated_at")
    return doc


@pytest.mark.parametrize("argv", [
    ["exact", "--m", "6", "--class", "1:2", "--class", "2:1"],
    ["asymptotic", "--m", "100", "--class", "100:100"],
    ["simulate", "--m", "6", "--class", "1:2", "--events", "5000", "--seed", "4"],
    ["compare", "--m", "6", "--class", "1:2", "--events", "5000"],
    ["fleet", "--route-load", "50", "--locations", "5", "--alpha", "0.8"],
    ["bottleneck", "--m", "20", "--poisson-means", "1.0", "--utilizations", "0.5", "0.3"],
])
def test_outputs_validate(tmp_path, argv):
    code, out = run(tmp_path, *argv)
    assert code == 0
    doc = load(out)
    cli.validate_output(doc)
    assert doc["method"] == argv[0]
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["config"]["method"] == argv[0]


def test_asymptotic_diagnostics(tmp_path):
    code, out = run(tmp_path, "asymptotic", "--m", "1000", "--class", "1000:1000")
    res = load(out)["result"]
    assert res["psi"] == pytest.approx(0.381966, abs=1e-6)
    assert "ell_prime_at_psi" in res["diagnostics"]
    assert res["diagnostics"]["residual_ell_form"] < 1e-9


def test_compare_rows(tmp_path):
    code, out = run(tmp_path, "compare", "--m", "2", "--class", "1:2", "--events", "1000000",
                    "--seed", "1")
    res = load(out)["result"]
    keys = [(r["method"], r["quantity"]) for r in res["rows"]]
    assert len(keys) == len(set(keys))
    for method in ("exact", "asymptotic", "simulate"):
        assert (method, "class 1") in keys
    sim = [r for r in res["rows"] if r["method"] == "simulate"]
    assert all(r["tv_vs_exact"] < 0.01 for r in sim)


def test_determinism(tmp_path):
    argv = ["simulate", "--m", "5", "--class", "1:2", "--class", "3:1", "--events", "20000",
            "--seed", "9"]
    _, out = run(tmp_path, *argv)
    first = out.read_text()
    run(tmp_path, *argv)
    second = out.read_text()
    assert strip_time(first) == strip_time(second)
    diff = [x for x, y in zip(first.splitlines(), second.splitlines()) if x != y]
    assert all('"generated_at"' in x for x in diff)
    assert json.loads(first)["result"]["seed"] == 9


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[model]\nm = 12\nclasses = [{kappa = 2.0, count = 3}]\n'
                   '[simulation]\nseed = 1\nevents = 1000\n[output]\nformat = "json"\n')
    code, out = run(tmp_path, "simulate", "--config", str(cfg), "--seed", "5")
    doc = load(out)
    assert code == 0
    assert doc["config"]["model"]["m"] == 12
    assert doc["result"]["seed"] == 5


def test_csv_pmf(tmp_path):
    code, out = run(tmp_path, "exact", "--m", "2", "--class", "1:2", "--format", "csv",
                    name="o.csv")
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert set(rows[0]) == {"distribution", "value", "probability", "log_probability"}
    pool = [float(r["probability"]) for r in rows if r["distribution"] == "pool"]
    assert pool == pytest.approx([6 / 11, 4 / 11, 1 / 11])


def test_csv_compare_and_fleet(tmp_path):
    _, out = run(tmp_path, "compare", "--m", "4", "--class", "1:2", "--events", "2000",
                 "--format", "csv", name="c.csv")
    header = out.read_text().splitlines()[0]
    assert header == "method,quantity,mean,tv_vs_exact,max_abs_vs_exact"
    _, out = run(tmp_path, "fleet", "--route-load", "100", "--locations", "10", "--alpha",
                 "0.9", "--format", "csv", name="f.csv")
    rows = dict(csv.reader(io.StringIO(out.read_text())))
    assert rows["m"] == "180"


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\nm = ")
    out = tmp_path / "never.json"
    assert cli.main(["exact", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert "malformed" in capsys.readouterr().err


@pytest.mark.parametrize("argv, code, etype", [
    (["exact", "--m", "0", "--class", "1:1"], 2, "ValidationError"),
    (["exact", "--m", "5"], 2, "ValidationError"),
    (["fleet", "--route-load", "5", "--locations", "2", "--alpha", "1.5"], 2, "DomainError"),
    (["asymptotic", "--m", "10", "--class", "10:10", "--regime", "overloaded"], 4,
     "RegimeError"),
    (["asymptotic", "--m", "1000", "--class", "1000:20"], 4, "RegimeError"),
])
def test_error_exit_codes(tmp_path, capsys, argv, code, etype):
    got, out = run(tmp_path, *argv)
    assert got == code
    doc = load(out)
    cli.validate_output(doc)
    assert doc["error"]["type"] == etype and doc["error"]["exit_code"] == code
    assert capsys.readouterr().err.startswith("growthnet: error:")


def test_capacity_exit_code(tmp_path):
    cfg = tmp_path / "cap.toml"
    cfg.write_text("[caps]\ncells = 100\n")
    got, out = run(tmp_path, "exact", "--config", str(cfg), "--m", "500", "--class", "1:2",
                   "--class", "3:2")
    assert got == 3
    assert load(out)["error"]["type"] == "CapacityError"


def test_stdout_when_no_path(capsys):
    assert cli.main(["fleet", "--route-load", "100", "--locations", "10", "--alpha", "0.9"]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["m"] == 180
