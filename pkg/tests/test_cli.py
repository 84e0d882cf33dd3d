import json

import numpy as np
import pytest

from mdpols.cli import build_parser, run_command


@pytest.fixture
def csv_path(tmp_path):
    rng = np.random.default_rng(1)
    n = 60
    x1, x2, x3 = rng.normal(size=n), rng.uniform(size=n), rng.normal(size=n)
    y = 1 + 0.5 * x1 - x2 + rng.normal(size=n) * np.exp(0.5 * x1)
    p = tmp_path / "d.csv"
    np.savetxt(p, np.column_stack([y, x1, x2, x3]), delimiter=",", header="y,x1,x2,x3",
               comments="")
    return p


@pytest.fixture
def collinear_path(tmp_path):
    x = np.linspace(-1, 1, 20)
    p = tmp_path / "c.csv"
    np.savetxt(p, np.column_stack([x + 1, x, 2 * x]), delimiter=",", header="y,a,b",
               comments="")
    return p


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_fit_writes_json_and_table(tmp_path, csv_path):
    out = tmp_path / "o"
    rc = run_command(["fit", "--input", str(csv_path), "--response", "y", "--prior", "uniform",
                      "--xi", "3", "--out", str(out), "--dump-alpha-posterior"])
    assert rc == 0
    res = json.loads((out / "fit.json").read_text())
    assert res["columns"] == ["Intercept", "x1", "x2", "x3"]
    assert len(res["alpha"]["grid"]) == 600
    table = (out / "fit_table.csv").read_text().splitlines()
    assert table[0] == "term,coef,pSD,ES,PI_low,PI_high,OLS,SE"
    assert len(table) == 5


def test_outputs_byte_identical(tmp_path, csv_path):
    for sub, extra in [("fit", []), ("sensitivity", ["--treatment", "x1", "--seed", "3"]),
                       ("bootstrap-check", ["--B", "500", "--seed", "3"])]:
        dirs = []
        for k in range(2):
            d = tmp_path / f"{sub}{k}"
            argv = [sub, "--input", str(csv_path), "--response", "y", "--out", str(d)] + extra
            assert run_command(argv) == 0
            dirs.append(_files(d))
        assert dirs[0] == dirs[1]


def test_hc0_collinear_exit_2(capsys, collinear_path):
    rc = run_command(["fit", "--input", str(collinear_path), "--response", "y", "--model", "hc0"])
    err = capsys.readouterr().err
    assert rc == 2
    assert "ridge" in err
    assert run_command(["fit", "--input", str(collinear_path), "--response", "y"]) == 0


@pytest.mark.parametrize("argv", [
    ["fit", "--input", "x.csv", "--response", "y", "--bogus"],
    ["fit", "--response", "y"],
    ["fit", "--input", "x.csv", "--response", "y", "--prior", "gamma"],
    ["nosuch"],
    [],
])
def test_usage_errors_exit_1(capsys, argv):
    assert run_command(argv) == 1
    assert capsys.readouterr().out == ""


def test_input_errors_exit_1(capsys, tmp_path, csv_path):
    assert run_command(["fit", "--input", str(tmp_path / "none.csv"), "--response", "y"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("y,a\n1,2\n3,oops\n")
    assert run_command(["fit", "--input", str(bad), "--response", "y"]) == 1
    assert "row 3" in capsys.readouterr().err
    assert run_command(["voe", "--input", str(csv_path), "--response", "y",
                        "--treatment", "nope"]) == 1


def test_help_documents_every_flag(capsys):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        for action in p._actions:
            for flag in action.option_strings:
                assert flag in text
            assert action.help, (name, action.dest)
    assert run_command(["fit", "--help"]) == 0
    assert "--ridge-variances" in capsys.readouterr().out


def test_voe_and_sensitivity(tmp_path, csv_path):
    out = tmp_path / "v"
    assert run_command(["voe", "--input", str(csv_path), "--response", "y", "--treatment", "x1",
                        "--out", str(out)]) == 0
    lines = (out / "voe.csv").read_text().splitlines()
    assert lines[0] == "alpha,subset,ES,GIC2,beta_T,psd_T,step"
    assert len(lines) - 1 >= 600
    assert (out / "transform.json").exists()
    assert run_command(["sensitivity", "--input", str(csv_path), "--response", "y",
                        "--treatment", "x2", "--n-draws", "7", "--out", str(out)]) == 0
    assert len((out / "sensitivity.csv").read_text().splitlines()) == 8


def test_simulate_stdout(capsys, monkeypatch):
    monkeypatch.setenv("MDPOLS_THREADS", "2")
    assert run_command(["simulate", "--cell", "U01,0,20", "--reps", "100", "--seed", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "cell,model,coverage,mc_se,reps,failures"
    assert [r.split(",")[-5] for r in out[1:]] == ["mdp_cauchy", "mdp_uniform", "hc0"]
    assert run_command(["simulate", "--cell", "U01,0", "--reps", "100"]) == 1
    assert run_command(["simulate", "--cell", "U01,0,20", "--reps", "10"]) == 1


def test_fit_csv_stdout(capsys, csv_path):
    assert run_command(["fit", "--input", str(csv_path), "--response", "y", "--format", "csv",
                        "--alpha", "1", "--ridge-variances", "1,2,0.5"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[1].startswith("Intercept,")
    assert run_command(["fit", "--input", str(csv_path), "--response", "y",
                        "--ridge-variances", "1,2"]) == 1
