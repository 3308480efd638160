import json
import math
import subprocess
import sys

import pytest

from cubicwave import cli, spectrum
from cubicwave.errors import BracketFailure


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", "--n", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["c_n"] == pytest.approx(9.616283, rel=1e-6)
    meta = doc["metadata"]
    assert set(meta) >= {"code_version", "rel_tol", "abs_tol", "truncation", "config"}
    assert meta["config"] == {"n": 1}


def test_table_single_row(capsys):
    code, out, _ = run(capsys, "table", "--n-max", "0")
    rows = json.loads(out)["result"]
    assert code == 0 and len(rows) == 1
    assert rows[0]["c_n"] == pytest.approx(math.sqrt(2), rel=1e-8)


def test_output_is_deterministic(capsys):
    a = run(capsys, "table", "--n-max", "2")[1]
    b = run(capsys, "table", "--n-max", "2")[1]
    assert a == b


def test_nine_significant_digits(capsys):
    doc = json.loads(run(capsys, "predict", "--n", "1")[1])
    assert repr(doc["result"]["c_pred"]) == "9.99113486"


@pytest.mark.parametrize("argv", [
    ["solve", "--n", "-1"],
    ["table", "--n-max", "11"],
    ["certify", "--grid", "99"],
    ["solve", "--n", "1", "--rel-tol", "0"],
    ["solve", "--n", "1", "--abs-tol", "-1e-9"],
    ["exterior", "--n", "0"],
    ["exterior"],
    ["bogus"],
])
def test_usage_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        cli.run(argv)
    assert exc.value.code == 2


def test_numerical_failure_exit_1(capsys, monkeypatch):
    def fail(*a, **k):
        raise BracketFailure("no sign change", trace=[(1.0, 0.5)])
    monkeypatch.setattr(spectrum, "find_c_n", fail)
    code, out, err = run(capsys, "solve", "--n", "3")
    assert code == 1 and out == ""
    diag = json.loads(err)
    assert diag["error"] == "BracketFailure"
    assert diag["diagnostics"]["trace"] == [[1.0, 0.5]]


def test_io_failure_exit_1(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "predict", "--n", "0", "--out", str(blocker))
    assert code == 1
    assert json.loads(err)["error"] == "IOError"


def test_out_directory_files(capsys, tmp_path):
    code, _, _ = run(capsys, "stability", "--n", "1", "--out", str(tmp_path))
    assert code == 0
    assert {p.name for p in tmp_path.iterdir()} == {"stability_n1.json", "eigenfunctions_n1.csv"}
    run(capsys, "solve", "--n", "0", "--out", str(tmp_path))
    assert (tmp_path / "profile_n0.csv").read_text().startswith("x,f,b,d,phi,G")


def test_csv_format(capsys):
    code, out, _ = run(capsys, "figure1", "--points", "3", "--format", "csv")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "c,B,D,bbar,dbar"
    assert len(lines) == 7


def test_exterior_by_b(capsys):
    doc = json.loads(run(capsys, "exterior", "--b", "3", "--direction", "out")[1])
    assert doc["result"]["outcome"] == "singular_at"


def test_appendix_odd(capsys):
    doc = json.loads(run(capsys, "appendix", "--k", "0", "--odd")[1])
    assert doc["result"]["n"] == 1


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "cubicwave.cli", "predict", "--n", "0"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["result"]["n"] == 0
