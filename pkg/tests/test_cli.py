import csv
import io
import json
import subprocess
import sys

import pytest

from pcbound.cli import EXIT_CERT, EXIT_CONSISTENCY, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bound_single_order(capsys):
    code, out, _ = run(capsys, "bound", "--max-order", "0", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[1][:3] == ["0", "0.585786", "0.585787"]
    assert rows[-1] == ["p_c ≥ 0.585786"]


def test_bound_json_to_file(capsys, tmp_path):
    out_file = tmp_path / "b.json"
    code, out, _ = run(capsys, "bound", "-i", "2", "--format", "json", "--out", str(out_file))
    assert code == EXIT_OK and out.strip() == "p_c ≥ 0.614187"
    data = json.loads(out_file.read_text())
    assert data["rows"][0]["p_lo"] == "0.614187"


def test_bound_pretty(capsys):
    code, out, _ = run(capsys, "bound", "--max-order", "1", "--grid", "1e-5")
    assert code == EXIT_OK
    assert out.splitlines()[-1] == "p_c ≥ 0.60423"


@pytest.mark.parametrize("argv", [
    ["bound", "--grid", "0"],
    ["bound", "--grid", "2e-6"],
    ["bound", "--max-order", "11"],
    ["bound", "--order", "-1"],
    ["bound", "--grid", "1e-6", "--mixed-grids"],
    ["dump", "--order", "40"],
    ["simulate", "--order", "2"],
    ["simulate", "--order", "2", "--p", "1.5"],
    ["couple-check", "--labels", "3,0"],
    ["couple-check", "--order", "1,2,3"],
    ["nonsense"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_USAGE


@pytest.mark.parametrize("order", [0, 1, 2])
def test_dump(capsys, order):
    code, out, _ = run(capsys, "dump", "--order", str(order))
    assert code == EXIT_OK
    data = json.loads(out)
    assert len(data["matrix"]) == 1 << order
    code, out, _ = run(capsys, "dump", "--order", str(order), "--format", "pretty")
    assert code == EXIT_OK and out


def test_simulate_p_one(capsys):
    code, out, _ = run(capsys, "simulate", "--order", "3", "--p", "1.0", "--steps", "1e3", "--format", "json")
    assert code == EXIT_OK
    pt = json.loads(out)["points"][0]
    assert pt["speed"] == 1.0 and pt["verdict"] == "supercritical"


def test_simulate_writes_trajectories(capsys, tmp_path):
    out_file = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "simulate", "-i", "2", "--p", "0.5,0.7", "--steps", "2000",
                     "--format", "csv", "--out", str(out_file))
    assert code == EXIT_OK
    assert out_file.read_text().startswith("p,n_steps,")
    traj = tmp_path / "scan_p0.7.csv"
    assert traj.read_text().splitlines()[0] == "n,edge,edge_over_n"


def test_simulate_is_reproducible(tmp_path):
    outs = []
    for k in range(2):
        f = tmp_path / f"r{k}.json"
        subprocess.run([sys.executable, "-m", "pcbound", "simulate", "-i", "4", "--p", "0.6,0.65",
                        "--steps", "20000", "--seed", "11", "--format", "json", "--out", str(f)],
                       check=True, capture_output=True)
        outs.append(f.read_bytes())
    assert outs[0] == outs[1]


def test_couple_check_clean(capsys):
    code, out, _ = run(capsys, "couple-check", "--seeds", "5", "--steps", "50")
    assert code == EXIT_OK
    assert out.count(": 0 violations") == 3


def test_couple_check_detects_wrong_direction(capsys, monkeypatch):
    from pcbound import cli
    monkeypatch.setattr(cli, "sorted", lambda xs: list(xs)[::-1], raising=False)
    code, out, _ = run(capsys, "couple-check", "--seeds", "5", "--steps", "80")
    assert code == EXIT_CONSISTENCY


def test_certification_failure_exit_code(capsys, monkeypatch):
    from pcbound import cli
    from pcbound.solver import BracketError

    def boom(*a, **k):
        raise BracketError("no sign change")

    monkeypatch.setattr(cli, "bracket_root", boom)
    code, _, err = run(capsys, "bound", "-i", "1")
    assert code == EXIT_CERT and "certification" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "pcbound", "bound", "-i", "0", "--format", "csv"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "0.585786" in res.stdout
