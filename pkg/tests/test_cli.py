import json
import subprocess
import sys

import pytest

from metric_bayes.cli import main
from metric_bayes.simulator import read_ground_truth

SMALL = "horizon = 8\nn_sweeps = 10\nburn_in = 2\nn_runs = 2\n"


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


def test_run_report_roundtrip(cfg_file, tmp_path, capsys):
    out = tmp_path / "mse.csv"
    assert main(["run", "--config", str(cfg_file), "--out", str(out), "--seed", "7",
                 "--methods", "nn,pda", "--runs", "3"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "step,nn,pda" and len(lines) == 9
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["master_seed"] == 7 and meta["n_runs"] == 3
    assert meta["config"]["methods"] == "nn,pda"
    capsys.readouterr()
    assert main(["report", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert "nn" in text and "pda" in text and "seed 7" in text


def test_simulate(cfg_file, tmp_path):
    out = tmp_path / "gt.txt"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(out)]) == 0
    gt = read_ground_truth(out)
    assert len(gt.scans) == 8


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) != 0
    assert main(["report", "--in", str(tmp_path / "missing.csv")]) != 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown = 1\n")
    assert main(["run", "--config", str(bad)]) != 0
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code != 0


def test_module_entry_point(cfg_file, tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "metric_bayes.cli", "run", "--config", str(cfg_file),
                           "--out", str(out), "--methods", "nn"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
