import json
import subprocess
import sys
from pathlib import Path

import pytest

from junctionsde import load_pack
from junctionsde.cli import build_parser, main
from junctionsde.paths import PathRecord

SMOKE = str(Path(__file__).resolve().parent.parent / "configs" / "mixed_smoke.ini")


def test_help_lists_every_command(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    text = capsys.readouterr().out
    for c in ("validate", "simulate", "localtime", "ito", "experiment", "report", "JUNCTIONSDE_WORKERS"):
        assert c in text


def test_validate(tmp_path, capsys):
    assert main(["validate", "--config", SMOKE, "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "validation.json").read_text())
    assert d["passed"] and set(d["test_functions"]) == {"quadratic", "edge_weighted_linear"}


def test_simulate_csv_and_binary(tmp_path):
    assert main(["simulate", "--config", SMOKE, "--out", str(tmp_path / "c"), "--seed", "11"]) == 0
    manifest = json.loads((tmp_path / "c" / "manifest.json").read_text())
    files = sorted((tmp_path / "c").glob("*.csv"))
    assert len(files) == 200 and manifest["config"]["seed"] == 11
    assert main(["simulate", "--config", SMOKE, "--out", str(tmp_path / "b"), "--seed", "11",
                 "--format", "binary", "--workers", "2"]) == 0
    packed, _ = load_pack(next((tmp_path / "b").glob("*.npz")))
    assert packed[0].to_csv() == PathRecord.from_csv(str(files[0])).to_csv()


def test_localtime_outputs(tmp_path):
    assert main(["localtime", "--config", SMOKE, "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "comparison.json").read_text())
    assert [r["epsilon"] for r in rows] == [0.2, 0.1]
    head = (tmp_path / "localtime_finals.csv").read_text().splitlines()[:2]
    assert head[0] == "# junctionsde localtime-finals-csv v1" and head[1].startswith("path,lt_jump")
    assert (tmp_path / "path0_localtime_00.csv").read_text().startswith("# junctionsde localtime-csv v1")


def test_ito_outputs(tmp_path):
    assert main(["ito", "--config", SMOKE, "--out", str(tmp_path)]) in (0, 1)
    rep = json.loads((tmp_path / "ito_report.json").read_text())
    assert set(rep) == {"quadratic", "edge_weighted_linear"}
    assert len(list(tmp_path.glob("path0_residual_*.csv"))) == 4


def test_experiment_and_report(tmp_path, capsys):
    assert main(["experiment", "--config", SMOKE, "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    code = main(["report", str(tmp_path)])
    out = capsys.readouterr().out
    assert "exp_moment" in out and "bounded[moment_ratio]" in out
    assert code == (0 if json.loads((tmp_path / "summary.json").read_text())["passed"] else 1)


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[simulation]\ndelta = 0.1\nalpha = 0.5, 0.6\nedges = 2\n")
    assert main(["validate", "--config", str(bad)]) == 2
    assert "bad.ini:3 [simulation] alpha" in capsys.readouterr().err
    assert main(["report"]) == 2


def test_module_entry_point(tmp_path):
    run = lambda w: subprocess.run(
        [sys.executable, "-m", "junctionsde", "experiment", "--config", SMOKE, "--workers", str(w),
         "--out", str(tmp_path / str(w))], capture_output=True, text=True, check=True)
    run(1)
    run(2)
    assert (tmp_path / "1" / "summary.json").read_bytes() == (tmp_path / "2" / "summary.json").read_bytes()
