import json
from pathlib import Path

import pytest

from junctionsde import ExperimentConfig, SummaryRecord, run_experiment
from junctionsde.config import ConfigError, parse_text, subset_list
from junctionsde.experiments import DEFAULT_THRESHOLDS, EXPERIMENTS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = """\
[simulation]
edges = 3
alpha = 0.2, 0.3, 0.5
x0 = delta
delta = 0.1
T = 0.5
seed = 3

[field]
kind = constant
drift = 0.0
sigma = 1.0
"""


def cfg(extra="", **kw):
    return ExperimentConfig.from_raw(parse_text(BASE + extra, "t.ini"), **kw)


def test_defaults_and_auto_step():
    ec = cfg()
    assert ec.name == "edge_occupation" and ec.sim.x0 == 0.1
    assert ec.sim.h == pytest.approx(0.125 * 0.01)
    assert ec.x0_follows_delta and ec.h_auto
    lad = ec.sim_at(0.05)
    assert lad.x0 == 0.05 and lad.h == pytest.approx(0.125 * 0.0025)
    assert ec.threshold == DEFAULT_THRESHOLDS


def test_overrides_and_per_edge_fields():
    ec = cfg("edge.2 = linear_decay rate=0.5 sigma=0.9\n[experiment]\nname = radial_law\n"
             "threshold.z = 4\nn_paths = 10\n", seed=99)
    assert ec.sim.seed == 99 and ec.threshold["z"] == 4.0 and ec.n_paths == 10
    b, s = ec.sim.field.coefficients(__import__("numpy").array([2]), 0.0, [1.0])
    assert b[0] == pytest.approx(-0.5) and s[0] == pytest.approx(0.9)
    assert ec.audit()["thresholds"]["z"] == 4.0


def test_subset_parsing():
    assert subset_list("1; 1,2") == [(1,), (1, 2)]
    assert cfg("[estimators]\nsubsets = 2;1,3\n").subsets == ((2,), (1, 3))


@pytest.mark.parametrize("extra, key, line", [
    ("[estimators]\nepsilons = 0.1, 0.2\n", "epsilons", 14),
    ("[experiment]\nname = nonsense\n", "name", 14),
    ("[experiment]\nthreshold.bogus = 1\n", "threshold.bogus", 14),
    ("[estimators]\ntest_functions = quadratic, cubic\n", "test_functions", 14),
    ("[estimators]\nsubsets = 1; 4\n", "subsets", 14),
    ("edge.7 = constant\n", "edge.7", 13),
    ("edge.2 = wobbly a=1\n", "edge.2", 13),
])
def test_errors_name_key_and_line(extra, key, line):
    with pytest.raises(ConfigError) as info:
        cfg(extra)
    assert info.value.key == key and info.value.line == line
    assert f"t.ini:{line}" in str(info.value)


def test_structural_errors():
    with pytest.raises(ConfigError, match="before the first"):
        parse_text("delta = 1\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_text(BASE + "[extra]\na = 1\n")
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_text(BASE.replace("seed = 3\n", "seed = 3\nseed = 4\n"))
    with pytest.raises(ConfigError, match="missing"):
        parse_text("[field]\nkind = constant\n")
    with pytest.raises(ConfigError, match="weights"):
        cfg().from_raw(parse_text(BASE.replace("0.2, 0.3, 0.5", "0.5, 0.5")))


def test_shipped_configs_load():
    for path in sorted(CONFIGS.glob("*.ini")):
        ec = ExperimentConfig.from_file(path)
        assert ec.name in EXPERIMENTS


def test_one_edge_config_has_no_default_subsets():
    text = BASE.replace("edges = 3", "edges = 1").replace("alpha = 0.2, 0.3, 0.5", "alpha = 1")
    assert ExperimentConfig.from_raw(parse_text(text)).subsets == ((1,),)


def small(name, extra="", n_paths=40):
    return cfg(f"[estimators]\ndeltas = 0.2, 0.1\nepsilons = 0.3, 0.2\ncheckpoints = 0.25, 0.5\n"
               f"delta_ratio = 0.5\nh_ratio = 0.03125\n{extra}"
               f"[experiment]\nname = {name}\nn_paths = {n_paths}\n")


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_every_experiment_runs_and_summarizes(name, tmp_path):
    ec = small(name, n_paths=120 if name == "radial_law" else 40)
    rec = run_experiment(ExperimentConfig(**{**ec.__dict__, "out_dir": str(tmp_path)}))
    assert isinstance(rec, SummaryRecord) and rec.checks and rec.points
    d = json.loads((tmp_path / "summary.json").read_text())
    assert d["experiment"] == name and d["config"]["thresholds"] == ec.threshold
    assert d["config"]["simulation"]["seed"] == 3 and "workers" not in d["config"]
    lines = (tmp_path / "ladder.csv").read_text().splitlines()
    assert lines[0] == f"# junctionsde ladder-csv v1 experiment={name}"
    assert len(lines) == 2 + len(rec.points)


def test_summary_rejects_bad_points():
    with pytest.raises(ValueError):
        SummaryRecord("x", {}, [{"n": 0}], {}, [])
    with pytest.raises(ValueError):
        SummaryRecord("x", {}, [{"n": 3, "stderr": -1.0}], {}, [])
    rec = SummaryRecord("x", {}, [{"n": 3}], {}, [{"name": "a", "passed": True}])
    assert rec.passed and rec.check("a")["passed"]
    with pytest.raises(KeyError):
        rec.check("b")


def test_summary_bytes_independent_of_workers(tmp_path):
    outs = []
    for w in (1, 2, 3):
        ec = small("local_time_delta_ladder")
        ec = ExperimentConfig(**{**ec.__dict__, "workers": w, "chunk_size": 16,
                                 "out_dir": str(tmp_path / f"w{w}")})
        run_experiment(ec)
        outs.append((tmp_path / f"w{w}" / "summary.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]
