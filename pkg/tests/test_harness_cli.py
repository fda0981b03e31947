import csv
import io
import json
import math

import numpy as np
import pytest

from minmaxlb.cli import main
from minmaxlb.config import ConfigError, ExperimentConfig, dump_spec, load_config, spec_from_params
from minmaxlb.experiments import CSV_COLUMNS, fit_slope, replica_seed, run_experiment, run_sweep
from minmaxlb.instances import InstanceSpec, estimate_constants
from minmaxlb.verification import CHECKS, verify_all

DET_INI = """
[instance]
L = 1.0
mu = {mu}
Delta = 700
eps = 0.1
seed = 5

[run]
algorithm = {alg}
replicas = 2
output = {out}
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- config


def test_load_config(tmp_path):
    path = write(tmp_path, "a.ini", DET_INI.format(mu=1 / 57400, alg="greedy", out=tmp_path / "r"))
    cfg = load_config(path)
    assert cfg.algorithm == "greedy" and cfg.replicas == 2 and cfg.seed == 5
    spec = cfg.spec()
    assert spec.n == 20 and spec.T == 4


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "b.ini", "[run]\nalgorithm = gda\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "c.ini", "[instance]\nL = 1\nbogus = 2\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "d.ini", "[instance]\nL = abc\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "e.ini", "[instance]\nL = 1\n[run]\nalgorithm = newton\n"))
    with pytest.raises(ConfigError):
        ExperimentConfig(instance={}, replicas=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(instance={}, budget=0)
    with pytest.raises(ConfigError):
        spec_from_params({"L": 1.0})


def test_spec_round_trip(tmp_path):
    spec = InstanceSpec(L=1.0, mu=1 / 8e5, Delta=2600.0, eps=0.1, sigma=1e5, seed=3)
    buf = io.StringIO()
    dump_spec(spec, buf)
    back = load_config(write(tmp_path, "s.ini", buf.getvalue())).spec()
    assert back == spec
    assert back.metadata() == spec.metadata()


def test_metadata_json_round_trip():
    spec = InstanceSpec(L=2.0, mu=2 / 3e5, Delta=900.0, eps=0.05, sigma=50.0, R1=3.0, R2=90.0)
    meta = json.loads(json.dumps(spec.metadata()))
    rebuilt = spec_from_params(meta)
    assert rebuilt.metadata() == spec.metadata()


# ---------------------------------------------------------------- experiments


def test_replica_seeds_distinct():
    seeds = {replica_seed(1, c, r) for c in range(5) for r in range(20)}
    assert len(seeds) == 100 and all(0 <= s < 2**64 for s in seeds)


def test_fit_slope():
    x = np.array([1.0, 2, 4, 8])
    assert fit_slope(x, 3 * x**0.5) == pytest.approx(0.5)
    assert fit_slope([1.0, 1.0], [2.0, 3.0]) is None


def test_run_experiment_outputs(tmp_path):
    out = tmp_path / "res" / "run"
    cfg = load_config(write(tmp_path, "a.ini", DET_INI.format(mu=1 / 57400, alg="gda", out=out)))
    rows, meta = run_experiment(cfg)
    assert len(rows) == 2 and meta["summary"]["bound_violations"] == 0
    with open(str(out) + ".csv") as fh:
        reader = csv.DictReader(fh)
        assert tuple(reader.fieldnames) == CSV_COLUMNS
        table = list(reader)
    assert table[0]["budget"] == str(cfg.spec().n * (cfg.spec().T - 1))
    assert table[0]["first_eps_stationary"] == ""  # censored
    lines = open(str(out) + ".jsonl").read().splitlines()
    assert len(lines) == 2 * (int(table[0]["budget"]) + 1)
    meta2 = json.load(open(str(out) + ".meta.json"))
    assert spec_from_params(meta2["instance"]).metadata() == cfg.spec().metadata()


SWEEP_INI = """
[instance]
L = 1.0
mu = 1e-5
Delta = 700
eps = 0.1
seed = 1

[run]
algorithm = greedy
replicas = {reps}
workers = {workers}
output = {out}

[sweep]
kappa = 15000, 57400, 229600, 1e3
eps = 0.1, 0.07
"""


def test_sweep_deterministic_and_reproducible(tmp_path):
    a = load_config(write(tmp_path, "a.ini", SWEEP_INI.format(reps=2, workers=1, out=tmp_path / "a")))
    b = load_config(write(tmp_path, "b.ini", SWEEP_INI.format(reps=2, workers=3, out=tmp_path / "b")))
    rows, meta = run_sweep(a)
    run_sweep(b)
    assert open(tmp_path / "a.csv").read() == open(tmp_path / "b.csv").read()
    assert open(tmp_path / "a.jsonl").read() == open(tmp_path / "b.jsonl").read()
    assert meta["bound_violations"] == 0
    assert len(meta["skipped"]) == 2  # kappa = 1e3 is outside the regime
    assert "kappa >=" in meta["skipped"][0]["reason"]
    cells = meta["cells"]
    assert len(cells) == 6 and all(c["censored_stationary"] == c["replicas"] for c in cells)
    slopes = meta["slopes"]
    assert slopes["theory"] == {"kappa": 0.5, "eps": -2.0}
    assert abs(slopes["kappa"] - 0.5) < 0.1


def test_sweep_doubling_kappa():
    ell0 = estimate_constants("deterministic").ell0
    base = InstanceSpec(L=1.0, mu=1 / (ell0 * 2500), Delta=700.0, eps=0.1)
    dbl = InstanceSpec(L=1.0, mu=1 / (ell0 * 5000), Delta=700.0, eps=0.1)
    ratio = (dbl.n * (dbl.T - 1)) / (base.n * (base.T - 1))
    assert ratio == pytest.approx(math.sqrt(2), rel=0.05)


def test_stochastic_sweep_half_unfinished(tmp_path):
    text = """
[instance]
L = 1.0
mu = 1.25e-6
Delta = 2600
eps = 0.1
variant = stochastic
seed = 2

[run]
algorithm = greedy
replicas = 60
p = 0.2
output = {out}

[sweep]
kappa = 8e5, 1.6e6
"""
    cfg = load_config(write(tmp_path, "s.ini", text.format(out=tmp_path / "s")))
    rows, meta = run_sweep(cfg)
    for c in meta["cells"]:
        assert c["fraction_unfinished_at_horizon"] >= 0.5 - 3 * math.sqrt(0.25 / 60)


# ---------------------------------------------------------------- CLI


def test_cli_build(tmp_path, capsys):
    code, out, _ = run_cli(["build", write(tmp_path, "a.ini", DET_INI.format(mu=1 / 57400, alg="gda", out="x"))], capsys)
    assert code == 0
    meta = json.loads(out)
    for k in ("n", "T", "lambda", "p", "ell0", "ellm", "G", "a1", "a2", "C", "c1", "c2", "domain"):
        assert k in meta
    assert meta["n"] == math.floor(math.sqrt(57400 / meta["ell0"]))


def test_cli_build_spec_example(tmp_path, capsys):
    # L=1, mu=1e-4: n = floor(sqrt(1e4 / ell0)) < 10 with the certified ell0
    path = write(tmp_path, "a.ini", "[instance]\nL = 1\nmu = 1e-4\nDelta = 10\neps = 0.1\n")
    code, _, err = run_cli(["build", path], capsys)
    ell0 = estimate_constants("deterministic").ell0
    assert math.floor(math.sqrt(1e4 / ell0)) == 8
    assert code == 1 and "kappa >=" in err


def test_cli_build_stochastic_reports_p(tmp_path, capsys):
    path = write(tmp_path, "s.ini", "[instance]\nL = 1\nmu = 1.25e-6\nDelta = 2600\neps = 0.1\nsigma = 1e5\n")
    code, out, _ = run_cli(["build", path], capsys)
    meta = json.loads(out)
    assert code == 0
    assert meta["p"] == pytest.approx(min(1.0, 36 * 0.01 * meta["G"] ** 2 / 1e10))


def test_cli_kappa_one(tmp_path, capsys):
    path = write(tmp_path, "k.ini", "[instance]\nL = 1\nmu = 1\nDelta = 1e6\neps = 0.1\n")
    code, _, err = run_cli(["build", path], capsys)
    assert code == 1 and "regime" in err


def test_cli_usage_errors(tmp_path, capsys):
    assert run_cli([], capsys)[0] == 2
    assert run_cli(["frobnicate"], capsys)[0] == 2
    assert run_cli(["build", str(tmp_path / "missing.ini")], capsys)[0] == 2
    assert run_cli(["verify-lemmas", "--samples", "0"], capsys)[0] == 2
    bad = write(tmp_path, "bad.ini", "[instance]\nL = 1\n")
    assert run_cli(["sweep", bad], capsys)[0] == 2


def test_cli_run_and_sweep(tmp_path, capsys):
    path = write(tmp_path, "a.ini", DET_INI.format(mu=1 / 57400, alg="best-response", out=tmp_path / "o"))
    code, out, _ = run_cli(["run", path], capsys)
    assert code == 0 and json.loads(out)["summary"]["bound_violations"] == 0
    path = write(tmp_path, "s.ini", SWEEP_INI.format(reps=1, workers=2, out=tmp_path / "w"))
    code, out, _ = run_cli(["sweep", path], capsys)
    assert code == 0 and json.loads(out)["bound_violations"] == 0


def test_cli_verify_subset(tmp_path, capsys):
    report = tmp_path / "rep.json"
    code, _, err = run_cli(["verify-lemmas", "--samples", "500", "--only", "gradient_floor", "first_column",
                            "--output", str(report)], capsys)
    data = json.loads(report.read_text())
    assert code == 0 and data["passed"]
    assert [e["lemma"] for e in data["entries"]] == ["gradient_floor", "first_column"]
    assert "PASS" in err


# ---------------------------------------------------------------- verification report


def test_verify_all_default_sizes_pass():
    report = verify_all()
    names = [e.lemma for e in report.entries]
    assert set(names) == set(CHECKS)
    assert len(names) == 11
    assert report.passed
    assert sum(e.runtime for e in report.entries) < 120
    first_column = next(e for e in report.entries if e.lemma == "first_column")
    assert set(first_column.detail) >= {"10", "50", "100", "500"}
    gradient_floor = next(e for e in report.entries if e.lemma == "gradient_floor")
    assert gradient_floor.detail["min_gradient_norm"] > 1 / 3


def test_report_fails_if_any_entry_fails():
    report = verify_all(samples=200, only=["first_column"])
    report.entries[0].passed = False
    assert not report.passed
