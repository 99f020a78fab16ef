import json
import os
import subprocess
import sys

import pytest

from difflim import config
from difflim.cli import main
from difflim.experiments import Refusal, run_experiment
from difflim.output import read_table

# small but complete settings for every experiment
SMALL = """
[DEFAULT]
seed = 11

[validate-scalars]
ells = 1
xs = 0.5, 1
mc_samples = 20000
min_cells = 2

[ode]
ells = 1
T = 2
dt = 1e-2
long_time_factor = 5
long_time_tol = 0.2

[simulate]
n = 16
T = 1
replicas = 3

[converge]
n_grid = 8, 16, 32
psi = zero
T = 0.5
replicas = 4
min_replicas = 2
max_final_error = 10
require_decreasing = false
grid_points = 21

[acceptance-scaling]
betas = 1
n_grid = 16, 32
T = 0.5
replicas = 2
unit_beta_spread_max = 1

[sde-compare]
n = 16
T = 0.2
replicas = 20
min_replicas = 20
calibration_pairs = 1
factor = 100

[wass-rate]
n_grid = 8, 32
psi = zero
m_samples = 10000

[stationarity]
n = 16
T = 0.5
replicas = 20
min_replicas = 10
"""


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return str(path)


def write_ini(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- config -------------------------------------------------------------------


def test_defaults_are_typed():
    p = config.defaults("converge")
    assert p["n_grid"] == (32, 128, 512)
    assert [psi.kind for psi in p["psi"]] == ["zero", "half_sobolev"]
    assert p["init"].s0 == 0.25
    assert p["require_decreasing"] is True and p["seed"] == 0


def test_load_merges_default_section(tmp_path):
    path = write_ini(tmp_path, "[DEFAULT]\nseed = 5\nn = 99\n[simulate]\nT = 0.5\n[ode]\nT = 3\n")
    p = config.load(path, "simulate")
    assert p["seed"] == 5 and p["n"] == 99 and p["T"] == 0.5
    assert config.load(path, "ode")["T"] == 3.0
    assert config.load(path, "stationarity")["n"] == 99


def test_config_errors(tmp_path):
    with pytest.raises(config.ConfigError, match="unknown key"):
        config.load(write_ini(tmp_path, "[simulate]\nreplicaz = 3\n"), "simulate")
    with pytest.raises(config.ConfigError, match="replicas"):
        config.load(write_ini(tmp_path, "[simulate]\nreplicas = 2.5\n"), "simulate")
    with pytest.raises(config.ConfigError, match="psi"):
        config.load(write_ini(tmp_path, "[simulate]\npsi = cubic\n"), "simulate")
    with pytest.raises(config.ConfigError, match="unknown experiment"):
        config.parse_section("nope", {})


def test_shipped_configs_parse():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in sorted(os.listdir(root)):
        for exp in config.EXPERIMENTS:
            config.load(os.path.join(root, name), exp)


# --- experiments --------------------------------------------------------------


def test_refusals(small_ini):
    p = config.load(small_ini, "converge")
    with pytest.raises(Refusal, match="under-resourced"):
        run_experiment("converge", {**p, "replicas": 1})
    with pytest.raises(Refusal, match="N levels"):
        run_experiment("converge", {**p, "n_grid": (8, 16)})
    p = config.load(small_ini, "stationarity")
    with pytest.raises(Refusal, match="psi = zero"):
        run_experiment("stationarity", {**p, "psi": config.PARSERS["psi"]("half_sobolev")})


def test_ell_mismatch_needs_flag(small_ini):
    p = config.load(small_ini, "sde-compare")
    with pytest.raises(config.ConfigError, match="mismatched configs"):
        run_experiment("sde-compare", {**p, "sde_ell": "2"})
    rep = run_experiment("sde-compare", {**p, "sde_ell": "2", "negative_control": True})
    assert rep.notes["negative_control"] is True and rep.notes["sde_ell"] == 2.0


# --- CLI ----------------------------------------------------------------------


@pytest.mark.parametrize("experiment", config.EXPERIMENTS)
def test_cli_writes_tables_verdict_and_figure(experiment, small_ini, tmp_path, capsys):
    out = tmp_path / "out"
    code = main([experiment, "--config", small_ini, "--out", str(out)])
    assert code in (0, 1)
    verdict = json.loads((out / f"{experiment}_verdict.json").read_text())
    assert verdict["experiment"] == experiment
    assert verdict["pass"] == (code == 0)
    assert verdict["params"]["seed"] == 11
    csvs = sorted(f for f in os.listdir(out) if f.endswith(".csv"))
    assert csvs
    for f in csvs:
        schema, columns, rows = read_table(str(out / f))
        assert schema.startswith(f"{experiment}/") and schema.endswith(":" + ",".join(columns))
        assert rows and all(len(r) == len(columns) for r in rows)
    assert (out / f"{experiment}.png").stat().st_size > 0
    printed = capsys.readouterr().out
    assert printed.count("[PASS]") + printed.count("[FAIL]") == len(verdict["criteria"])


def test_small_runs_pass(small_ini, tmp_path):
    for exp in ("ode", "simulate", "converge", "acceptance-scaling", "stationarity"):
        assert main([exp, "--config", small_ini, "--out", str(tmp_path / exp), "--no-plot"]) == 0


def test_rerun_is_byte_identical_and_jobs_free(small_ini, tmp_path):
    dirs = []
    for tag, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
        d = tmp_path / tag
        main(["simulate", "--config", small_ini, "--out", str(d), "--jobs", jobs, "--no-plot"])
        main(["sde-compare", "--config", small_ini, "--out", str(d), "--jobs", jobs, "--no-plot"])
        dirs.append(d)
    names = sorted(os.listdir(dirs[0]))
    assert not any(n.endswith(".png") for n in names)
    for d in dirs[1:]:
        assert sorted(os.listdir(d)) == names
        for n in names:
            assert (d / n).read_bytes() == (dirs[0] / n).read_bytes(), n


def test_seed_flag_changes_output(small_ini, tmp_path):
    main(["simulate", "--config", small_ini, "--out", str(tmp_path / "a"), "--no-plot"])
    main(["simulate", "--config", small_ini, "--out", str(tmp_path / "b"), "--seed", "12", "--no-plot"])
    a = (tmp_path / "a" / "simulate_paths.csv").read_bytes()
    b = (tmp_path / "b" / "simulate_paths.csv").read_bytes()
    assert a != b


def test_refused_run_exits_2_with_verdict(tmp_path, capsys):
    ini = write_ini(tmp_path, "[converge]\nreplicas = 10\n")
    assert main(["converge", "--config", ini, "--out", str(tmp_path)]) == 2
    verdict = json.loads((tmp_path / "converge_verdict.json").read_text())
    assert verdict["pass"] is False and "under-resourced" in verdict["refused"]
    assert "refused" in capsys.readouterr().err


def test_config_error_exits_2(tmp_path):
    ini = write_ini(tmp_path, "[sde-compare]\nsde_ell = 2\n")
    assert main(["sde-compare", "--config", ini, "--out", str(tmp_path)]) == 2
    assert "mismatched configs" in json.loads((tmp_path / "sde-compare_verdict.json").read_text())["refused"]
    ini = write_ini(tmp_path, "[ode]\nbogus = 1\n", "d.ini")
    assert main(["ode", "--config", ini, "--out", str(tmp_path)]) == 2
    assert main(["ode", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2


def test_bad_arguments_rejected(small_ini):
    with pytest.raises(SystemExit):
        main(["simulate", "--config", small_ini, "--seed", "-1"])
    with pytest.raises(SystemExit):
        main(["fly", "--config", small_ini])
    with pytest.raises(SystemExit):
        main(["simulate"])


def test_failed_criterion_exits_1(tmp_path):
    ini = write_ini(tmp_path, SMALL.replace("unit_beta_spread_max = 1", "unit_beta_spread_max = 0"))
    assert main(["acceptance-scaling", "--config", ini, "--out", str(tmp_path), "--no-plot"]) == 1


def test_console_entry_point(small_ini, tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "difflim.cli", "ode", "--config", small_ini, "--out", str(tmp_path), "--no-plot"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "ode: PASS" in res.stdout
