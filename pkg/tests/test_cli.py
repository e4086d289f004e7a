import json
import subprocess
import sys
from pathlib import Path

import pytest

from spincm.cli import free_flight_velocity, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_simulate_writes_json_and_csv(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(CONFIGS / "periodic_chain.toml"), "--out", str(out)]) == 0
    doc = json.loads((out / "trajectory.json").read_text())
    assert doc["meta"]["seed"] == 3 and len(doc["meta"]["config_hash"]) == 16
    assert doc["times"][0] == 0.0 and doc["times"][-1] == pytest.approx(1.0)
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=") and lines[1].startswith("t,p1,")
    assert len(lines) == len(doc["times"]) + 2


def test_simulate_is_byte_deterministic(tmp_path):
    cfg = str(CONFIGS / "open_boundary.toml")
    for d in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / d), "--format", "both"]) == 0
    for name in ("trajectory.json", "trajectory.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "6"])
    assert (tmp_path / "c" / "trajectory.json").read_bytes() != (tmp_path / "a" / "trajectory.json").read_bytes()


def test_free_flight_flag(tmp_path, capsys):
    rc = main(["simulate", "--config", str(CONFIGS / "open_free_flight.toml"), "--out", str(tmp_path), "--assert-free-flight"])
    assert rc == 0
    assert "free flight residual" in capsys.readouterr().out
    # a coupled state is not free: the same check fails honestly
    rc = main(["simulate", "--config", str(CONFIGS / "open_boundary.toml"), "--out", str(tmp_path), "--assert-free-flight"])
    assert rc == 1


def test_free_flight_velocity():
    assert free_flight_velocity([1.0, -1.0], 2).tolist() == [0.5, -0.5]


def test_compare(tmp_path):
    assert main(["compare", "--config", str(CONFIGS / "open_boundary.toml"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "compare_report.json").read_text())
    assert rep["pass"] and rep["sup_distance"] < 1e-6
    assert rep["distances"][0] < 1e-13  # t = 0: embedding then gauge fixing
    assert (tmp_path / "ode_trajectory.json").exists() and (tmp_path / "projection_trajectory.json").exists()


def test_verify_exit_codes(tmp_path):
    assert main(["verify", "psi", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_psi.json").read_text())
    assert rep["pass"] and rep["trials"] == 100 and rep["seed"] == 0
    assert main(["verify", "psi", "--out", str(tmp_path), "--tol", "0"]) == 1


def test_verify_reports_are_deterministic(tmp_path):
    for d in ("a", "b"):
        main(["verify", "rank1", "--out", str(tmp_path / d), "--seed", "9"])
    assert (tmp_path / "a" / "verify_rank1.json").read_bytes() == (tmp_path / "b" / "verify_rank1.json").read_bytes()


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[chain]\nkind = "periodic"\nN = 1\nn = 1\n')
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "chain.N" in capsys.readouterr().err
    bad.write_text("[chain\n")
    assert main(["simulate", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit) as e:
        main(["verify", "everything"])
    assert e.value.code == 2


def test_runtime_failure_exit_3(tmp_path):
    cfg = tmp_path / "crash.toml"
    # particles approaching each other with no potential meet a wall
    cfg.write_text(
        'seed = 0\n[chain]\nkind = "open"\nN = 2\nn = 1\n[orbits.1]\nkind = "rank1"\nxi = 1.0\n'
        "[time]\nT = 5.0\n[initial]\nfree_flight = true\np = [-1.0, 1.0]\nq = [0.5, -0.5]\n"
    )
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 3
    part = json.loads((tmp_path / "trajectory_partial.json").read_text())
    assert 0 < part["meta"]["failure_time"] < 5.0


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spincm.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("spincm ")
