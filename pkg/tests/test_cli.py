from __future__ import annotations

import csv
import os
import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from torogrow import cli
from torogrow import config as cfgmod

EXPECTED_STATUS = {"nilpotent_identity": cli.EXIT_INPUT}
OUTPUT_FILES = {"growth": {"growth.json", "growth.csv", "growth.svg"}, "drift": {"drift.json", "drift.csv", "drift.svg"}}


@pytest.fixture(scope="module")
def fixture_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    runs = {}
    for name in cfgmod.fixture_names():
        out = root / name
        t0 = time.perf_counter()
        status = cli.main(["--fixture", name, "--out", str(out), "--quiet"])
        runs[name] = (status, time.perf_counter() - t0, out)
    return runs


def _report(out: Path, command: str) -> dict:
    return json.loads((out / f"{command}.json").read_text())


def test_every_fixture_runs(fixture_runs):
    assert len(fixture_runs) >= 13
    for name, (status, elapsed, out) in fixture_runs.items():
        assert status == EXPECTED_STATUS.get(name, cli.EXIT_OK), name
        assert elapsed < 60.0, name
        if status == cli.EXIT_OK:
            command = cfgmod.load_fixture(name)["command"]
            files = {p.name for p in out.iterdir()}
            assert files == OUTPUT_FILES.get(command, {f"{command}.json"}), name


def test_quadratic_growth_report(fixture_runs):
    out = fixture_runs["quadratic_growth"][2]
    rep = _report(out, "growth")
    assert rep["schema"] == "torogrow/1" and rep["command"] == "growth"
    res = rep["result"]
    assert res["tau_theoretical"] == 2.0
    assert res["limit_mean"][2][0] == pytest.approx(0.5, abs=0.01)
    assert res["residual_sup"] <= 0.01
    rows = list(csv.reader((out / "growth.csv").read_text().splitlines()))
    assert rows[0] == ["n", "sup_norm", "scaled_norm"]
    assert [int(r[0]) for r in rows[1:]] == res["n_schedule"]
    assert float(rows[-1][2]) == pytest.approx(0.5, abs=0.01)
    svg = (out / "growth.svg").read_text()
    assert svg.startswith("<?xml") and 'version="1.1"' in svg and svg.rstrip().endswith("</svg>")


def test_lattice_report(fixture_runs):
    res = _report(fixture_runs["lattice"][2], "lattice")["result"]
    assert res["a"] == [5, -3, 0] and res["b"] == [0, -3, 2] and res["minor_gcd"] == 1
    assert res["full_image"] is True
    members = {tuple(m["m"]): m["coefficients"] for m in res["membership"]}
    assert members[(5, -3, 0)] == [1, 0]
    assert members[(1, 0, 0)] is None


def test_nilpotent_identity_message(capsys):
    status = cli.main(["--fixture", "nilpotent_identity", "--quiet"])
    assert status == cli.EXIT_INPUT
    assert "input is not square-zero" in capsys.readouterr().err


def test_drift_report(fixture_runs):
    res = _report(fixture_runs["drift"][2], "drift")["result"]
    v = res["drift"]
    assert res["strictly_decreasing"] and v[-1] < v[0] / 2


def test_conjugate_reports(fixture_runs):
    for name in ("conjugate_trivial", "conjugate_shear", "conjugate_linear"):
        res = _report(fixture_runs[name][2], "conjugate")["result"]
        assert res["ok"] is True and res["verification"]["residual_sup"] <= 1e-4, name


@pytest.mark.parametrize("name", ["lattice", "nilpotent_pair", "random_anzai", "drift", "unipotent_growth",
                                  "constant_beta_growth", "conjugate_trivial"])
def test_byte_identical_reruns(tmp_path, name):
    outs = []
    for k in range(2):
        out = tmp_path / str(k)
        cli.main(["--fixture", name, "--out", str(out), "--quiet"])
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]


def test_seed_override(tmp_path):
    a, b, c = (tmp_path / k for k in "abc")
    cli.main(["--fixture", "random_anzai", "--out", str(a), "--quiet", "--seed", "5"])
    cli.main(["--fixture", "random_anzai", "--out", str(b), "--quiet", "--seed", "5"])
    cli.main(["--fixture", "random_anzai", "--out", str(c), "--quiet", "--seed", "6"])
    ra, rb, rc = (_report(p, "random-growth") for p in (a, b, c))
    assert ra == rb
    assert ra["result"]["seed"] == 5 and ra["config"]["seed"] == 5
    assert ra["result"]["mean_matrix"] != rc["result"]["mean_matrix"]


def _write(tmp_path, cfg) -> Path:
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_unknown_key_rejected_with_pointer(tmp_path, capsys):
    cfg = cfgmod.load_fixture("lattice")
    cfg["bogus"] = 1
    cfg["c"] = [1, "x", 2]
    assert cli.main(["--config", str(_write(tmp_path, cfg))]) == cli.EXIT_INPUT
    err = capsys.readouterr().err
    assert "error: /c/1:" in err
    assert "bogus" in err


def test_nested_schema_errors(tmp_path, capsys):
    cfg = cfgmod.load_fixture("quadratic_growth")
    cfg["system"]["alpha"] = "pi"
    cfg["system"]["gamma"]["terms"][0] = [1, 0, 0.0]
    assert cli.main(["--config", str(_write(tmp_path, cfg))]) == cli.EXIT_INPUT
    err = capsys.readouterr().err
    assert "/system/alpha" in err and "/system/gamma/terms/0" in err


def test_validation_precedes_computation(tmp_path):
    cfg = cfgmod.load_fixture("quadratic_growth")
    cfg["n_schedule"] = [10**9, "x"]
    t0 = time.perf_counter()
    assert cli.main(["--config", str(_write(tmp_path, cfg)), "--quiet"]) == cli.EXIT_INPUT
    assert time.perf_counter() - t0 < 5


def test_config_errors_carry_pointers():
    with pytest.raises(cfgmod.ConfigError) as exc:
        cfgmod.validate({"schema": "torogrow/1", "command": "drift"})
    assert exc.value.errors and all(ptr.startswith("/") or ptr == "" for ptr, _ in exc.value.errors)
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.validate({"schema": "torogrow/2", "command": "lattice", "c": [1, 2, 3]})


def test_hypothesis_failure_exit_code(tmp_path, capsys):
    cfg = cfgmod.load_fixture("conjugate_shear")
    cfg["alpha"] = 0.25
    assert cli.main(["--config", str(_write(tmp_path, cfg)), "--quiet"]) == cli.EXIT_HYPOTHESIS
    assert "hypothesis failure" in capsys.readouterr().err


def test_structural_error_exit_code(tmp_path, capsys):
    cfg = {"schema": "torogrow/1", "command": "lattice", "c": [2, 4, 6]}
    assert cli.main(["--config", str(_write(tmp_path, cfg)), "--quiet"]) == cli.EXIT_INPUT
    assert capsys.readouterr().err.startswith("error:")


def test_missing_source_is_input_error(capsys):
    assert cli.main([]) == cli.EXIT_INPUT
    assert "--config" in capsys.readouterr().err


def test_print_schema_and_list(capsys):
    assert cli.main(["--print-schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert schema["$id"] == "torogrow/1"
    assert set(schema["properties"]["command"]["enum"]) == set(cfgmod.COMMANDS)
    for c in cfgmod.COMMANDS:
        assert cfgmod.command_schema(c)["additionalProperties"] is False
    assert cli.main(["--list-fixtures"]) == 0
    assert capsys.readouterr().out.split() == cfgmod.fixture_names()


def test_symbolic_tokens():
    assert cfgmod.real("sqrt2m1") == 2**0.5 - 1
    assert cfgmod.real("-golden") == -(5**0.5 - 1) / 2
    assert cfgmod.real(0.25) == 0.25


def test_console_summary(capsys):
    assert cli.main(["--fixture", "lattice"]) == 0
    assert "minor_gcd: 1" in capsys.readouterr().out


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "torogrow.cli", "--fixture", "lattice", "--out", str(tmp_path),
                        "--quiet"], capture_output=True, text=True)
    assert r.returncode == 0 and (tmp_path / "lattice.json").exists()


def test_thread_count_does_not_change_reports(tmp_path):
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / threads
        env = {**os.environ, "TOROGROW_THREADS": threads}
        r = subprocess.run([sys.executable, "-m", "torogrow.cli", "--fixture", "anzai_growth", "--out", str(out),
                            "--quiet"], capture_output=True, text=True, env=env)
        assert r.returncode == 0, r.stderr
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]
