import subprocess
import sys

import pytest

from emcrt.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main
from emcrt.io import read_csv
from emcrt.presets import preset


@pytest.fixture
def small_cfg(tmp_path):
    cfg = preset("marshak-thin", desk=True, x_segments=[[0.0, 0.5, 0.05]], budget=3_000,
                 t_end=0.005)
    path = tmp_path / "run.yaml"
    cfg.save(path)
    return path


def test_run_writes_outputs(small_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(small_cfg), "--out", str(out), "--groups"]) == EXIT_OK
    assert "CFL" in capsys.readouterr().out
    header, data = read_csv(out / "snapshot_000002.csv")
    assert header[:3] == ["x_center", "T_material", "T_radiation"] and len(header) == 3 + 25
    assert data.shape[0] == 10
    assert (out / "diagnostics.csv").exists() and (out / "picard.csv").exists()
    assert (out / "final.gp").exists()


def test_preset_prints_and_writes(tmp_path, capsys):
    assert main(["preset", "larsen", "--desk"]) == EXIT_OK
    assert "budget: 50000" in capsys.readouterr().out
    path = tmp_path / "l.yaml"
    assert main(["preset", "hohlraum", "--write", str(path)]) == EXIT_OK
    assert "lineouts" in path.read_text()


def test_config_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("dt: 0\n")
    assert main(["run", str(bad)]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_fom_needs_two_replicas(small_cfg):
    assert main(["fom", str(small_cfg), "--replicas", "1"]) == EXIT_CONFIG


def test_fom_report(small_cfg, tmp_path):
    out = tmp_path / "fom.csv"
    assert main(["fom", str(small_cfg), "--replicas", "2", "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[-1].startswith("summary,")


def test_solver_failure_exit_2(small_cfg, tmp_path, capsys):
    cfg = preset("marshak-thin", desk=True, x_segments=[[0.0, 0.5, 0.05]], budget=3_000,
                 t_end=0.005, picard={"gamma": 1e-30, "max_iter": 1})
    path = tmp_path / "fail.yaml"
    cfg.save(path)
    assert main(["run", str(path)]) == EXIT_SOLVER
    assert "solver failure" in capsys.readouterr().err


def test_output_failure_exit_2(small_cfg, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["run", str(small_cfg), "--out", str(blocker / "x")]) == EXIT_SOLVER


def test_compare(small_cfg, capsys):
    assert main(["compare", str(small_cfg), str(small_cfg)]) == EXIT_OK
    assert "L1(T_m)=0" in capsys.readouterr().out


def test_console_entry_point(small_cfg):
    r = subprocess.run([sys.executable, "-m", "emcrt.cli", "preset", "infinite-medium"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "power_law" in r.stdout
