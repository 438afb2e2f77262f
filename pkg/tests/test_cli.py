import json


import subprocess
import sys
from pathlib import Path

import pytest

from pertvqe.cli import main


def write_config(tmp_path, **overrides):
    cfg = {
        "model": {"type": "tfim", "n_qubits": 4, "h": 1.0, "j": 0.15},
        "k_max": 4,
        "out": str(tmp_path / "out"),
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_hierarchy_command_writes_ranked_table(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "hierarchy"]) == 0
    rows = json.loads((tmp_path / "out" / "hierarchy.json").read_text())
    assert len(rows) == 7
    thetas = {r["pauli"]: r["theta_tilde"] for r in rows}
    j = 0.15
    assert thetas["XYII"] == pytest.approx(-j / 4)
    assert thetas["XIYI"] == pytest.approx(j**2 / 16)
    assert thetas["XIIY"] == pytest.approx(-(j**3) / 32)
    out = capsys.readouterr().out
    assert "rank" in out and "XXXY" in out


def test_hierarchy_command_k_max_one_nearest_neighbours_only(tmp_path):
    cfg = write_config(tmp_path, k_max=1)
    assert main(["--config", str(cfg), "hierarchy"]) == 0
    rows = json.loads((tmp_path / "out" / "hierarchy.json").read_text())
    assert len(rows) == 3
    assert all(r["pauli"].replace("I", "") == "XY" for r in rows)


def test_invalid_mode_is_usage_error(tmp_path):
    cfg = write_config(tmp_path, hierarchy={"mode": "bogus"})
    assert main(["--config", str(cfg), "hierarchy"]) == 2


def test_missing_config_is_io_error(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json"), "hierarchy"]) == 1


def test_malformed_config_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"model": \n !}')
    assert main(["--config", str(path), "hierarchy"]) == 2
    assert ":2:" in capsys.readouterr().err


def test_out_and_seed_flags_override_config(tmp_path, capsys):
    cfg = write_config(tmp_path)
    alt = tmp_path / "elsewhere"
    assert main(["--config", str(cfg), "--out", str(alt), "--seed", "9",
                 "hierarchy"]) == 0
    assert (alt / "hierarchy.json").exists()
    assert not (tmp_path / "out" / "hierarchy.json").exists()


def test_hierarchy_output_is_deterministic(tmp_path, capsys):
    cfg = write_config(tmp_path, hierarchy={"tie_seed": 3})
    assert main(["--config", str(cfg), "hierarchy"]) == 0
    first = (tmp_path / "out" / "hierarchy.json").read_bytes()
    assert main(["--config", str(cfg), "hierarchy"]) == 0
    assert (tmp_path / "out" / "hierarchy.json").read_bytes() == first


def test_diagrams_command_writes_dot_files(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "diagrams"]) == 0
    dots = sorted(p.name for p in (tmp_path / "out").glob("*.dot"))
    assert len(dots) == 7
    listing = json.loads((tmp_path / "out" / "leading.json").read_text())
    assert sorted(r["order"] for r in listing) == [1, 1, 1, 2, 2, 3, 4]


def test_sweep_command_writes_csv_per_combination(tmp_path):
    cfg = write_config(
        tmp_path,
        model={"type": "tfim", "n_qubits": 3, "h": 1.0, "j": 0.2},
        k_max=3,
        sweep={
            "n_p_max": 2,
            "j_values": [0.2, 1.0],
            "hierarchies": [["pert", "hierarchy"], ["loc", "hierarchy"]],
        },
    )
    assert main(["--config", str(cfg), "sweep"]) == 0
    out = tmp_path / "out"
    names = sorted(p.name for p in out.glob("*.csv"))
    assert names == [
        "sweep_loc_j0.2.csv",
        "sweep_loc_j1.csv",
        "sweep_pert_j0.2.csv",
        "sweep_pert_j1.csv",
    ]
    text = (out / "sweep_pert_j0.2.csv").read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "n_params,energy,epsilon,iterations"
    assert len(lines) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest) == {n[:-4] for n in names}


def test_sweep_zero_units_single_row(tmp_path):
    cfg = write_config(
        tmp_path,
        model={"type": "tfim", "n_qubits": 3, "h": 1.0, "j": 0.2},
        k_max=3,
        sweep={"n_p_max": 0, "j_values": [0.2],
               "hierarchies": [["pert", "hierarchy"]]},
    )
    assert main(["--config", str(cfg), "sweep"]) == 0
    lines = (tmp_path / "out" / "sweep_pert_j0.2.csv").read_text().strip().splitlines()
    assert len(lines) == 2


def test_sweep_unwritable_output_is_io_error(tmp_path):
    # nesting the output directory under a regular file fails for any user
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    cfg = write_config(
        tmp_path,
        model={"type": "tfim", "n_qubits": 3, "h": 1.0, "j": 0.2},
        k_max=2,
        out=str(blocker / "nested"),
        sweep={"n_p_max": 0, "j_values": [0.2],
               "hierarchies": [["pert", "hierarchy"]]},
    )
    assert main(["--config", str(cfg), "sweep"]) == 1


def test_sweep_parallel_jobs_matches_serial(tmp_path):
    overrides = dict(
        model={"type": "tfim", "n_qubits": 3, "h": 1.0, "j": 0.2},
        k_max=3,
        sweep={"n_p_max": 1, "j_values": [0.2, 0.5],
               "hierarchies": [["pert", "hierarchy"]]},
    )
    cfg = write_config(tmp_path, out=str(tmp_path / "serial"), **overrides)
    assert main(["--config", str(cfg), "sweep"]) == 0
    cfg2 = write_config(tmp_path, out=str(tmp_path / "parallel"), **overrides)
    assert main(["--config", str(cfg2), "--jobs", "2", "sweep"]) == 0
    for name in ("sweep_pert_j0.2.csv", "sweep_pert_j0.5.csv", "manifest.json"):
        serial = (tmp_path / "serial" / name).read_bytes()
        parallel = (tmp_path / "parallel" / name).read_bytes()
        assert serial == parallel


def test_custom_model_round_trip(tmp_path):
    cfg = write_config(
        tmp_path,
        model={
            "type": "custom",
            "h": [1.0, 1.2, 0.9],
            "couplings": [
                {"j": 0.1, "pauli": "XXI"},
                {"j": 0.2, "pauli": "IXX"},
            ],
        },
        k_max=2,
    )
    assert main(["--config", str(cfg), "hierarchy"]) == 0
    rows = json.loads((tmp_path / "out" / "hierarchy.json").read_text())
    assert {r["pauli"] for r in rows} == {"XYI", "IXY", "XIY"}


def test_degenerate_model_exits_three(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        model={
            "type": "custom",
            "h": [0.0, 1.0],
            "couplings": [{"j": 0.5, "pauli": "XI"}],
        },
        k_max=2,
    )
    assert main(["--config", str(cfg), "hierarchy"]) == 3
    assert "degenerate" in capsys.readouterr().err


def test_verify_command_passes_on_default_model(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["--config", str(cfg), "verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4
    assert "FAIL" not in out


def test_console_entry_point_usage_error():
    proc = subprocess.run(
        [sys.executable, "-m", "pertvqe.cli", "--config", "x.json", "badcmd"],
        capture_output=True,
    )
    assert proc.returncode == 2
