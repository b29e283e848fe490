import csv
import json
import os

import numpy as np
import pytest

from hybridbcs import cli
from hybridbcs.errors import ConfigurationError


def base_config(tmp_path, **time_overrides):
    time_section = {"t_max_w": 20.0, "samples": 30, "spacing": "log"}
    time_section.update(time_overrides)
    return {
        "band": {"width": 1.0, "n_modes": 64},
        "interaction": {"u_over_w": 1.0},
        "dissipation": {"gamma_over_u": 0.08, "p_over_u": 0.0, "alpha": 1.0},
        "time": time_section,
        "output": {"path": str(tmp_path / "out.csv")},
    }


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows)


def test_validate_rejects_unknown_keys(tmp_path):
    cfg = base_config(tmp_path)
    cfg["band"]["wdith"] = 1.0
    with pytest.raises(ConfigurationError, match="band.wdith"):
        cli.validate_config(cfg)
    cfg = base_config(tmp_path)
    cfg["nonsense"] = {}
    with pytest.raises(ConfigurationError, match="nonsense"):
        cli.validate_config(cfg)


def test_validate_rejects_wrong_types(tmp_path):
    cfg = base_config(tmp_path)
    cfg["band"]["n_modes"] = 64.5
    with pytest.raises(ConfigurationError, match="band.n_modes"):
        cli.validate_config(cfg)
    cfg = base_config(tmp_path)
    cfg["dissipation"]["alpha"] = True
    with pytest.raises(ConfigurationError, match="dissipation.alpha"):
        cli.validate_config(cfg)
    cfg = base_config(tmp_path)
    cfg["time"]["spacing"] = "cubic"
    with pytest.raises(ConfigurationError, match="spacing"):
        cli.validate_config(cfg)


def test_validate_rejects_missing_sections(tmp_path):
    cfg = base_config(tmp_path)
    del cfg["interaction"]
    with pytest.raises(ConfigurationError, match="interaction"):
        cli.validate_config(cfg)
    cfg = base_config(tmp_path)
    del cfg["time"]["samples"]
    with pytest.raises(ConfigurationError, match="time.samples"):
        cli.validate_config(cfg)


def test_resolve_fills_defaults(tmp_path):
    cfg = cli.resolve_config(base_config(tmp_path))
    assert cfg["dissipation"]["alpha_pump"] == cfg["dissipation"]["alpha"]
    assert cfg["integrator"]["rtol"] == 1e-9
    assert cfg["integrator"]["atol"] == 1e-12
    assert cfg["output"]["track_energies"] == []


def test_run_writes_csv_and_sidecar(tmp_path):
    cfg = base_config(tmp_path)
    cfg["output"]["track_energies"] = [-0.1, 0.1]
    config_path = write_config(tmp_path, cfg)
    assert cli.main(["run", "--config", config_path]) == 0

    header, data = read_csv(tmp_path / "out.csv")
    assert header[:6] == ["t_w", "n", "re_delta", "im_delta", "abs_delta",
                          "zeta_mean"]
    # Two tracked modes, four per-mode columns each.
    assert len(header) == 6 + 8
    assert data.shape == (30, 14)
    assert np.all(np.diff(data[:, 0]) > 0)
    assert np.allclose(data[:, 4], np.abs(data[:, 2] + 1j * data[:, 3]))

    with open(tmp_path / "out.json") as handle:
        sidecar = json.load(handle)
    assert sidecar["config"]["dissipation"]["alpha_pump"] == 1.0
    assert len(sidecar["grid_checksum"]) == 64
    assert len(sidecar["tracked_modes"]) == 2
    # Requested energies are snapped to grid modes and echoed back.
    for requested, snapped in zip([-0.1, 0.1], sidecar["tracked_energies"]):
        assert abs(requested - snapped) < 1.0 / 64
    assert sidecar["integrator"]["steps"] > 0


def test_run_reproduces_from_sidecar(tmp_path):
    config_path = write_config(tmp_path, base_config(tmp_path))
    assert cli.main(["run", "--config", config_path]) == 0
    first = (tmp_path / "out.csv").read_bytes()

    with open(tmp_path / "out.json") as handle:
        sidecar = json.load(handle)
    replay = sidecar["config"]
    replay["output"]["path"] = str(tmp_path / "replay.csv")
    # max_step_w resolves to infinity, which JSON spells as Infinity.
    replay_path = write_config(tmp_path, replay, "replay.json")
    assert cli.main(["run", "--config", replay_path]) == 0
    assert (tmp_path / "replay.csv").read_bytes() == first


def test_run_bad_config_exit_code(tmp_path, capsys):
    cfg = base_config(tmp_path)
    cfg["interaction"]["u_over_w"] = 0.01  # below the pairing threshold
    config_path = write_config(tmp_path, cfg)
    assert cli.main(["run", "--config", config_path]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) \
        == cli.EXIT_CONFIG


def test_run_revival_guard_exit_code(tmp_path, capsys):
    cfg = base_config(tmp_path, t_max_w=1000.0)  # guard at 64 modes ~ 161
    config_path = write_config(tmp_path, cfg)
    assert cli.main(["run", "--config", config_path]) == cli.EXIT_CONFIG


def test_fit_command(tmp_path, capsys):
    path = tmp_path / "series.csv"
    t = np.geomspace(1.0, 100.0, 60)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t_w", "n"])
        for ti in t:
            writer.writerow([f"{ti:.17e}", f"{2.0 * ti ** -2.0:.17e}"])
    assert cli.main(["fit", "--input", str(path), "--column", "n",
                     "--window", "1,100"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["exponent"] + 2.0) < 1e-10
    assert report["column"] == "n"

    assert cli.main(["fit", "--input", str(path), "--column", "zeta_mean",
                     "--window", "1,100"]) == cli.EXIT_CONFIG
    assert cli.main(["fit", "--input", str(path), "--column", "n",
                     "--window", "banana"]) == cli.EXIT_CONFIG


def test_scan_summary(tmp_path):
    cfg = base_config(tmp_path, samples=20)
    config_path = write_config(tmp_path, cfg)
    assert cli.main(["scan", "--config", config_path, "--axis", "alpha",
                     "--values", "1.0,0.0"]) == 0
    summary = tmp_path / "out_alpha_summary.csv"
    with open(summary, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0][:3] == ["alpha", "path", "status"]
    assert len(rows) == 3
    assert all(row[2] == "ok" for row in rows[1:])
    assert os.path.exists(tmp_path / "out_alpha_1.csv")
    assert os.path.exists(tmp_path / "out_alpha_0.csv")
    assert os.path.exists(tmp_path / "out_alpha_0.json")


def test_scan_empty_values_exit_code(tmp_path):
    config_path = write_config(tmp_path, base_config(tmp_path))
    assert cli.main(["scan", "--config", config_path, "--axis", "alpha",
                     "--values", ","]) == cli.EXIT_CONFIG
    assert cli.main(["scan", "--config", config_path, "--axis", "alpha",
                     "--values", "abc"]) == cli.EXIT_CONFIG


def test_scan_tolerates_single_failed_run(tmp_path, monkeypatch):
    calls = {"count": 0}
    real = cli._scan_one

    def flaky(job):
        calls["count"] += 1
        if calls["count"] == 1:
            raise RuntimeError("synthetic failure")
        return real(job)

    monkeypatch.setattr(cli, "_scan_one", flaky)
    cfg = base_config(tmp_path, samples=15)
    config_path = write_config(tmp_path, cfg)
    code = cli.main(["scan", "--config", config_path, "--axis", "gamma",
                     "--values", "0.08,0.16"])
    assert code == cli.EXIT_INTEGRATION
    with open(tmp_path / "out_gamma_summary.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    statuses = [row[2] for row in rows[1:]]
    assert statuses[0].startswith("failed")
    assert statuses[1] == "ok"


def test_scan_workers_give_identical_output(tmp_path, monkeypatch):
    cfg = base_config(tmp_path, samples=15)
    cfg["output"]["path"] = str(tmp_path / "serial.csv")
    config_path = write_config(tmp_path, cfg, "serial.json")
    assert cli.main(["scan", "--config", config_path, "--axis", "alpha",
                     "--values", "1.0,0.5"]) == 0

    cfg["output"]["path"] = str(tmp_path / "pooled.csv")
    config_path = write_config(tmp_path, cfg, "pooled.json")
    monkeypatch.setenv("HYBRIDBCS_WORKERS", "2")
    assert cli.main(["scan", "--config", config_path, "--axis", "alpha",
                     "--values", "1.0,0.5"]) == 0
    for value in ("1", "0.5"):
        serial = (tmp_path / f"serial_alpha_{value}.csv").read_bytes()
        pooled = (tmp_path / f"pooled_alpha_{value}.csv").read_bytes()
        assert serial == pooled


def test_worker_count_env_validation(monkeypatch):
    class Args:
        workers = None

    monkeypatch.setenv("HYBRIDBCS_WORKERS", "3")
    assert cli._worker_count(Args()) == 3
    monkeypatch.setenv("HYBRIDBCS_WORKERS", "zero")
    with pytest.raises(ConfigurationError):
        cli._worker_count(Args())
    monkeypatch.setenv("HYBRIDBCS_WORKERS", "0")
    with pytest.raises(ConfigurationError):
        cli._worker_count(Args())
    monkeypatch.delenv("HYBRIDBCS_WORKERS")
    assert cli._worker_count(Args()) == 1


def test_oracle_command(capsys):
    assert cli.main(["oracle", "--seeds", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4
    assert "all checks passed" in out


def test_oracle_corrupt_exit_code(capsys):
    assert cli.main(["oracle", "--seeds", "2", "--corrupt", "pairing"]) \
        == cli.EXIT_ORACLE
    assert "[FAIL]" in capsys.readouterr().out


def test_oracle_bad_sites(capsys):
    assert cli.main(["oracle", "--sites", "5"]) == cli.EXIT_CONFIG
