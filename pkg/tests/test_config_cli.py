import json
from pathlib import Path

import numpy as np
import pytest

from telespin.cli import main
from telespin.config import ConfigError, config_from_tree, load_config, parse_flat
from telespin.csvio import read_csv, write_csv
from telespin.dynamics import IntegratorError

BASE_CFG = """\
schema_version = 1
bath.kappa = 2.0
bath.omega0 = 1.0
bath.gamma = 0.5
bath.beta = 0.02
noise.omega_n = 0.75
noise.nu = 1.0
noise.seed = 11
system.epsilon0 = 1.0
grid.horizon = 6.0
grid.t2 = 2.0
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE_CFG)
    return path


class TestConfigParsing:
    def test_round_trip(self, cfg_file):
        cfg = load_config(cfg_file)
        assert cfg.bath.kappa == 2.0
        assert cfg.noise.seed == 11
        assert cfg.grid.t2 == 2.0
        assert cfg.run.mode == "both"

    def test_missing_required_field_names_path(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("schema_version = 1\nbath.kappa = 2.0\n")
        with pytest.raises(ConfigError, match="bath.omega0"):
            load_config(path)

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="bath"):
            parse_flat("schema_version = 1\nbath.krapa = 2.0\n")

    def test_schema_version_required(self):
        with pytest.raises(ConfigError, match="schema_version"):
            config_from_tree(parse_flat("bath.kappa = 2.0\n"))

    def test_schema_version_checked(self):
        with pytest.raises(ConfigError, match="schema_version"):
            parse_flat("schema_version = 2\n")

    def test_overrides(self, cfg_file):
        cfg = load_config(cfg_file, overrides={"noise.seed": 99,
                                               "run.mode": "qrt"})
        assert cfg.noise.seed == 99
        assert cfg.run.mode == "qrt"

    def test_sweep_lists(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text(BASE_CFG + "sweep.nu = [0.5, 1.0]\nsweep.omega_n = [0.75]\n")
        cfg = load_config(path)
        assert cfg.sweep.nu == (0.5, 1.0)

    def test_dt_guard(self, tmp_path):
        path = tmp_path / "g.cfg"
        path.write_text(BASE_CFG + "grid.dt = 0.5\n")
        with pytest.raises(ConfigError, match="resolution bound"):
            load_config(path).resolve_ts()

    def test_resolved_grid_even(self, cfg_file):
        ts = load_config(cfg_file).resolve_ts()
        assert (len(ts) - 1) % 2 == 0
        assert ts[0] == 0.0


class TestCsvIo:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "x.csv"
        cols = {"t": np.array([0.0, 0.1]), "v": np.array([1.0, -2.5e-17])}
        write_csv(path, cols, {"seed": 3, "label": "demo"})
        meta, back = read_csv(path)
        assert meta["seed"] == 3
        assert np.array_equal(back["t"], cols["t"])
        assert np.array_equal(back["v"], cols["v"])

    def test_seventeen_digits(self, tmp_path):
        path = tmp_path / "x.csv"
        value = 1.0 / 3.0
        write_csv(path, {"v": np.array([value])}, {})
        _, back = read_csv(path)
        assert back["v"][0] == value


class TestCli:
    def test_dynamics_outputs(self, cfg_file, tmp_path):
        out = tmp_path / "out"
        rc = main(["dynamics", "--config", str(cfg_file), "--out", str(out)])
        assert rc == 0
        for name in ("single_time.csv", "qrt.csv", "qrt_plus.csv",
                     "resolved_config.json"):
            assert (out / name).exists()
        resolved = json.loads((out / "resolved_config.json").read_text())
        assert resolved["noise.seed"] == 11
        assert "t2" in resolved

    def test_rerun_byte_identical(self, cfg_file, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["dynamics", "--config", str(cfg_file), "--out", str(out1)])
        main(["dynamics", "--config", str(cfg_file), "--out", str(out2)])
        for name in ("single_time.csv", "qrt.csv", "qrt_plus.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_mode_flag_limits_outputs(self, cfg_file, tmp_path):
        out = tmp_path / "qrt_only"
        main(["dynamics", "--config", str(cfg_file), "--out", str(out),
              "--mode", "qrt"])
        assert (out / "qrt.csv").exists()
        assert not (out / "qrt_plus.csv").exists()

    def test_spectrum_outputs(self, cfg_file, tmp_path):
        out = tmp_path / "spec"
        rc = main(["spectrum", "--config", str(cfg_file), "--out", str(out)])
        assert rc == 0
        report = json.loads((out / "peaks.json").read_text())
        assert "absorption" in report and "emission" in report
        assert (out / "absorption.csv").exists()
        assert (out / "emission.csv").exists()

    def test_degenerate_spectrum_empty_peaks(self, tmp_path):
        # V = 0 with an excited initial state leaves the absorption
        # correlator identically zero
        path = tmp_path / "deg.cfg"
        path.write_text(BASE_CFG + "system.v = 0.0\n")
        out = tmp_path / "deg"
        assert main(["spectrum", "--config", str(path), "--out", str(out)]) == 0
        report = json.loads((out / "peaks.json").read_text())
        assert report["absorption"]["peaks"] == []

    def test_bad_config_exit_code(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("schema_version = 1\nbath.kappa = 2.0\n")
        assert main(["dynamics", "--config", str(path), "--out",
                     str(tmp_path / "x")]) == 2

    def test_missing_config_exit_code(self, tmp_path):
        assert main(["dynamics", "--config", str(tmp_path / "none.cfg"),
                     "--out", str(tmp_path / "x")]) == 2

    def test_integrator_failure_exit_code(self, cfg_file, tmp_path, monkeypatch):
        import telespin.runner as runner

        def boom(cfg, out, dump_kernels=None):
            raise IntegratorError("forced failure")

        monkeypatch.setattr(runner, "run_dynamics", boom)
        assert main(["dynamics", "--config", str(cfg_file), "--out",
                     str(tmp_path / "x")]) == 3


class TestSweep:
    def _sweep_cfg(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text(BASE_CFG + "sweep.nu = [0.5, 1.0]\n"
                                   "sweep.omega_n = [0.5, 1.0]\n")
        return path

    def test_rows_and_order(self, tmp_path):
        path = self._sweep_cfg(tmp_path)
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", str(path), "--out", str(out)]) == 0
        meta, cols = read_csv(out / "sweep.csv")
        assert len(cols["nu"]) == 4
        assert list(cols["nu"]) == [0.5, 0.5, 1.0, 1.0]
        assert list(cols["omega_n"]) == [0.5, 1.0, 0.5, 1.0]
        assert np.all(np.asarray(cols["kubo"])
                      == np.asarray(cols["omega_n"]) / np.asarray(cols["nu"]))

    def test_worker_count_invariance(self, tmp_path):
        path = self._sweep_cfg(tmp_path)
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        main(["sweep", "--config", str(path), "--out", str(out1),
              "--workers", "1"])
        main(["sweep", "--config", str(path), "--out", str(out2),
              "--workers", "2"])
        body1 = (out1 / "sweep.csv").read_bytes()
        body2 = (out2 / "sweep.csv").read_bytes()
        # the worker count is echoed in the header; the data must be identical
        strip = lambda b: b"\n".join(
            l for l in b.splitlines() if not l.startswith(b"# run.workers")
        )
        assert strip(body1) == strip(body2)

    def test_single_cell_matches_dynamics_pipeline(self, tmp_path):
        # 1x1 sweep equals the dynamics+analysis pipeline on the same config
        from telespin.analysis import fit_exponential
        from telespin.config import load_config
        from telespin.runner import compute_series, sweep_cell

        path = tmp_path / "one.cfg"
        path.write_text(BASE_CFG + "sweep.nu = [1.0]\nsweep.omega_n = [0.75]\n")
        cfg = load_config(path)
        cell_cfg = type(cfg)(bath=cfg.bath, noise=cfg.noise, system=cfg.system,
                             grid=cfg.grid, run=cfg.run, sweep=None)
        cell = sweep_cell(cell_cfg)
        _, series = compute_series(cell_cfg, mode="qrt")
        fit = fit_exponential(series.t1, series.qrt[:, 0].real)
        assert cell["k"] == pytest.approx(fit.k, rel=1e-12)


class TestValidateCommand:
    def test_small_validation_run(self, tmp_path):
        path = tmp_path / "v.cfg"
        path.write_text(BASE_CFG)
        out = tmp_path / "val"
        rc = main(["validate", "--config", str(path), "--out", str(out),
                   "--paths", "200"])
        assert rc == 0
        report = json.loads((out / "validation.json").read_text())
        assert report["n_paths"] == 200
        assert set(report) >= {"max_std_dev_zz", "max_std_dev_pm",
                               "max_std_dev_mp", "passed", "threshold"}
        assert (out / "validate_zz.csv").exists()
