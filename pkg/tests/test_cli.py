import numpy as np
import pytest

from chdbc import experiments as ex
from chdbc.cli import main
from chdbc.errors import ConfigError


class TestConfigParsing:
    def test_roundtrip(self):
        text = "solver.dt = 1e-2  # comment\n\n# full line comment\nseed = 7\n"
        cfg = ex.parse_config(text)
        assert cfg == {"solver.dt": "1e-2", "seed": "7"}

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ex.parse_config("solver.dx = 1\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            ex.parse_config("just words\n")

    def test_resolve_fills_defaults(self):
        cfg = ex.resolve_config({"solver.dt": "1e-2"}, seed=3)
        assert cfg["seed"] == "3"
        assert cfg["domain.kind"] == "interval"

    def test_bad_experiment_kind(self):
        with pytest.raises(ConfigError):
            ex.resolve_config({"experiment.kind": "frobnicate"})

    def test_bad_number(self):
        cfg = ex.resolve_config({"solver.dt": "fast"})
        with pytest.raises(ConfigError):
            ex.build_solver_config(cfg)


class TestManifest:
    def test_manifest_is_valid_config(self, tmp_path):
        cfg = ex.resolve_config({"solver.dt": "1e-2"}, seed=5)
        path = ex.write_manifest(cfg, tmp_path)
        reparsed = ex.parse_config(open(path).read())
        assert reparsed == cfg

    def test_version_stamp(self, tmp_path):
        from chdbc import __version__
        path = ex.write_manifest(ex.resolve_config(), tmp_path)
        assert __version__ in open(path).read()


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("nonsense.key = 1\n")
        assert main(["simulate", "--config", str(bad),
                     "--outdir", str(tmp_path / "o")]) == 2

    def test_missing_config_file_is_2(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg"),
                     "--outdir", str(tmp_path / "o")]) == 2

    def test_stationary_ok_is_0(self, tmp_path, capsys):
        rc = main(["stationary", "--potential", "logarithmic", "--K", "0.5",
                   "--outdir", str(tmp_path / "o")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "classification: Classical" in out
        assert (tmp_path / "o" / "stationary_profile.csv").exists()
        assert (tmp_path / "o" / "manifest.txt").exists()

    def test_stationary_variational(self, tmp_path, capsys):
        rc = main(["stationary", "--potential", "logarithmic", "--K", "4.0",
                   "--outdir", str(tmp_path / "o")])
        assert rc == 0
        assert "VariationalOnly" in capsys.readouterr().out


class TestSimulateDriver:
    def _cfg(self, **over):
        base = {"solver.dt": "1e-2", "domain.n": "32", "experiment.T": "0.05",
                "solver.N": "8", "experiment.amplitude": "0.3"}
        base.update(over)
        return ex.resolve_config(base, seed=1)

    def test_outputs(self, tmp_path):
        summary = ex.run_experiment(self._cfg(), tmp_path)
        assert (tmp_path / "diagnostics.csv").exists()
        assert (tmp_path / "snapshot_0000.csv").exists()
        assert summary["dissipation_violations"] == 0
        assert summary["mass_drift"] < 1e-12

    def test_byte_identical_reruns(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        ex.run_experiment(self._cfg(), d1)
        ex.run_experiment(self._cfg(), d2)
        assert (d1 / "diagnostics.csv").read_bytes() == \
            (d2 / "diagnostics.csv").read_bytes()

    def test_rerun_from_manifest(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        ex.run_experiment(self._cfg(), d1)
        cfg = ex.resolve_config(
            ex.parse_config((d1 / "manifest.txt").read_text()))
        ex.run_experiment(cfg, d2)
        assert (d1 / "diagnostics.csv").read_bytes() == \
            (d2 / "diagnostics.csv").read_bytes()


class TestSweepDrivers:
    def test_converge_n_table_shape(self, tmp_path):
        cfg = ex.resolve_config({"solver.dt": "5e-2", "domain.n": "24",
                                 "experiment.n_levels": "2",
                                 "experiment.amplitude": "0.3"})
        out = ex.run_converge_n(cfg, tmp_path, times=(0.05, 0.1, 0.15))
        assert out["rows"] == 3 * 2
        lines = (tmp_path / "converge_n.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 6

    def test_lipschitz_zero_eps_skipped(self, tmp_path):
        cfg = ex.resolve_config({"solver.dt": "1e-2", "domain.n": "24",
                                 "experiment.T": "0.05",
                                 "experiment.eps": "1e-2,1e-3"})
        out = ex.run_lipschitz(cfg, tmp_path)
        assert set(out["eps"]) == {1e-2, 1e-3}
        r = out["final_over_initial"]
        assert r[1e-2] == pytest.approx(r[1e-3], rel=0.05)

    def test_decay_outputs(self, tmp_path):
        cfg = ex.resolve_config({"solver.dt": "1e-2", "domain.n": "24",
                                 "experiment.T": "0.1",
                                 "experiment.ensemble": "3",
                                 "experiment.amplitude": "0.3"})
        out = ex.run_decay(cfg, tmp_path)
        assert out["ensemble"] == 3
        assert (tmp_path / "decay.csv").exists()
        assert out["final_diameter"] < out["initial_diameter"]


class TestInitialField:
    def test_mean_and_bounds(self):
        cfg = ex.resolve_config({"domain.n": "40"})
        ops = ex.build_operators(cfg)
        f = ex.initial_field(ops, 9, 0.5, -0.2)
        assert ops.mean(f.bulk) == pytest.approx(-0.2, abs=1e-12)
        assert np.max(np.abs(f.bulk)) < 1.0

    def test_amplitude_validation(self):
        cfg = ex.resolve_config({})
        ops = ex.build_operators(cfg)
        with pytest.raises(ConfigError):
            ex.initial_field(ops, 0, 0.9, 0.3)

    def test_seed_changes_data(self):
        cfg = ex.resolve_config({})
        ops = ex.build_operators(cfg)
        f1 = ex.initial_field(ops, 0, 0.4, 0.0)
        f2 = ex.initial_field(ops, 1, 0.4, 0.0)
        assert not np.array_equal(f1.bulk, f2.bulk)
