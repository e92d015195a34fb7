import json

import pytest

from powercast.cli import main
from powercast.config import RunConfig, config_from_dict, load_config, save_config
from powercast.errors import ConfigError
from powercast.lstm import TrainConfig
from powercast.synth import two_tone_spec, wind_solar_wave_spec

from conftest import band_limited_spec


def small_run_config(outdir, n=320, seed=1, **overrides):
    base = dict(
        synth_spec=wind_solar_wave_spec(n_samples=n, seed=7),
        seed=seed,
        k_bounds=(2, 3),
        alpha_bounds=(1e2, 1e4),
        bo_budget=4,
        bo_n_init=3,
        bo_epochs=2,
        train=TrainConfig(hidden_size=8, batch_size=32, epochs=4),
        output_dir=str(outdir),
    )
    base.update(overrides)
    return RunConfig(**base)


def write_config(config, path):
    save_config(config, path)
    return str(path)


class TestConfigRoundTrip:
    def test_lossless_json_round_trip(self, tmp_path):
        config = small_run_config(tmp_path / "out")
        path = tmp_path / "cfg.json"
        save_config(config, path)
        reloaded = load_config(path)
        assert reloaded == config
        assert reloaded.config_hash() == config.config_hash()

    def test_exactly_one_source(self):
        with pytest.raises(ConfigError):
            RunConfig(csv_path="x.csv", synth_spec=two_tone_spec())
        with pytest.raises(ConfigError):
            RunConfig()

    def test_hash_ignores_output_dir_and_jobs(self, tmp_path):
        a = small_run_config(tmp_path / "a")
        b = small_run_config(tmp_path / "b", jobs=2)
        assert a.config_hash() == b.config_hash()

    def test_bad_structure_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"data": {"synth": {"n_samples": 100}}})


class TestSynthCommand:
    def test_default_fixture_shape(self, tmp_path, capsys):
        code = main(["synth", "--outdir", str(tmp_path / "out")])
        assert code == 0
        lines = (tmp_path / "out" / "synthetic.csv").read_text().strip().splitlines()
        assert len(lines) == 4001
        assert lines[0] == "timestamp,wind,solar,wave"
        assert len(lines[1].split(",")) == 4
        assert "N=4000 C=3" in capsys.readouterr().out

    def test_seed_repeat_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            assert main(["synth", "--outdir", str(tmp_path / name), "--seed", "9"]) == 0
        assert (tmp_path / "a" / "synthetic.csv").read_bytes() == (
            tmp_path / "b" / "synthetic.csv"
        ).read_bytes()

    def test_overrides_echoed_in_effective_config(self, tmp_path):
        out = tmp_path / "out"
        assert main(["synth", "--outdir", str(out), "--n", "100", "--seed", "7"]) == 0
        effective = json.loads((out / "effective_config.json").read_text())
        assert effective["data"]["synth"]["n_samples"] == 100
        assert effective["data"]["synth"]["seed"] == 7
        assert effective["seed"] == 7
        assert len((out / "synthetic.csv").read_text().strip().splitlines()) == 101


class TestDecomposeCommand:
    def test_two_tone_omega(self, tmp_path):
        config = RunConfig(
            synth_spec=two_tone_spec(n_samples=2000),
            output_dir=str(tmp_path / "out"),
        )
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["decompose", "--config", path, "--k", "2", "--alpha", "2000"]) == 0
        lines = (tmp_path / "out" / "modes" / "omega.csv").read_text().strip().splitlines()
        omegas = sorted(float(line.split(",")[1]) for line in lines[1:])
        assert abs(omegas[0] - 0.05) < 1e-3
        assert abs(omegas[1] - 0.20) < 1e-3

    def test_k_zero_rejected(self, tmp_path):
        config = RunConfig(
            synth_spec=two_tone_spec(n_samples=500), output_dir=str(tmp_path / "out")
        )
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["decompose", "--config", path, "--k", "0", "--alpha", "2000"]) == 2

    def test_diagnostics_reconstruction(self, tmp_path):
        config = RunConfig(
            synth_spec=band_limited_spec(n_samples=2000),
            mvmd_tau=0.5,
            output_dir=str(tmp_path / "out"),
        )
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["decompose", "--config", path, "--k", "2", "--alpha", "2000"]) == 0
        diag = json.loads((tmp_path / "out" / "modes" / "diagnostics.json").read_text())
        assert all(v < 1e-2 for v in diag["reconstruction_error"].values())


class TestTuneCommand:
    def run_tune(self, tmp_path, name, budget=4):
        out = tmp_path / name
        config = small_run_config(out)
        path = write_config(config, tmp_path / f"{name}.json")
        assert main(["tune", "--config", path, "--budget", str(budget)]) == 0
        return out

    def test_trial_rows_and_incumbent(self, tmp_path):
        out = self.run_tune(tmp_path, "t", budget=4)
        lines = (out / "trials.csv").read_text().strip().splitlines()
        assert len(lines) == 5
        objectives = [float(line.split(",")[3]) for line in lines[1:]]
        flags = [line.split(",")[4] for line in lines[1:]]
        best = json.loads((out / "best_params.json").read_text())
        finite = [o for o, f in zip(objectives, flags) if f != "failed"]
        assert best["objective"] == min(finite)
        assert all(best["objective"] <= o for o in finite)

    def test_seed_repeatability_modulo_walltime(self, tmp_path):
        outs = [self.run_tune(tmp_path, name) for name in ("r1", "r2")]
        tables = []
        for out in outs:
            rows = (out / "trials.csv").read_text().strip().splitlines()[1:]
            tables.append([row.rsplit(",", 1)[0] for row in rows])  # drop seconds
        assert tables[0] == tables[1]


class TestRunCommand:
    def test_full_run_artifacts_and_consistency(self, tmp_path):
        out = tmp_path / "out"
        config = small_run_config(out)
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["run", "--config", path]) == 0
        report = json.loads((out / "report.json").read_text())
        for key in ("proposed", "baseline", "improvements", "tuned", "config_hash"):
            assert key in report
        # Improvement entries recompute from the report's own metrics.
        for group, block in report["improvements"].items():
            for metric, value in block.items():
                base = report["baseline"][group][metric]
                prop = report["proposed"][group][metric]
                assert value == pytest.approx((base - prop) / base, abs=1e-12)
        # RMSE dominates MAE everywhere.
        for table in (report["proposed"], report["baseline"]):
            for block in table.values():
                assert block["rmse"] >= block["mae"] - 1e-12
        for artifact in (
            "forecast_vs_actual.csv",
            "trials.csv",
            "best_params.json",
            "timings.json",
            "effective_config.json",
        ):
            assert (out / artifact).exists()
        traces = list((out / "losses").glob("loss_ch*_mode*.csv"))
        assert len(traces) == 3 * report["tuned"]["K"]
        header = (out / "forecast_vs_actual.csv").read_text().splitlines()[0]
        assert header == (
            "t,actual_wind,actual_solar,actual_wave,"
            "pred_wind,pred_solar,pred_wave,actual_total,pred_total"
        )

    def test_outputs_confined_to_outdir(self, tmp_path, monkeypatch):
        workdir = tmp_path / "cwd"
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        out = tmp_path / "only_here"
        config = small_run_config(out)
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["run", "--config", str(path)]) == 0
        assert list(workdir.iterdir()) == []

    def test_phase_tagged_failure_exit_code(self, tmp_path, capsys):
        config = small_run_config(tmp_path / "out", n=40)  # too short to split
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["run", "--config", path]) == 3
        assert "[phase: preprocess]" in capsys.readouterr().err

    def test_numeric_failure_exit_code(self, tmp_path):
        # Every tuning trial asks for more modes than the series can
        # resolve, so the optimizer ends with zero successes.
        config = small_run_config(tmp_path / "out", k_bounds=(70, 80))
        path = write_config(config, tmp_path / "cfg.json")
        assert main(["run", "--config", path]) == 4


class TestVerifyTablesCommand:
    def test_passes(self, capsys):
        assert main(["verify-tables"]) == 0
        out = capsys.readouterr().out
        assert "0 mismatches" in out
        assert "KNOWN-INCONSISTENT" in out

    def test_verbose_lists_all(self, capsys):
        assert main(["verify-tables", "--verbose"]) == 0
        out = capsys.readouterr().out
        assert out.count("\n") >= 150


class TestParser:
    def test_help_lists_subcommands(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for sub in ("synth", "decompose", "tune", "run", "verify-tables"):
            assert sub in out

    def test_unknown_flag_is_hard_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["synth", "--nonsense"])
        assert exc.value.code == 2

    def test_subcommand_help_lists_flags(self, capsys):
        with pytest.raises(SystemExit):
            main(["run", "--help"])
        out = capsys.readouterr().out
        for flag in ("--config", "--outdir", "--seed", "--jobs"):
            assert flag in out
