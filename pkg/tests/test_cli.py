"""Command-line interface tests (exit codes, schemas, config handling)."""

import numpy as np
import pytest

from osmoguard import TimeSeriesDataset
from osmoguard.cli import main
from osmoguard.detect import read_alarms


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("OSMOGUARD_CONFIG", raising=False)
    return tmp_path


def _write_config(path, extra=""):
    path.write_text(
        "plant.seed = 42\n"
        "train.epochs = 40\n"
        "train.seed = 7\n"
        "monitor.debounce = 5\n"
        + extra
    )
    return path


class TestSimulate:
    def test_writes_requested_rows(self, workdir):
        assert main(["simulate", "--minutes", "50", "--out", "run.csv"]) == 0
        lines = (workdir / "run.csv").read_text().splitlines()
        assert len(lines) == 51  # header + rows

    def test_bad_config_names_offending_key(self, workdir, capsys):
        config = workdir / "bad.conf"
        config.write_text("plant.ro_rejection = 1.5\n")
        code = main(
            ["simulate", "--config", str(config), "--minutes", "5", "--out", "x.csv"]
        )
        assert code == 2
        assert "ro_rejection" in capsys.readouterr().err

    def test_unwritable_output_is_io_error(self, workdir):
        code = main(
            ["simulate", "--minutes", "5", "--out", "/nonexistent-dir/run.csv"]
        )
        assert code == 3

    def test_fault_flag_applied(self, workdir):
        assert (
            main(
                [
                    "simulate",
                    "--minutes",
                    "30",
                    "--out",
                    "faulty.csv",
                    "--fault",
                    "kind=sensor_bias,target=qe270_5_1,onset=10,magnitude=5.0",
                ]
            )
            == 0
        )
        ds = TimeSeriesDataset.from_csv(workdir / "faulty.csv")
        assert [lab.value for lab in ds.labels[:10]] == ["normal"] * 10
        assert [lab.value for lab in ds.labels[10:]] == ["faulty"] * 20

    def test_malformed_fault_flag_rejected(self, workdir, capsys):
        code = main(
            ["simulate", "--minutes", "5", "--out", "x.csv", "--fault", "kind=bogus,onset=1"]
        )
        assert code == 2
        assert "fault" in capsys.readouterr().err


class TestPreprocess:
    def test_clean_input_row_count_preserved(self, workdir, capsys):
        main(["simulate", "--minutes", "60", "--out", "raw.csv"])
        code = main(
            [
                "preprocess",
                "--in",
                "raw.csv",
                "--out",
                "prep.csv",
                "--normalizer",
                "norm.txt",
            ]
        )
        assert code == 0
        assert "rows_dropped=0" in capsys.readouterr().err
        prep = TimeSeriesDataset.from_csv(workdir / "prep.csv")
        assert len(prep) == 60
        assert (workdir / "norm.txt").exists()

    def test_invalid_rows_reported_on_stderr(self, workdir, capsys):
        main(
            [
                "simulate",
                "--minutes",
                "60",
                "--out",
                "raw.csv",
                "--fault",
                "kind=outage,onset=10,ramp=2",
            ]
        )
        main(
            ["preprocess", "--in", "raw.csv", "--out", "p.csv", "--normalizer", "n.txt"]
        )
        err = capsys.readouterr().err
        assert "rows_dropped=2" in err
        assert "invalid_flag=2" in err

    def test_existing_normalizer_reused(self, workdir):
        main(["simulate", "--minutes", "40", "--out", "a.csv"])
        main(["simulate", "--seed", "9", "--minutes", "40", "--out", "b.csv"])
        main(["preprocess", "--in", "a.csv", "--out", "pa.csv", "--normalizer", "norm.txt"])
        stamp = (workdir / "norm.txt").read_bytes()
        main(["preprocess", "--in", "b.csv", "--out", "pb.csv", "--normalizer", "norm.txt"])
        assert (workdir / "norm.txt").read_bytes() == stamp  # not refitted

    def test_short_series_smoothing_is_argument_error(self, workdir):
        main(["simulate", "--minutes", "5", "--out", "tiny.csv"])
        code = main(
            ["preprocess", "--in", "tiny.csv", "--out", "t.csv", "--normalizer", "n.txt"]
        )
        assert code == 2


@pytest.fixture()
def trained_pipeline(workdir):
    """Simulated + preprocessed streams and a trained pump identifier."""
    config = _write_config(workdir / "run.conf")
    main(["simulate", "--config", str(config), "--minutes", "900", "--out", "normal.csv"])
    main(
        [
            "simulate",
            "--config",
            str(config),
            "--seed",
            "43",
            "--minutes",
            "1200",
            "--out",
            "faulted.csv",
            "--fault",
            "kind=pump_degradation,target=pump,onset=600,magnitude=0.2,ramp=60",
        ]
    )
    for name in ("normal", "faulted"):
        main(
            [
                "preprocess",
                "--config",
                str(config),
                "--in",
                f"{name}.csv",
                "--out",
                f"{name}_prep.csv",
                "--normalizer",
                "norm.txt",
                "--no-smooth",
            ]
        )
    main(
        [
            "train-id",
            "--config",
            str(config),
            "--in",
            "normal_prep.csv",
            "--component",
            "pump",
            "--model-out",
            "pump.mlp",
        ]
    )
    return workdir, config


class TestTrainAndMonitor:
    def test_train_id_reports_holdout(self, trained_pipeline, capsys):
        workdir, config = trained_pipeline
        assert (workdir / "pump.mlp").exists()
        main(
            [
                "train-id",
                "--config",
                str(config),
                "--in",
                "normal_prep.csv",
                "--component",
                "pump",
                "--model-out",
                "pump2.mlp",
            ]
        )
        assert "holdout_mse=" in capsys.readouterr().out

    def test_monitor_fixed_detects_and_exits_one(self, trained_pipeline, capsys):
        workdir, config = trained_pipeline
        code = main(
            [
                "monitor",
                "--config",
                str(config),
                "--in",
                "faulted_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "fixed",
                "--calibrate",
                "normal_prep.csv",
                "--alarms-out",
                "alarms.csv",
                "--band-out",
                "bands.csv",
            ]
        )
        assert code == 1  # detection found
        alarms = read_alarms(workdir / "alarms.csv")
        assert alarms and alarms[0].timestamp >= 600
        band_lines = (workdir / "bands.csv").read_text().splitlines()
        assert band_lines[0] == "t,residual,lower,upper"
        assert len(band_lines) == 1 + 1200 - 2  # max lag trims two rows
        for line in band_lines[1:]:
            t, r, lo, hi = line.split(",")
            int(t)
            assert np.isfinite(float(r))
            float(lo), float(hi)  # nan is legal during adaptive warmup

    def test_monitor_clean_stream_exits_zero(self, trained_pipeline):
        workdir, config = trained_pipeline
        code = main(
            [
                "monitor",
                "--config",
                str(config),
                "--in",
                "normal_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "fixed",
                "--calibrate",
                "normal_prep.csv",
                "--alarms-out",
                "none.csv",
            ]
        )
        assert code == 0
        assert read_alarms(workdir / "none.csv") == []

    def test_monitor_adaptive_mode(self, trained_pipeline):
        workdir, config = trained_pipeline
        code = main(
            [
                "monitor",
                "--config",
                str(config),
                "--in",
                "faulted_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "adaptive",
                "--alarms-out",
                "ad.csv",
            ]
        )
        assert code == 1

    def test_monitor_fixed_without_calibration_is_error(self, trained_pipeline, capsys):
        workdir, config = trained_pipeline
        code = main(
            [
                "monitor",
                "--in",
                "faulted_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "fixed",
                "--alarms-out",
                "x.csv",
            ]
        )
        assert code == 2
        assert "calibrate" in capsys.readouterr().err

    def test_monitor_with_explicit_band_flag(self, trained_pipeline):
        workdir, config = trained_pipeline
        code = main(
            [
                "monitor",
                "--config",
                str(config),
                "--in",
                "faulted_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "fixed",
                "--band=-0.25,0.25",
                "--alarms-out",
                "eb.csv",
            ]
        )
        assert code == 1
        alarms = read_alarms(workdir / "eb.csv")
        assert alarms[0].band.lower == -0.25 and alarms[0].band.upper == 0.25

    def test_monitor_with_empirical_max_calibration(self, trained_pipeline):
        workdir, config = trained_pipeline
        code = main(
            [
                "monitor",
                "--config",
                str(config),
                "--in",
                "faulted_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "fixed",
                "--calibrate",
                "normal_prep.csv",
                "--calibration",
                "max",
                "--alarms-out",
                "mx.csv",
            ]
        )
        assert code == 1
        [alarm] = read_alarms(workdir / "mx.csv")[:1]
        assert alarm.band.lower == -alarm.band.upper  # zero-centered envelope

    def test_evaluate_prints_metrics(self, trained_pipeline, capsys):
        workdir, config = trained_pipeline
        main(
            [
                "monitor",
                "--config",
                str(config),
                "--in",
                "faulted_prep.csv",
                "--model",
                "pump.mlp",
                "--component",
                "pump",
                "--mode",
                "fixed",
                "--calibrate",
                "normal_prep.csv",
                "--alarms-out",
                "alarms.csv",
            ]
        )
        capsys.readouterr()
        code = main(["evaluate", "--alarms", "alarms.csv", "--truth", "faulted.csv"])
        assert code == 0
        out = capsys.readouterr().out
        assert "detected=true" in out
        assert "false_alarms=0" in out
        # explicit onset overrides the label-derived one: the single latched
        # alarm (shortly after minute 600) is now before the stated onset
        code = main(
            ["evaluate", "--alarms", "alarms.csv", "--truth", "faulted.csv", "--onset", "700"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "detected=false" in out
        assert "false_alarms=1" in out


class TestClassifyCommands:
    def test_train_and_classify(self, workdir, capsys):
        main(
            [
                "simulate",
                "--minutes",
                "400",
                "--out",
                "mix.csv",
                "--fault",
                "kind=sensor_bias,target=qe270_5_1,onset=200,magnitude=10.0",
            ]
        )
        main(["preprocess", "--in", "mix.csv", "--out", "mix_prep.csv", "--normalizer", "nm.txt"])
        code = main(
            ["train-clf", "--in", "mix_prep.csv", "--model-out", "clf.svm", "--epochs", "120"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "resubstitution:" in out and "holdout:" in out
        code = main(
            ["classify", "--in", "mix_prep.csv", "--model", "clf.svm", "--report-out", "rep.csv"]
        )
        assert code == 0
        assert "accuracy=" in capsys.readouterr().out
        lines = (workdir / "rep.csv").read_text().splitlines()
        assert lines[0] == "t,label,prediction"
        assert len(lines) == 401

    def test_single_class_input_is_argument_error(self, workdir, capsys):
        main(["simulate", "--minutes", "50", "--out", "plain.csv"])
        code = main(["train-clf", "--in", "plain.csv", "--model-out", "c.svm"])
        assert code == 2
        assert "both classes" in capsys.readouterr().err


class TestConfigHandling:
    def test_env_var_supplies_default_config(self, workdir, monkeypatch, capsys):
        config = workdir / "env.conf"
        config.write_text("plant.ro_rejection = 2.0\n")
        monkeypatch.setenv("OSMOGUARD_CONFIG", str(config))
        code = main(["simulate", "--minutes", "5", "--out", "e.csv"])
        assert code == 2
        assert "ro_rejection" in capsys.readouterr().err

    def test_flag_overrides_config_key(self, workdir):
        config = workdir / "c.conf"
        config.write_text("plant.seed = 1\n")
        main(["simulate", "--config", str(config), "--minutes", "20", "--out", "a.csv"])
        main(["simulate", "--config", str(config), "--seed", "2", "--minutes", "20", "--out", "b.csv"])
        a = TimeSeriesDataset.from_csv(workdir / "a.csv")
        b = TimeSeriesDataset.from_csv(workdir / "b.csv")
        assert not np.array_equal(a.values, b.values)

    def test_malformed_config_line_rejected(self, workdir, capsys):
        config = workdir / "m.conf"
        config.write_text("this is not a key value line\n")
        assert main(["simulate", "--config", str(config), "--minutes", "5", "--out", "x.csv"]) == 2

    def test_missing_config_file_is_io_error(self, workdir):
        assert main(["simulate", "--config", "missing.conf", "--minutes", "5", "--out", "x.csv"]) == 3


class TestDeterminism:
    def test_pipeline_reruns_byte_identical(self, workdir):
        config = _write_config(workdir / "d.conf", extra="train.epochs = 25\n")
        artifacts = {}
        for run in ("one", "two"):
            d = workdir / run
            d.mkdir()
            main(["simulate", "--config", str(config), "--minutes", "400", "--out", str(d / "raw.csv")])
            main(
                [
                    "preprocess",
                    "--config",
                    str(config),
                    "--in",
                    str(d / "raw.csv"),
                    "--out",
                    str(d / "prep.csv"),
                    "--normalizer",
                    str(d / "norm.txt"),
                    "--no-smooth",
                ]
            )
            main(
                [
                    "train-id",
                    "--config",
                    str(config),
                    "--in",
                    str(d / "prep.csv"),
                    "--component",
                    "pump",
                    "--model-out",
                    str(d / "pump.mlp"),
                ]
            )
            artifacts[run] = {
                name: (d / name).read_bytes() for name in ("raw.csv", "prep.csv", "norm.txt", "pump.mlp")
            }
        assert artifacts["one"] == artifacts["two"]
