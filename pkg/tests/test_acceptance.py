"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured figures.

Criteria:
  1. backprop gradients match central finite differences (20+ cases, <10 s)
  2. identification protocol: 1500-sample pump run, 75/25 split, banded
     residuals contain >=99% of a fresh normal stream at zeta=3
  3. pump-degradation detection: fixed band alarms with delay <200 min and
     zero pre-onset false alarms; adaptive monitor also detects (<30 s)
  4. threshold statistics match a brute-force oracle to 1e-12; Gaussian
     exceedance at zeta=3 matches 2*Phi(-3) within 3 Monte Carlo SE
  5. Savitzky-Golay polynomial pass-through and the classic 5-point
     quadratic weights
  6. classification benchmark: SVM and MLP both 100% holdout accuracy (<60 s)
  7. cumulative alarm is the OR of component latches, exhaustively
  8. the full CLI pipeline is byte-for-byte reproducible from one config
"""

import math
import statistics
import time

import numpy as np

from osmoguard import (
    FaultKind,
    FaultSpec,
    LinearSvm,
    MlpClassifier,
    Mode,
    Monitor,
    MonitorConfig,
    PlantConfig,
    ThresholdBand,
    TrainConfig,
    adaptive_band,
    confusion,
    cumulative_alarm,
    empirical_max_band,
    evaluate,
    fixed_band,
    inject_fault,
    make_benchmark,
    residual_series,
    simulate,
    train_identifier,
)
from osmoguard.cli import main as cli_main
from osmoguard.identify import gradient, init_mlp
from osmoguard.preprocessing import cleanse, fit_normalizer, normalize, savgol, savgol_coefficients

from test_identify import fd_gradient, max_relative_error


def _report(criterion: str, detail: str) -> None:
    print(f"[acceptance] {criterion}: PASS ({detail})")


def _train_pump_identifier(seed=11, minutes=1500):
    """Shared identification protocol: default-config run, cleanse+normalize,
    chronological 75/25 split, 5-22-20-1 network."""
    stream = simulate(PlantConfig(seed=seed), minutes)
    cleaned, _ = cleanse(stream)
    norm = fit_normalizer(cleaned)
    prepared = normalize(norm, cleaned)
    model, history, holdout = train_identifier(prepared, "pump", TrainConfig())
    return model, history, holdout, norm, prepared


def test_01_gradient_check_against_finite_differences():
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        sizes = (5, 22, 20, 1) if trial % 2 == 0 else (3, 7, 5, 1)
        activation = "logistic" if trial % 5 == 0 else "identity"
        model = init_mlp(sizes, seed=trial, output_activation=activation)
        for l in range(len(model.weights)):
            model.weights[l] = rng.normal(0.0, 0.5, model.weights[l].shape)
            model.biases[l] = rng.normal(0.0, 0.5, model.biases[l].shape)
        X = rng.normal(size=(8, sizes[0]))
        Y = rng.normal(size=(8, 1))
        gw, gb = gradient(model, X, Y)
        fw, fb = fd_gradient(model, X, Y, h=1e-5)
        worst = max(worst, max_relative_error(gw + gb, fw + fb))
        cases += 1
    elapsed = time.perf_counter() - start
    assert cases >= 20
    assert worst < 1e-4
    assert elapsed < 10.0
    _report("1 gradient check", f"{cases} cases, max rel err {worst:.2e}, {elapsed:.1f}s")


def test_02_identification_protocol_and_band_containment():
    model, history, holdout, norm, _ = _train_pump_identifier()
    train_mse = history[-1]
    assert holdout < 5.0 * train_mse

    t, residuals = residual_series(
        model, normalize(norm, cleanse(simulate(PlantConfig(seed=11), 1500))[0]), "pump"
    )
    calibration = residuals[t < int(0.75 * 1500)]
    envelope = empirical_max_band(calibration)
    assert math.isfinite(envelope.upper) and envelope.upper > 0

    band = fixed_band(calibration, zeta=3.0)
    fresh = simulate(PlantConfig(seed=999), 5000)
    prepared = normalize(norm, cleanse(fresh)[0])
    _, fresh_residuals = residual_series(model, prepared, "pump")
    contained = np.mean([band.contains(r) for r in fresh_residuals])
    assert contained >= 0.99
    _report(
        "2 identification protocol",
        f"holdout/train {holdout / train_mse:.2f}, envelope {envelope.upper:.4f}, "
        f"fresh containment {contained:.4f}",
    )


def test_03_pump_degradation_detection():
    start = time.perf_counter()
    model, _, _, norm, _ = _train_pump_identifier()
    t, train_residuals = residual_series(
        model, normalize(norm, cleanse(simulate(PlantConfig(seed=11), 1500))[0]), "pump"
    )
    band = fixed_band(train_residuals[t < int(0.75 * 1500)], zeta=3.0)

    onset = 500
    faulted = inject_fault(
        simulate(PlantConfig(seed=77), 2000),
        FaultSpec(
            kind=FaultKind.PUMP_DEGRADATION,
            onset=onset,
            magnitude=0.2,
            ramp_minutes=60,
            target="pump",
        ),
    )
    prepared = normalize(norm, cleanse(faulted)[0])
    tk, residuals = residual_series(model, prepared, "pump")

    monitor_fixed = Monitor(
        "pump", MonitorConfig(zeta=3.0, mode=Mode.FIXED, debounce=5), fixed=band
    )
    fixed_metrics = evaluate(monitor_fixed.run(tk, residuals), prepared, onset)
    assert fixed_metrics.detected
    assert fixed_metrics.detection_delay < 200
    assert fixed_metrics.false_alarms == 0

    monitor_adaptive = Monitor(
        "pump", MonitorConfig(zeta=3.0, window=60, mode=Mode.ADAPTIVE, debounce=5)
    )
    adaptive_metrics = evaluate(monitor_adaptive.run(tk, residuals), prepared, onset)
    assert adaptive_metrics.detected

    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _report(
        "3 degradation detection",
        f"fixed delay {fixed_metrics.detection_delay} min, "
        f"adaptive delay {adaptive_metrics.detection_delay} min, {elapsed:.1f}s",
    )


def test_04_threshold_statistics_and_gaussian_exceedance():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 120))
        window = rng.normal(rng.uniform(-10, 10), rng.uniform(1e-3, 10), size=n)
        zeta = float(rng.uniform(0.5, 5.0))
        band = adaptive_band(window, zeta)
        m = statistics.mean(list(window))
        s = statistics.stdev(list(window))
        worst = max(
            worst,
            abs(band.lower - (m - zeta * s)),
            abs(band.upper - (m + zeta * s)),
            abs(fixed_band(window, zeta).lower - (m - zeta * s)),
        )
    assert worst < 1e-12

    samples = np.random.default_rng(123).standard_normal(100_000)
    band = ThresholdBand(center=0.0, spread=3.0)
    fraction = np.mean((samples < band.lower) | (samples > band.upper))
    expected = math.erfc(3.0 / math.sqrt(2.0))  # = 0.0026998
    se = math.sqrt(expected * (1.0 - expected) / 100_000)
    assert abs(fraction - expected) <= 3.0 * se
    _report(
        "4 threshold statistics",
        f"oracle gap {worst:.2e}, exceedance {fraction:.5f} vs {expected:.5f}",
    )


def test_05_savitzky_golay_exactness_and_weights():
    rng = np.random.default_rng(5)
    worst = 0.0
    for window, order in ((5, 2), (7, 3), (11, 3)):
        for _ in range(20):
            degree = int(rng.integers(0, order + 1))
            coeffs = rng.uniform(-2, 2, size=degree + 1)
            x = np.linspace(0.0, 1.0, 40)
            y = np.polyval(coeffs, x)
            worst = max(worst, float(np.abs(savgol(y, window, order) - y).max()))
    assert worst < 1e-9

    expected = np.array([-3.0, 12.0, 17.0, 12.0, -3.0]) / 35.0
    gap = float(np.abs(savgol_coefficients(5, 2) - expected).max())
    assert gap < 1e-12
    _report("5 savitzky-golay", f"poly passthrough {worst:.2e}, weight gap {gap:.2e}")


def test_06_classification_benchmark_full_accuracy():
    start = time.perf_counter()
    bench = make_benchmark(seed=0, normal_minutes=2000, faulty_minutes=2000)
    svm = LinearSvm().fit(bench.X_train, bench.y_train)
    svm_cm = confusion(svm, bench.X_holdout, bench.y_holdout)
    assert svm_cm.accuracy == 1.0

    mlp = MlpClassifier().fit(bench.X_train, bench.y_train)
    mlp_cm = confusion(mlp, bench.X_holdout, bench.y_holdout)
    assert mlp_cm.accuracy == 1.0

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _report(
        "6 classification benchmark",
        f"svm {svm_cm.accuracy:.3f}, mlp {mlp_cm.accuracy:.3f}, {elapsed:.1f}s",
    )


def test_07_cumulative_alarm_or_semantics():
    # exhaustive OR table over three components
    def monitor_with_flag(alarmed: bool) -> Monitor:
        m = Monitor(
            "c",
            MonitorConfig(zeta=3.0, mode=Mode.FIXED, debounce=1),
            fixed=ThresholdBand(0.0, 0.1),
        )
        if alarmed:
            m.run([0], [1.0])
        return m

    for bits in range(8):
        flags = [(bits >> i) & 1 == 1 for i in range(3)]
        assert cumulative_alarm([monitor_with_flag(f) for f in flags]) == any(flags)

    # the OR'ed alarm flips exactly at the earliest component latch
    band = ThresholdBand(0.0, 0.1)
    config = MonitorConfig(zeta=3.0, mode=Mode.FIXED, debounce=3)
    monitors = [Monitor(name, config, fixed=band) for name in ("pump", "ro", "edi")]
    latch_at = {"pump": 40, "ro": 25, "edi": 60}  # first out-of-band minute
    streams = {
        name: [0.0] * start + [0.5] * 100 for name, start in latch_at.items()
    }
    first_true = None
    for k in range(100):
        for name, monitor in zip(latch_at, monitors):
            monitor.step(k, streams[name][k])
        if first_true is None and cumulative_alarm(monitors):
            first_true = k
    expected_latch = min(latch_at.values()) + config.debounce - 1
    assert first_true == expected_latch
    _report("7 cumulative alarm", f"8/8 OR combinations, latch at minute {first_true}")


def test_08_end_to_end_pipeline_determinism(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(
        "plant.seed = 42\n"
        "train.epochs = 60\n"
        "train.seed = 7\n"
        "monitor.zeta = 3.0\n"
        "monitor.debounce = 5\n"
        "savgol.window = 11\n"
        "savgol.order = 3\n"
        "svm.epochs = 150\n"
    )
    artifact_names = (
        "normal.csv",
        "faulted.csv",
        "normal_prep.csv",
        "faulted_prep.csv",
        "norm.txt",
        "pump.mlp",
        "alarms.csv",
        "bands.csv",
        "clf.svm",
        "report.csv",
    )

    def run(directory):
        d = tmp_path / directory
        d.mkdir()
        c = str(config)
        assert cli_main(["simulate", "--config", c, "--minutes", "800", "--out", str(d / "normal.csv")]) == 0
        assert (
            cli_main(
                [
                    "simulate",
                    "--config",
                    c,
                    "--seed",
                    "43",
                    "--minutes",
                    "1000",
                    "--out",
                    str(d / "faulted.csv"),
                    "--fault",
                    "kind=pump_degradation,target=pump,onset=500,magnitude=0.2,ramp=60",
                ]
            )
            == 0
        )
        for name in ("normal", "faulted"):
            assert (
                cli_main(
                    [
                        "preprocess",
                        "--config",
                        c,
                        "--in",
                        str(d / f"{name}.csv"),
                        "--out",
                        str(d / f"{name}_prep.csv"),
                        "--normalizer",
                        str(d / "norm.txt"),
                        "--no-smooth",
                    ]
                )
                == 0
            )
        assert (
            cli_main(
                [
                    "train-id",
                    "--config",
                    c,
                    "--in",
                    str(d / "normal_prep.csv"),
                    "--component",
                    "pump",
                    "--model-out",
                    str(d / "pump.mlp"),
                ]
            )
            == 0
        )
        assert (
            cli_main(
                [
                    "monitor",
                    "--config",
                    c,
                    "--in",
                    str(d / "faulted_prep.csv"),
                    "--model",
                    str(d / "pump.mlp"),
                    "--component",
                    "pump",
                    "--mode",
                    "fixed",
                    "--calibrate",
                    str(d / "normal_prep.csv"),
                    "--alarms-out",
                    str(d / "alarms.csv"),
                    "--band-out",
                    str(d / "bands.csv"),
                ]
            )
            == 1
        )
        assert (
            cli_main(
                [
                    "train-clf",
                    "--config",
                    c,
                    "--in",
                    str(d / "faulted_prep.csv"),
                    "--model-out",
                    str(d / "clf.svm"),
                ]
            )
            == 0
        )
        assert (
            cli_main(
                [
                    "classify",
                    "--in",
                    str(d / "faulted_prep.csv"),
                    "--model",
                    str(d / "clf.svm"),
                    "--report-out",
                    str(d / "report.csv"),
                ]
            )
            == 0
        )
        return {name: (d / name).read_bytes() for name in artifact_names}

    first = run("one")
    second = run("two")
    assert first == second
    _report(
        "8 determinism",
        f"{len(artifact_names)} artifacts byte-identical across two runs",
    )
