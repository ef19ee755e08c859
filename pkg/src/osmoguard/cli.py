"""Command-line entry point wiring the toolkit into reproducible pipelines.

Exit codes: 0 success, 1 alarm fired (monitor only, so shell pipelines can
branch on detection), 2 configuration/argument error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import LinearSvm, confusion, frame_labels
from .config import (
    CONFIG_ENV_VAR,
    cleanse_ranges_from,
    fault_from_flag,
    faults_from_config,
    load_config,
    monitor_config_from,
    plant_config_from,
    savgol_from,
    train_config_from,
)
from .dataset import TimeSeriesDataset
from .detect import (
    Mode,
    Monitor,
    ThresholdBand,
    empirical_max_band,
    evaluate,
    fixed_band,
    read_alarms,
    write_alarms,
)
from .identify import design_matrix, forward_batch, init_mlp, load_mlp, save_mlp, train
from .pipelines import DEFAULT_HIDDEN_LAYERS, component_spec
from .preprocessing import Normalizer, cleanse, fit_normalizer, normalize, smooth
from .simulator import inject_fault, simulate

BAND_HEADER = "t,residual,lower,upper"


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    plant = plant_config_from(cfg, seed=args.seed)
    dataset = simulate(plant, args.minutes)
    faults = faults_from_config(cfg)
    faults.extend(fault_from_flag(flag) for flag in args.fault or [])
    for fault in faults:
        dataset = inject_fault(dataset, fault)
    dataset.to_csv(args.out)
    return 0


def cmd_preprocess(args) -> int:
    cfg = load_config(args.config)
    dataset = TimeSeriesDataset.from_csv(args.input)
    cleaned, report = cleanse(dataset, cleanse_ranges_from(cfg))
    print(report, file=sys.stderr)

    normalizer_path = Path(args.normalizer)
    if normalizer_path.exists() and not args.refit:
        norm = Normalizer.load(normalizer_path)
    else:
        norm = fit_normalizer(cleaned)
        norm.save(normalizer_path)
    out = normalize(norm, cleaned)

    if not args.no_smooth:
        out = smooth(out, savgol_from(cfg, args.savgol_window, args.savgol_order))
    out.to_csv(args.out)
    return 0


def cmd_train_id(args) -> int:
    cfg = load_config(args.config)
    dataset = TimeSeriesDataset.from_csv(args.input)
    spec = component_spec(args.component)
    tcfg = train_config_from(
        cfg,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.train_seed,
        train_fraction=args.train_fraction,
        shuffle=True if args.random_split else None,
    )
    _, X, Y = design_matrix(dataset, spec)
    model = init_mlp((spec.size, *DEFAULT_HIDDEN_LAYERS, 1), seed=tcfg.seed)
    trained, history, holdout_mse = train(model, (X, Y), tcfg)
    save_mlp(trained, args.model_out)
    final_train = history[-1] if history else float("nan")
    print(f"component={args.component} train_mse={final_train!r} holdout_mse={holdout_mse!r}")
    return 0


def _calibrated_band(args, model, spec, zeta: float) -> ThresholdBand:
    if args.band:
        try:
            lo, hi = (float(v) for v in args.band.split(","))
        except ValueError:
            raise ValueError(f"--band expects `lower,upper`, got {args.band!r}") from None
        if not lo <= hi:
            raise ValueError(f"--band expects lower <= upper, got {args.band!r}")
        return ThresholdBand.from_edges(lo, hi)
    if not args.calibrate:
        raise ValueError("fixed mode needs --calibrate <normal-data csv> or --band lo,hi")
    calibration = TimeSeriesDataset.from_csv(args.calibrate)
    _, X, Y = design_matrix(calibration, spec)
    residuals = Y - forward_batch(model, X)[:, 0]
    if args.calibration == "max":
        return empirical_max_band(residuals)
    return fixed_band(residuals, zeta)


def cmd_monitor(args) -> int:
    cfg = load_config(args.config)
    mcfg = monitor_config_from(
        cfg,
        component=args.component,
        zeta=args.zeta,
        window=args.window,
        mode=Mode(args.mode) if args.mode else None,
        debounce=args.debounce,
    )
    dataset = TimeSeriesDataset.from_csv(args.input)
    model = load_mlp(args.model)
    spec = component_spec(args.component)
    band = (
        _calibrated_band(args, model, spec, mcfg.zeta)
        if mcfg.mode is Mode.FIXED
        else None
    )

    t, X, Y = design_matrix(dataset, spec)
    residuals = Y - forward_batch(model, X)[:, 0]

    monitor = Monitor(args.component, mcfg, fixed=band)
    events = []
    band_lines = [BAND_HEADER]
    for k, r in zip(t, residuals):
        event = monitor.step(int(k), float(r))
        if event is not None:
            events.append(event)
        current = monitor.last_band
        lower = repr(current.lower) if current else "nan"
        upper = repr(current.upper) if current else "nan"
        band_lines.append(f"{int(k)},{float(r)!r},{lower},{upper}")

    write_alarms(events, args.alarms_out)
    if args.band_out:
        Path(args.band_out).write_text("\n".join(band_lines) + "\n", encoding="utf-8")
    for event in events:
        print(
            f"alarm component={event.component} t={event.timestamp} "
            f"residual={event.residual!r} band=[{event.band.lower!r},{event.band.upper!r}] "
            f"mode={event.mode.value}"
        )
    return 1 if events else 0


def cmd_train_clf(args) -> int:
    cfg = load_config(args.config)
    dataset = TimeSeriesDataset.from_csv(args.input)
    X = dataset.values
    y = frame_labels(dataset)

    defaults = LinearSvm()
    lambda_ = (
        args.svm_lambda
        if args.svm_lambda is not None
        else float(cfg.get("svm.lambda", defaults.lambda_))
    )
    epochs = args.epochs if args.epochs is not None else int(cfg.get("svm.epochs", defaults.epochs))
    seed = args.train_seed if args.train_seed is not None else int(cfg.get("svm.seed", defaults.seed))
    holdout_fraction = args.holdout_fraction

    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(y))
    n_holdout = int(len(y) * holdout_fraction)
    holdout_idx, train_idx = perm[:n_holdout], perm[n_holdout:]

    model = LinearSvm(lambda_=lambda_, epochs=epochs, seed=seed)
    model.fit(X[train_idx], y[train_idx])
    model.save(args.model_out)
    print(f"resubstitution: {confusion(model, X[train_idx], y[train_idx])}")
    if n_holdout:
        print(f"holdout: {confusion(model, X[holdout_idx], y[holdout_idx])}")
    return 0


def cmd_classify(args) -> int:
    dataset = TimeSeriesDataset.from_csv(args.input)
    model = LinearSvm.load(args.model)
    X = dataset.values
    y = frame_labels(dataset)
    predictions = model.predict(X)
    print(confusion(model, X, y))
    if args.report_out:
        lines = ["t,label,prediction"]
        for k, truth, pred in zip(dataset.t, y, predictions):
            lines.append(f"{int(k)},{int(truth)},{int(pred)}")
        Path(args.report_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_evaluate(args) -> int:
    alarms = read_alarms(args.alarms)
    truth = TimeSeriesDataset.from_csv(args.truth)
    if args.onset is not None:
        onset = args.onset
    else:
        faulty = [int(t) for t, lab in zip(truth.t, truth.labels) if lab.value == "faulty"]
        if not faulty:
            raise ValueError("truth stream has no faulty frames; pass --onset explicitly")
        onset = faulty[0]
    print(evaluate(alarms, truth, onset))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osmoguard",
        description="Simulate, preprocess, identify, monitor, and classify "
        "purification-line sensor streams.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument(
            "--config",
            help=f"flat key=value config file (default: ${CONFIG_ENV_VAR} if set)",
        )

    p = sub.add_parser("simulate", help="generate a synthetic sensor stream CSV")
    add_config(p)
    p.add_argument("--minutes", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--fault",
        action="append",
        help="injected fault, e.g. kind=sensor_bias,target=pt270_5_4,onset=50,"
        "magnitude=0.3,ramp=10 (repeatable)",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="cleanse, normalize, and smooth a stream")
    add_config(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--normalizer", required=True, help="normalizer file (loaded if present)")
    p.add_argument("--refit", action="store_true", help="refit the normalizer even if the file exists")
    p.add_argument("--savgol-window", type=int)
    p.add_argument("--savgol-order", type=int)
    p.add_argument("--no-smooth", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-id", help="train a component identifier network")
    add_config(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--component", required=True, choices=("pump", "ro", "edi"))
    p.add_argument("--model-out", required=True)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--train-seed", type=int)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--random-split", action="store_true")
    p.set_defaults(func=cmd_train_id)

    p = sub.add_parser("monitor", help="run a residual monitor over a stream")
    add_config(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--component", required=True, choices=("pump", "ro", "edi"))
    p.add_argument("--mode", choices=("fixed", "adaptive"))
    p.add_argument("--zeta", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--debounce", type=int)
    p.add_argument("--alarms-out", required=True)
    p.add_argument("--band-out", help="per-step band CSV (t,residual,lower,upper)")
    p.add_argument("--calibrate", help="normal-operation CSV for fixed-band calibration")
    p.add_argument("--calibration", choices=("std", "max"), default="std")
    p.add_argument("--band", help="explicit fixed band as `lower,upper`")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("train-clf", help="train the linear SVM classifier")
    add_config(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--svm-lambda", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--train-seed", type=int)
    p.add_argument("--holdout-fraction", type=float, default=0.25)
    p.set_defaults(func=cmd_train_clf)

    p = sub.add_parser("classify", help="classify frames with a trained SVM")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--report-out", help="per-frame prediction CSV")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score an alarm log against ground truth")
    p.add_argument("--alarms", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--onset", type=int, help="fault onset minute (default: first faulty frame)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"osmoguard: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"osmoguard: i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
