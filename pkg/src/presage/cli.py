"""Command-line entry points: replay detection over a series file and
score a finished report against labels.

Exit codes: 0 success, 1 data/runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .data_io import read_labels, read_report, read_series, ReportWriter, summarize_run, write_summary
from .detector import Detector, DetectorConfig, Phase, Verdict
from .errors import ConfigError, PresageError
from .evaluation import (
    DEFAULT_GRACE_MINUTES,
    DEFAULT_PRE_WINDOW_MINUTES,
    evaluate_run,
)
from .forecaster import LstmConfig
from .scoring import DEFAULT_EPSILON

__all__ = ["main", "build_parser", "run_detect", "run_evaluate"]


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _look_back_arg(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"look-back must be at least 2, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presage",
        description="Streaming time-series anomaly detection with an "
        "adaptive LSTM forecaster and a self-adjusting three-sigma threshold.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser(
        "detect",
        help="replay a series file through the detector and write a per-point report",
    )
    detect.add_argument("--input", required=True, type=Path, help="series file (timestamp,value)")
    detect.add_argument("--report", required=True, type=Path, help="per-point report CSV to write")
    detect.add_argument(
        "--summary",
        type=Path,
        default=None,
        help="run summary JSON to write (default: report path with .summary.json)",
    )
    detect.add_argument(
        "--look-back", type=_look_back_arg, default=3,
        help="number of recent points used for training and prediction (default 3)",
    )
    detect.add_argument(
        "--predict-forward", type=int, choices=[1], default=1,
        help="forecast horizon in points; only 1 is supported",
    )
    detect.add_argument("--seed", type=int, default=42, help="seed for model initialization")
    detect.add_argument(
        "--epsilon", type=_positive_float, default=DEFAULT_EPSILON,
        help="denominator floor for the relative-error score",
    )
    detect.add_argument("--hidden-units", type=_positive_int, default=10)
    detect.add_argument("--learning-rate", type=_positive_float, default=0.15)
    detect.add_argument("--max-epochs", type=_positive_int, default=50)
    detect.add_argument("--min-epochs", type=_positive_int, default=1)
    detect.add_argument("--early-stop-delta", type=float, default=1e-4)
    detect.add_argument("--early-stop-patience", type=_positive_int, default=3)
    detect.set_defaults(func=run_detect)

    evaluate = sub.add_parser(
        "evaluate",
        help="score a finished report against labeled anomaly instants",
    )
    evaluate.add_argument("--report", required=True, type=Path, help="report CSV from detect")
    evaluate.add_argument("--labels", required=True, type=Path, help="labels JSON")
    evaluate.add_argument(
        "--dataset-key", default=None,
        help="key into a combined labels map (unused for plain-list label files)",
    )
    evaluate.add_argument(
        "--pre-window", type=_positive_float, default=DEFAULT_PRE_WINDOW_MINUTES,
        help="minutes before a label in which a report counts for it (default 1440)",
    )
    evaluate.add_argument(
        "--grace", type=_positive_float, default=DEFAULT_GRACE_MINUTES,
        help="minutes after a label in which a report still counts (default 60)",
    )
    evaluate.add_argument(
        "--summary",
        type=Path,
        default=None,
        help="evaluation summary JSON to write (default: report path with .eval.json)",
    )
    evaluate.add_argument(
        "--look-back", type=_look_back_arg, default=None,
        help="override the look-back count instead of inferring it from the report",
    )
    evaluate.set_defaults(func=run_evaluate)
    return parser


def run_detect(args: argparse.Namespace) -> int:
    observations = read_series(args.input)
    config = DetectorConfig(
        look_back=args.look_back,
        predict_forward=args.predict_forward,
        epsilon=args.epsilon,
        lstm=LstmConfig(
            hidden_units=args.hidden_units,
            learning_rate=args.learning_rate,
            max_epochs=args.max_epochs,
            min_epochs=args.min_epochs,
            early_stop_delta=args.early_stop_delta,
            early_stop_patience=args.early_stop_patience,
            seed=args.seed,
        ),
    )
    detector = Detector(config)
    summary_path = args.summary or args.report.with_suffix(".summary.json")

    records = []
    with ReportWriter(args.report) as writer:
        for obs in observations:
            record = detector.step(obs.value, obs.timestamp)
            writer.write(record)
            records.append(record)
            if record.verdict is Verdict.ANOMALY:
                print(
                    f"ANOMALY index={record.time_index} "
                    f"timestamp={record.timestamp.isoformat(sep=' ')} "
                    f"value={record.value}"
                )

    summary = summarize_run(records, config)
    write_summary(summary, summary_path)
    print(
        f"processed {summary.total_points} points: "
        f"{len(summary.anomalies)} anomalies, "
        f"{summary.retrain_count} retrains "
        f"(ratio {summary.retraining_ratio:.2%}), "
        f"avg decision {summary.avg_decision_time:.4f} s"
    )
    print(f"report: {args.report}")
    print(f"summary: {summary_path}")
    return 0


def _infer_look_back(records) -> int:
    for record in records:
        if record.phase is Phase.WARMUP:
            return record.time_index + 1
    raise PresageError(
        "cannot infer look-back from the report (no warmup rows); pass --look-back"
    )


def run_evaluate(args: argparse.Namespace) -> int:
    records = read_report(args.report)
    labels = read_labels(args.labels, args.dataset_key)
    look_back = args.look_back or _infer_look_back(records)
    summary = evaluate_run(
        records,
        labels.anomaly_timestamps,
        look_back,
        pre_window_minutes=args.pre_window,
        grace_minutes=args.grace,
    )
    summary_path = args.summary or args.report.with_suffix(".eval.json")
    _write_evaluation(summary, args, look_back, summary_path)

    for result in summary.lead_times:
        line = f"label {result.label_timestamp.isoformat(sep=' ')}  {result.status.value}"
        if result.first_report_timestamp is not None:
            line += (
                f"  lead {result.lead_minutes:+.1f} min"
                f"  first report {result.first_report_timestamp.isoformat(sep=' ')}"
            )
        print(line)
    eligible = len(records) - (2 * look_back - 1)
    retrains = sum(1 for r in records if r.retrained)
    print(f"false warnings: {summary.false_warning_count}")
    print(f"retraining ratio: {summary.retraining_ratio:.2%} ({retrains}/{eligible})")
    print(
        f"decision time: avg {summary.avg_decision_time:.4f} s, "
        f"std {summary.std_decision_time:.4f} s"
    )
    print(f"summary: {summary_path}")
    return 0


def _write_evaluation(summary, args, look_back: int, path: Path):
    payload = {
        "labels": [
            {
                "label_timestamp": r.label_timestamp.isoformat(sep=" "),
                "first_report_timestamp": (
                    r.first_report_timestamp.isoformat(sep=" ")
                    if r.first_report_timestamp
                    else None
                ),
                "lead_minutes": r.lead_minutes,
                "status": r.status.value,
            }
            for r in summary.lead_times
        ],
        "false_warnings": summary.false_warning_count,
        "retraining_ratio": summary.retraining_ratio,
        "avg_decision_time_s": summary.avg_decision_time,
        "std_decision_time_s": summary.std_decision_time,
        "params": {
            "pre_window_minutes": args.pre_window,
            "grace_minutes": args.grace,
            "look_back": look_back,
            "dataset_key": args.dataset_key,
        },
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (PresageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
