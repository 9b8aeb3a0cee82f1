"""presage: proactive anomaly detection for streaming time series.

A tiny LSTM forecaster is retrained on the fly over a short look-back
window; its relative prediction error is compared against a
self-adjusting three-sigma threshold, with a retrain-and-recheck double
check before any point is reported as an anomaly.
"""

from .detector import (
    DetectionRecord,
    Detector,
    DetectorConfig,
    ForecastEngine,
    LstmEngine,
    Phase,
    Verdict,
    phase_of,
)
from .data_io import (
    AnomalyEvent,
    LabelSet,
    Observation,
    RunSummary,
    read_labels,
    read_report,
    read_series,
    summarize_run,
    write_report,
    write_summary,
)
from .errors import (
    ConfigError,
    DataError,
    DatasetKeyError,
    OrderingError,
    PresageError,
    StateError,
)
from .evaluation import (
    EvaluationSummary,
    LeadStatus,
    LeadTimeResult,
    evaluate_run,
    false_warnings,
    lead_time,
    retraining_ratio,
    timing_stats,
)
from .forecaster import LstmConfig, LstmModel, TrainOutcome, init_model, predict_next, train
from .scoring import aare, threshold

__version__ = "0.1.0"

__all__ = [
    "AnomalyEvent",
    "ConfigError",
    "DataError",
    "DatasetKeyError",
    "DetectionRecord",
    "Detector",
    "DetectorConfig",
    "EvaluationSummary",
    "ForecastEngine",
    "LabelSet",
    "LeadStatus",
    "LeadTimeResult",
    "LstmConfig",
    "LstmEngine",
    "LstmModel",
    "Observation",
    "OrderingError",
    "Phase",
    "PresageError",
    "RunSummary",
    "StateError",
    "TrainOutcome",
    "Verdict",
    "aare",
    "evaluate_run",
    "false_warnings",
    "init_model",
    "lead_time",
    "phase_of",
    "predict_next",
    "read_labels",
    "read_report",
    "read_series",
    "retraining_ratio",
    "summarize_run",
    "threshold",
    "timing_stats",
    "train",
    "write_report",
    "write_summary",
]
