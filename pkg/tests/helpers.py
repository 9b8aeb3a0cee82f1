"""Shared fixtures and independent oracles used across the test suite.

Oracles here are deliberately written with different machinery than the
implementation (pure-python loops and the statistics module instead of
numpy) so they stay independent of the code paths they check.
"""

from __future__ import annotations

import csv
import math
import os
import statistics
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from presage.detector import DetectionRecord, Phase, Verdict

REPO_ROOT = Path(__file__).resolve().parent.parent
LABELS_PATH = REPO_ROOT / "data" / "labels" / "combined_labels.json"

CPU_B3B_KEY = "realAWSCloudwatch/rds_cpu_utilization_e47b3b.csv"
MTSF_KEY = "realKnownCause/machine_temperature_system_failure.csv"

# Fixed parameters of the synthetic level-shift fixture; the anomaly
# cluster location was confirmed by pilot runs across several seeds.
SPIKE_LENGTH = 300
SPIKE_SHIFT_INDEX = 200
SPIKE_NOISE_SEED = 2025
DETECTOR_SEED = 42
SPIKE_START = datetime(2021, 3, 1, 0, 0)
SPIKE_STEP = timedelta(minutes=5)


def nab_data_dir() -> Path:
    return Path(os.environ.get("NAB_DATA_DIR", REPO_ROOT / "data" / "nab"))


def cpu_b3b_path() -> Path:
    return nab_data_dir() / "realAWSCloudwatch" / "rds_cpu_utilization_e47b3b.csv"


def mtsf_path() -> Path:
    return nab_data_dir() / "realKnownCause" / "machine_temperature_system_failure.csv"


def missing_dataset_reason(path: Path) -> str:
    return (
        f"benchmark series not present at {path}; place the NAB CSVs under "
        f"data/nab/ (or set NAB_DATA_DIR) to run the corpus replays"
    )


def spike_values() -> np.ndarray:
    """300-point sine plus noise with a +25 level shift from index 200."""
    rng = np.random.default_rng(SPIKE_NOISE_SEED)
    idx = np.arange(SPIKE_LENGTH)
    values = 50.0 + 3.0 * np.sin(2 * np.pi * idx / 48) + rng.normal(0, 0.3, SPIKE_LENGTH)
    values[SPIKE_SHIFT_INDEX:] += 25.0
    return values


def spike_timestamps() -> list[datetime]:
    return [SPIKE_START + k * SPIKE_STEP for k in range(SPIKE_LENGTH)]


def write_series_csv(path, values, start: datetime = SPIKE_START, step: timedelta = SPIKE_STEP):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "value"])
        for k, value in enumerate(values):
            writer.writerow([(start + k * step).isoformat(sep=" "), repr(float(value))])


def aare_oracle(observed, predicted, epsilon=1e-8) -> float:
    """Direct evaluation of the average absolute relative error."""
    total = 0.0
    for obs, pred in zip(observed, predicted, strict=True):
        total += abs(obs - pred) / max(abs(obs), epsilon)
    return total / len(observed)


def threshold_oracle(history) -> float:
    """Two-pass mean + 3 * population stddev via the statistics module."""
    values = list(history)
    mu = statistics.fmean(values)
    sigma = math.sqrt(statistics.fmean([(v - mu) ** 2 for v in values]))
    return mu + 3.0 * sigma


def finite_difference_grads(model, inputs, targets, step=1e-5):
    """Central finite differences of the training loss for every weight."""
    from presage.forecaster import _loss_and_grads

    def loss_at():
        return _loss_and_grads(model, inputs, targets)[0]

    grads = {}
    for name in ("w_x", "w_h", "b", "w_out"):
        arr = getattr(model, name)
        grad = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            original = arr[idx]
            arr[idx] = original + step
            plus = loss_at()
            arr[idx] = original - step
            minus = loss_at()
            arr[idx] = original
            grad[idx] = (plus - minus) / (2 * step)
        grads[name] = grad
    original = model.b_out
    model.b_out = original + step
    plus = loss_at()
    model.b_out = original - step
    minus = loss_at()
    model.b_out = original
    grads["b_out"] = (plus - minus) / (2 * step)
    return grads


def max_relative_gradient_error(analytic: dict, numeric: dict) -> float:
    worst = 0.0
    for name, num in numeric.items():
        ana = analytic[name]
        num_arr = np.atleast_1d(np.asarray(num, dtype=float))
        ana_arr = np.atleast_1d(np.asarray(ana, dtype=float))
        scale = np.maximum(np.maximum(np.abs(num_arr), np.abs(ana_arr)), 1e-8)
        worst = max(worst, float(np.max(np.abs(num_arr - ana_arr) / scale)))
    return worst


class PerfectEngine:
    """Forecast engine that answers every window with the true next value.

    Works by memorizing the series keyed by look-back window, so the
    series must have pairwise-distinct windows (continuous random data
    has, almost surely). Each train call returns a fresh sentinel object
    so model replacement is observable by identity.
    """

    def __init__(self, series, look_back: int):
        self._next_value = {}
        series = [float(v) for v in series]
        # The final window's forecast targets a point past the end of the
        # stream; it is never scored, so any placeholder answer works.
        for start in range(len(series) - look_back + 1):
            window = tuple(series[start : start + look_back])
            if window in self._next_value:
                raise ValueError("series windows must be unique for PerfectEngine")
            target = start + look_back
            self._next_value[window] = series[target] if target < len(series) else series[-1]
        self.train_calls = 0

    def train(self, window):
        self.train_calls += 1
        return object()

    def predict(self, model, window):
        return self._next_value[tuple(float(v) for v in window)]


class ScriptedEngine(PerfectEngine):
    """PerfectEngine that lies about chosen target indices.

    ``lie_once`` poisons only the first forecast of a target index (the
    retrain re-forecast then tells the truth, exercising the recovered
    branch); ``lie_always`` poisons every forecast of it (true-anomaly
    branch). Both map target index -> wrong value.
    """

    def __init__(
        self,
        series,
        look_back: int,
        lie_once: dict[int, float] | None = None,
        lie_always: dict[int, float] | None = None,
    ):
        super().__init__(series, look_back)
        self._series = [float(v) for v in series]
        self._look_back = look_back
        self._lie_once = dict(lie_once or {})
        self._lie_always = dict(lie_always or {})

    def predict(self, model, window):
        window = tuple(float(v) for v in window)
        target = self._find_start(window) + self._look_back
        if target in self._lie_always:
            return self._lie_always[target]
        if target in self._lie_once:
            return self._lie_once.pop(target)
        return self._next_value[window]

    def _find_start(self, window):
        for start in range(len(self._series) - self._look_back + 1):
            if tuple(self._series[start : start + self._look_back]) == window:
                return start
        raise KeyError(window)


def make_record(
    time_index: int,
    timestamp: datetime | None = None,
    value: float = 0.0,
    verdict: Verdict = Verdict.NORMAL,
    retrained: bool = False,
    decision_time: float = 0.0,
    phase: Phase = Phase.DETECTING,
    predicted: float | None = None,
    aare: float | None = None,
    threshold: float | None = None,
) -> DetectionRecord:
    return DetectionRecord(
        time_index=time_index,
        timestamp=timestamp,
        value=value,
        predicted=predicted,
        aare=aare,
        threshold=threshold,
        phase=phase,
        verdict=verdict,
        retrained=retrained,
        decision_time=decision_time,
    )
