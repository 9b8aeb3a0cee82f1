"""Streaming anomaly detector driven by a short look-back forecaster.

One detector instance consumes a single time series point by point.
Each point moves the detector through a fixed phase schedule:

* ``collecting`` (t < b-1): buffer points, nothing else.
* ``warmup`` (b-1 <= t < 2b-1): train on the last b points, forecast
  the next value.
* ``bootstrap`` (2b-1 <= t < 2b+1): additionally start scoring the
  forecasts, seeding the error history.
* ``detecting`` (t >= 2b+1): compare the current error score against a
  three-sigma threshold over the whole history. A score above the
  threshold triggers a double check: retrain on the b points preceding
  the current one, re-forecast the current value, and re-compare. Only
  when the refreshed model still fails to explain the point is it
  reported as an anomaly; otherwise the refreshed model replaces the
  current one.

where b is the look-back count and t the zero-based point index.
"""

from __future__ import annotations

import enum
import math
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Protocol, Sequence

from . import forecaster, scoring
from .errors import ConfigError, DataError, OrderingError
from .forecaster import LstmConfig
from .scoring import DEFAULT_EPSILON

__all__ = [
    "Phase",
    "Verdict",
    "DetectorConfig",
    "DetectionRecord",
    "ForecastEngine",
    "LstmEngine",
    "Detector",
    "phase_of",
]


class Phase(enum.Enum):
    COLLECTING = "collecting"
    WARMUP = "warmup"
    BOOTSTRAP = "bootstrap"
    DETECTING = "detecting"


class Verdict(enum.Enum):
    PENDING = "pending"
    NORMAL = "normal"
    ANOMALY = "anomaly"


def phase_of(t: int, look_back: int) -> Phase:
    """Phase of time index ``t`` under look-back count ``look_back``."""
    if look_back < 2:
        raise ValueError(f"look_back must be >= 2, got {look_back}")
    if t < 0:
        raise ValueError(f"time index must be >= 0, got {t}")
    if t < look_back - 1:
        return Phase.COLLECTING
    if t < 2 * look_back - 1:
        return Phase.WARMUP
    if t < 2 * look_back + 1:
        return Phase.BOOTSTRAP
    return Phase.DETECTING


@dataclass(frozen=True)
class DetectorConfig:
    """Detector parameters. ``predict_forward`` is fixed to 1."""

    look_back: int = 3
    predict_forward: int = 1
    epsilon: float = DEFAULT_EPSILON
    lstm: LstmConfig = field(default_factory=LstmConfig)

    def __post_init__(self):
        if self.look_back < 2:
            raise ConfigError(f"look_back must be >= 2, got {self.look_back}")
        if self.predict_forward != 1:
            raise ConfigError(
                f"predict_forward is fixed to 1, got {self.predict_forward}"
            )
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class DetectionRecord:
    """Outcome of ingesting one data point.

    ``predicted``, ``aare`` and ``threshold`` stay ``None`` until the
    phase schedule makes them meaningful; ``aare`` carries the final
    score used for the verdict (the re-computed one when the double
    check ran). ``decision_time`` is wall-clock seconds spent deciding,
    excluding I/O.
    """

    time_index: int
    timestamp: datetime | None
    value: float
    predicted: float | None
    aare: float | None
    threshold: float | None
    phase: Phase
    verdict: Verdict
    retrained: bool
    decision_time: float


class ForecastEngine(Protocol):
    """Training/prediction seam used by the detector.

    ``train`` fits a model to a look-back window of raw values and
    returns it; ``predict`` forecasts the raw value following ``window``
    using a previously returned model. Implementations must be
    deterministic for replayability.
    """

    def train(self, window: Sequence[float]) -> object: ...

    def predict(self, model: object, window: Sequence[float]) -> float: ...


class LstmEngine:
    """Default engine: a fresh from-scratch LSTM per training call.

    Every call trains from the same seed in the config, which keeps
    whole-stream replays bit-reproducible. ``epoch_counts`` records the
    epochs used by each training call, in order.
    """

    def __init__(self, config: LstmConfig | None = None):
        self.config = config if config is not None else LstmConfig()
        self.epoch_counts: list[int] = []

    def train(self, window: Sequence[float]) -> forecaster.LstmModel:
        outcome = forecaster.train(window, self.config)
        self.epoch_counts.append(outcome.epochs_used)
        return outcome.model

    def predict(self, model: forecaster.LstmModel, window: Sequence[float]) -> float:
        return forecaster.predict_next(model, window)


class Detector:
    """Sequential per-point anomaly detector over one stream.

    Call ``step`` once per observation, in time order. Instances are not
    thread-safe; run one detector per stream.
    """

    def __init__(
        self,
        config: DetectorConfig | None = None,
        engine: ForecastEngine | None = None,
    ):
        self.config = config if config is not None else DetectorConfig()
        self.engine: ForecastEngine = (
            engine if engine is not None else LstmEngine(self.config.lstm)
        )
        self.model: object | None = None
        self.retrain_count = 0
        self._t = -1
        self._buffer: deque[float] = deque(maxlen=self.config.look_back + 1)
        self._predictions: dict[int, float] = {}
        self._history: list[float] = []
        self._hist_sum = 0.0
        self._hist_sumsq = 0.0
        self._last_timestamp: datetime | None = None

    @property
    def time_index(self) -> int:
        """Index of the most recently ingested point, -1 before any."""
        return self._t

    @property
    def aare_history(self) -> tuple[float, ...]:
        """Stored error scores; entry k belongs to t = 2*look_back - 1 + k."""
        return tuple(self._history)

    def step(self, value: float, timestamp: datetime | None = None) -> DetectionRecord:
        """Ingest one observation and return the decision for it.

        Raises ``DataError`` for non-finite values and ``OrderingError``
        for a timestamp behind the previous one; neither advances the
        detector state.
        """
        value = float(value)
        if not math.isfinite(value):
            raise DataError(f"observation at t={self._t + 1} is not finite: {value}")
        if (
            timestamp is not None
            and self._last_timestamp is not None
            and timestamp < self._last_timestamp
        ):
            raise OrderingError(
                f"timestamp {timestamp} precedes previous {self._last_timestamp}"
            )

        started = time.perf_counter()
        self._t += 1
        t = self._t
        b = self.config.look_back
        self._buffer.append(value)
        phase = phase_of(t, b)

        aare_value: float | None = None
        thd: float | None = None
        verdict = Verdict.PENDING
        retrained = False

        if phase is Phase.WARMUP:
            self._train_and_forecast()
        elif phase is Phase.BOOTSTRAP:
            aare_value = self._score_window()
            self._history_append(aare_value)
            self._train_and_forecast()
        elif phase is Phase.DETECTING:
            aare_value = self._score_window()
            self._history_append(aare_value)
            thd = self._current_threshold()
            if aare_value <= thd:
                verdict = Verdict.NORMAL
            else:
                # Double check: retrain on the b points preceding t so the
                # suspicious value stays out of its own training data.
                retrained = True
                self.retrain_count += 1
                previous_window = list(self._buffer)[:b]
                candidate = self.engine.train(previous_window)
                self._predictions[t] = self.engine.predict(candidate, previous_window)
                aare_value = self._score_window()
                self._history_replace_last(aare_value)
                if aare_value <= thd:
                    verdict = Verdict.NORMAL
                    self.model = candidate
                else:
                    verdict = Verdict.ANOMALY  # keep the previous model
            self._forecast_next()

        predicted = self._predictions.get(t)
        self._prune_predictions()
        decision_time = time.perf_counter() - started

        if timestamp is not None:
            self._last_timestamp = timestamp
        return DetectionRecord(
            time_index=t,
            timestamp=timestamp,
            value=value,
            predicted=predicted,
            aare=aare_value,
            threshold=thd,
            phase=phase,
            verdict=verdict,
            retrained=retrained,
            decision_time=decision_time,
        )

    # internal helpers ------------------------------------------------

    def _window(self) -> list[float]:
        return list(self._buffer)[-self.config.look_back :]

    def _train_and_forecast(self):
        window = self._window()
        self.model = self.engine.train(window)
        self._predictions[self._t + 1] = self.engine.predict(self.model, window)

    def _forecast_next(self):
        window = self._window()
        self._predictions[self._t + 1] = self.engine.predict(self.model, window)

    def _score_window(self) -> float:
        t, b = self._t, self.config.look_back
        observed = self._window()
        predicted = [self._predictions[y] for y in range(t - b + 1, t + 1)]
        return scoring.aare(observed, predicted, self.config.epsilon)

    def _history_append(self, value: float):
        self._history.append(value)
        self._hist_sum += value
        self._hist_sumsq += value * value

    def _history_replace_last(self, value: float):
        old = self._history[-1]
        self._history[-1] = value
        self._hist_sum += value - old
        self._hist_sumsq += value * value - old * old

    def _current_threshold(self) -> float:
        # Running-sums form of scoring.threshold over the whole history;
        # O(1) per step so long replays stay real-time.
        n = len(self._history)
        mu = self._hist_sum / n
        variance = max(self._hist_sumsq / n - mu * mu, 0.0)
        return mu + 3.0 * math.sqrt(variance)

    def _prune_predictions(self):
        horizon = self._t - self.config.look_back + 2
        for y in [y for y in self._predictions if y < horizon]:
            del self._predictions[y]
