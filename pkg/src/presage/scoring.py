"""Prediction-error scoring for the streaming detector.

Two pure functions live here: ``aare``, the average absolute relative
error between a window of observed values and the one-step forecasts
made for them, and ``threshold``, the three-sigma detection threshold
derived from every error score seen so far.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DataError, StateError

__all__ = ["aare", "threshold"]

#: Default floor applied to |observed| in the AARE denominator so that
#: near-zero observations yield a large-but-finite relative error.
DEFAULT_EPSILON = 1e-8


def aare(
    observed: Sequence[float],
    predicted: Sequence[float],
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Average absolute relative error over an aligned window.

    Computes ``mean(|observed - predicted| / max(|observed|, epsilon))``,
    pairing each observed value with the forecast that was made for it.

    Args:
        observed: window of observed values.
        predicted: forecasts for the same time points, same length.
        epsilon: denominator floor, must be positive.

    Returns:
        A non-negative, finite relative-error score.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.ndim != 1 or pred.ndim != 1:
        raise ValueError("observed and predicted must be one-dimensional")
    if obs.size == 0:
        raise ValueError("observed window is empty")
    if obs.size != pred.size:
        raise ValueError(
            f"window length mismatch: {obs.size} observed vs {pred.size} predicted"
        )
    if not (np.isfinite(obs).all() and np.isfinite(pred).all()):
        raise DataError("observed/predicted values must be finite")
    denom = np.maximum(np.abs(obs), epsilon)
    return float(np.mean(np.abs(obs - pred) / denom))


def threshold(history: Sequence[float]) -> float:
    """Dynamic detection threshold: mean + 3 * population stddev.

    Both statistics are taken over every stored error score, normalized
    by the actual count of scores. With all scores equal the threshold
    degenerates to the mean itself.
    """
    arr = np.asarray(history, dtype=float)
    if arr.size == 0:
        raise StateError("cannot compute a threshold from an empty history")
    if not np.isfinite(arr).all():
        raise DataError("history contains non-finite values")
    mu = float(arr.mean())
    sigma = float(np.sqrt(np.mean((arr - mu) ** 2)))
    return mu + 3.0 * sigma
