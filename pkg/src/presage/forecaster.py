"""Single-hidden-layer LSTM regressor for short look-back windows.

The network is deliberately tiny: scalar input, one hidden layer of
memory cells, scalar linear output. It is retrained from scratch on a
handful of points every time the streaming detector decides its current
model no longer explains the data, so training must finish in
milliseconds. Everything runs on plain numpy in float64.

Gate layout: weight and bias vectors stack the four gates in the order
(input, forget, output, candidate), each slice of length ``hidden_units``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "LstmConfig",
    "LstmModel",
    "TrainOutcome",
    "init_model",
    "forward",
    "train",
    "predict_next",
    "normalize",
    "denormalize",
]

# Windows with a standard deviation at or below this are treated as
# constant and normalized with std 1 instead.
_CONSTANT_STD = 1e-12


@dataclass(frozen=True)
class LstmConfig:
    """Hyperparameters for training the look-back forecaster.

    Defaults mirror the streaming detector's reference setup: 10 hidden
    units, learning rate 0.15, and early stopping confined to 1..50
    epochs. Larger epoch caps are accepted when set explicitly.
    """

    hidden_units: int = 10
    learning_rate: float = 0.15
    max_epochs: int = 50
    min_epochs: int = 1
    early_stop_delta: float = 1e-4
    early_stop_patience: int = 3
    seed: int = 42

    def __post_init__(self):
        if self.hidden_units < 1:
            raise ConfigError(f"hidden_units must be >= 1, got {self.hidden_units}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.min_epochs < 1:
            raise ConfigError(f"min_epochs must be >= 1, got {self.min_epochs}")
        if self.max_epochs < self.min_epochs:
            raise ConfigError(
                f"max_epochs ({self.max_epochs}) must be >= min_epochs ({self.min_epochs})"
            )
        if self.early_stop_delta < 0:
            raise ConfigError(f"early_stop_delta must be >= 0, got {self.early_stop_delta}")
        if self.early_stop_patience < 1:
            raise ConfigError(
                f"early_stop_patience must be >= 1, got {self.early_stop_patience}"
            )


@dataclass(eq=False)
class LstmModel:
    """Weights of the one-hidden-layer LSTM plus normalization stats.

    ``w_x`` holds the input weights of the four stacked gates, ``w_h``
    the recurrent weights, ``b`` the gate biases, ``w_out``/``b_out``
    the linear output layer. ``norm_mean``/``norm_std`` are the
    statistics of the window the model was trained on; raw values are
    z-scored with them before entering the network and forecasts are
    mapped back afterwards.
    """

    w_x: np.ndarray  # (4H,)
    w_h: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)
    w_out: np.ndarray  # (H,)
    b_out: float
    norm_mean: float = 0.0
    norm_std: float = 1.0

    @property
    def hidden_units(self) -> int:
        return self.w_out.size


@dataclass(frozen=True)
class TrainOutcome:
    model: LstmModel
    epochs_used: int
    final_loss: float


def init_model(config: LstmConfig) -> LstmModel:
    """Create a model with small deterministic random weights.

    Weights are uniform in [-0.5, 0.5] scaled by 1/sqrt(hidden_units);
    all biases start at zero except the forget gate, which starts at 1
    so the cell state is initially retained. Normalization statistics
    are the identity until ``train`` overwrites them.
    """
    h = config.hidden_units
    rng = np.random.default_rng(config.seed)
    scale = 0.5 / np.sqrt(h)
    b = np.zeros(4 * h)
    b[h : 2 * h] = 1.0
    return LstmModel(
        w_x=rng.uniform(-scale, scale, 4 * h),
        w_h=rng.uniform(-scale, scale, (4 * h, h)),
        b=b,
        w_out=rng.uniform(-scale, scale, h),
        b_out=0.0,
    )


def normalize(values: np.ndarray, mean: float, std: float) -> np.ndarray:
    return (np.asarray(values, dtype=float) - mean) / std


def denormalize(values: np.ndarray, mean: float, std: float) -> np.ndarray:
    return np.asarray(values, dtype=float) * std + mean


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # evaluated per sign so exp never overflows, whatever the drift between
    # a model's stored statistics and the window it is asked to score
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


def _run(model: LstmModel, inputs: np.ndarray) -> dict:
    """Forward recurrence from zero state, caching per-step activations."""
    h = model.hidden_units
    steps = inputs.size
    gates = np.zeros((steps, 4 * h))  # post-activation i, f, o, g
    cells = np.zeros((steps, h))
    tanh_cells = np.zeros((steps, h))
    hiddens = np.zeros((steps, h))
    outputs = np.zeros(steps)

    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    for k in range(steps):
        z = model.w_x * inputs[k] + model.w_h @ h_prev + model.b
        i_g = _sigmoid(z[:h])
        f_g = _sigmoid(z[h : 2 * h])
        o_g = _sigmoid(z[2 * h : 3 * h])
        g_g = np.tanh(z[3 * h :])
        c = f_g * c_prev + i_g * g_g
        tc = np.tanh(c)
        h_t = o_g * tc

        gates[k, :h] = i_g
        gates[k, h : 2 * h] = f_g
        gates[k, 2 * h : 3 * h] = o_g
        gates[k, 3 * h :] = g_g
        cells[k] = c
        tanh_cells[k] = tc
        hiddens[k] = h_t
        outputs[k] = model.w_out @ h_t + model.b_out

        h_prev = h_t
        c_prev = c

    return {
        "inputs": inputs,
        "gates": gates,
        "cells": cells,
        "tanh_cells": tanh_cells,
        "hiddens": hiddens,
        "outputs": outputs,
    }


def forward(model: LstmModel, inputs: Sequence[float]) -> np.ndarray:
    """Run the recurrence over normalized inputs, one forecast per step.

    Output k is the model's (normalized) forecast of the value that
    follows input k. The recurrence always starts from zero hidden and
    cell state.
    """
    arr = np.asarray(inputs, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("inputs must be a non-empty one-dimensional sequence")
    if not np.isfinite(arr).all():
        raise DataError("inputs must be finite")
    return _run(model, arr)["outputs"]


def _loss_and_grads(model: LstmModel, inputs: np.ndarray, targets: np.ndarray):
    """Mean squared error and its analytic gradients via BPTT."""
    h = model.hidden_units
    steps = inputs.size
    cache = _run(model, inputs)
    gates = cache["gates"]
    cells = cache["cells"]
    tanh_cells = cache["tanh_cells"]
    hiddens = cache["hiddens"]

    err = cache["outputs"] - targets
    loss = float(np.mean(err**2))
    d_out = 2.0 * err / steps

    g_w_x = np.zeros_like(model.w_x)
    g_w_h = np.zeros_like(model.w_h)
    g_b = np.zeros_like(model.b)
    g_w_out = np.zeros_like(model.w_out)
    g_b_out = 0.0

    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    for k in range(steps - 1, -1, -1):
        i_g = gates[k, :h]
        f_g = gates[k, h : 2 * h]
        o_g = gates[k, 2 * h : 3 * h]
        g_g = gates[k, 3 * h :]
        c_prev = cells[k - 1] if k > 0 else np.zeros(h)
        h_prev = hiddens[k - 1] if k > 0 else np.zeros(h)

        g_w_out += d_out[k] * hiddens[k]
        g_b_out += d_out[k]

        dh = d_out[k] * model.w_out + dh_next
        dc = dh * o_g * (1.0 - tanh_cells[k] ** 2) + dc_next

        dz = np.empty(4 * h)
        dz[:h] = dc * g_g * i_g * (1.0 - i_g)
        dz[h : 2 * h] = dc * c_prev * f_g * (1.0 - f_g)
        dz[2 * h : 3 * h] = dh * tanh_cells[k] * o_g * (1.0 - o_g)
        dz[3 * h :] = dc * i_g * (1.0 - g_g**2)

        g_w_x += dz * inputs[k]
        g_w_h += np.outer(dz, h_prev)
        g_b += dz

        dh_next = model.w_h.T @ dz
        dc_next = dc * f_g

    return loss, {"w_x": g_w_x, "w_h": g_w_h, "b": g_b, "w_out": g_w_out, "b_out": g_b_out}


def train(window: Sequence[float], config: LstmConfig) -> TrainOutcome:
    """Fit a fresh model to one look-back window.

    The window is z-scored by its own mean and (population) standard
    deviation, with std substituted by 1 when the window is constant.
    Training pairs are teacher-forced next-step pairs within the window,
    optimized by full-batch gradient descent on mean squared error.
    Early stopping halts once the relative loss improvement stays below
    ``early_stop_delta`` for ``early_stop_patience`` consecutive epochs,
    never before ``min_epochs`` nor after ``max_epochs``.
    """
    raw = np.asarray(window, dtype=float)
    if raw.ndim != 1 or raw.size < 2:
        raise ValueError(f"training window needs at least 2 values, got {raw.size}")
    if not np.isfinite(raw).all():
        raise DataError("training window contains non-finite values")

    mean = float(raw.mean())
    std = float(raw.std())
    if std <= _CONSTANT_STD:
        std = 1.0
    normed = normalize(raw, mean, std)
    inputs = normed[:-1]
    targets = normed[1:]

    model = init_model(config)
    model.norm_mean = mean
    model.norm_std = std

    lr = config.learning_rate
    prev_loss = None
    stalled = 0
    epochs_used = 0
    for epoch in range(1, config.max_epochs + 1):
        loss, grads = _loss_and_grads(model, inputs, targets)
        model.w_x -= lr * grads["w_x"]
        model.w_h -= lr * grads["w_h"]
        model.b -= lr * grads["b"]
        model.w_out -= lr * grads["w_out"]
        model.b_out -= lr * grads["b_out"]
        epochs_used = epoch

        if prev_loss is not None:
            improvement = (prev_loss - loss) / prev_loss if prev_loss > 0 else 0.0
            stalled = stalled + 1 if improvement < config.early_stop_delta else 0
        prev_loss = loss
        if epoch >= config.min_epochs and stalled >= config.early_stop_patience:
            break

    final_preds = forward(model, inputs)
    final_loss = float(np.mean((final_preds - targets) ** 2))
    return TrainOutcome(model=model, epochs_used=epochs_used, final_loss=final_loss)


def predict_next(model: LstmModel, window: Sequence[float]) -> float:
    """Forecast the raw value following the given raw window.

    The window is normalized with the model's stored statistics, run
    through the full recurrence, and the final step's output is mapped
    back to the raw scale.
    """
    raw = np.asarray(window, dtype=float)
    if raw.ndim != 1 or raw.size == 0:
        raise ValueError("prediction window must be non-empty")
    if not np.isfinite(raw).all():
        raise DataError("prediction window contains non-finite values")
    normed = normalize(raw, model.norm_mean, model.norm_std)
    outputs = forward(model, normed)
    return float(denormalize(outputs[-1], model.norm_mean, model.norm_std))
