"""A small fully connected ReLU regressor trained with mini-batch Adagrad.

Everything is float64 numpy. Weight matrix ``k`` has shape
``(layer_sizes[k+1], layer_sizes[k])`` so a layer computes ``A @ W.T + b``.
Every non-input layer, the output included, applies ``max(0, z)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import ScalerParams, inverse_transform_label, transform_features
from .errors import ModelFormatError, TrainingError

DEFAULT_LAYERS = (4, 100, 50, 20, 10, 1)
FORMAT_NAME = "sguws-mlp"
FORMAT_VERSION = 1


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    # bumped on every in-place parameter update; lets backward() reject stale caches
    version: int = 0

    def params(self) -> list[np.ndarray]:
        """Weights then biases, in layer order; the ordering used for gradients and Adagrad state."""
        return list(self.weights) + list(self.biases)

    @property
    def param_count(self) -> int:
        return param_count(self.layer_sizes)

    def copy(self) -> "MlpModel":
        return MlpModel(tuple(self.layer_sizes), [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.version)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(tuple(self.layer_sizes)).encode())
        for p in self.params():
            h.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
        return h.hexdigest()


def layer_param_counts(layer_sizes: Sequence[int]) -> list[int]:
    return [a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:])]


def param_count(layer_sizes: Sequence[int]) -> int:
    return sum(layer_param_counts(layer_sizes))


def _check_sizes(layer_sizes):
    if len(layer_sizes) < 2:
        raise ValueError("a network needs at least an input and an output layer")
    if any(int(s) < 1 for s in layer_sizes):
        raise ValueError(f"layer sizes must be positive, got {tuple(layer_sizes)}")


def init_model(layer_sizes: Sequence[int] = DEFAULT_LAYERS, seed: int = 0) -> MlpModel:
    """Uniform fan-balanced weights in ``[-sqrt(6/(fan_in+fan_out)), +...]``, zero biases."""
    _check_sizes(layer_sizes)
    sizes = tuple(int(s) for s in layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases)


@dataclass
class ForwardCache:
    activations: list[np.ndarray]  # inputs first, output last
    preactivations: list[np.ndarray]
    model_id: int
    model_version: int


def forward(model: MlpModel, inputs) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.layer_sizes[0]:
        raise ValueError(f"expected inputs of shape (M, {model.layer_sizes[0]}), got {x.shape}")
    acts, pres = [x], []
    a = x
    for w, b in zip(model.weights, model.biases):
        z = a @ w.T + b
        a = np.maximum(z, 0.0)
        pres.append(z)
        acts.append(a)
    return a, ForwardCache(acts, pres, id(model), model.version)


def predict(model: MlpModel, inputs) -> np.ndarray:
    """Scaled predictions as an ``(M, 1)`` array."""
    return forward(model, inputs)[0]


def _as_column(y, m=None) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if m is not None and y.shape != (m, 1):
        raise ValueError(f"expected targets of shape ({m}, 1), got {y.shape}")
    return y


def loss(predictions, targets) -> float:
    """Half mean squared error ``(1/2M) * sum((pred - y)^2)``; the quantity being minimised."""
    p = _as_column(predictions)
    y = _as_column(targets)
    if p.shape != y.shape:
        raise ValueError(f"predictions {p.shape} and targets {y.shape} differ in shape")
    if p.shape[0] == 0:
        raise ValueError("loss of zero examples is undefined")
    return float(np.sum((p - y) ** 2) / (2 * p.shape[0]))


def mse(predictions, targets) -> float:
    """Plain mean squared error, twice :func:`loss`."""
    return 2.0 * loss(predictions, targets)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)


def backward(model: MlpModel, cache: ForwardCache, targets) -> Gradients:
    """Exact gradients of :func:`loss` for the batch held in ``cache``."""
    if cache.model_id != id(model) or cache.model_version != model.version:
        raise ValueError("forward cache does not belong to the current model parameters")
    out = cache.activations[-1]
    m = out.shape[0]
    y = _as_column(targets, m)
    delta = (out - y) / m
    gw = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    for k in range(len(model.weights) - 1, -1, -1):
        dz = delta * (cache.preactivations[k] > 0)
        gw[k] = dz.T @ cache.activations[k]
        gb[k] = dz.sum(axis=0)
        if k:
            delta = dz @ model.weights[k]
    return Gradients(gw, gb)


@dataclass
class AdagradState:
    accumulators: list[np.ndarray]

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdagradState":
        return cls([np.zeros_like(p) for p in model.params()])


def adagrad_step(model: MlpModel, grads: Gradients, state: AdagradState,
                 learning_rate: float, epsilon: float = 1e-8) -> tuple[MlpModel, AdagradState]:
    """In-place update: ``G += g^2``, ``theta -= lr * g / (sqrt(G) + eps)``."""
    params = model.params()
    gs = grads.params()
    if len(params) != len(gs) or len(params) != len(state.accumulators):
        raise ValueError("gradient, parameter and state lists differ in length")
    for p, g, acc in zip(params, gs, state.accumulators):
        if p.shape != g.shape or p.shape != acc.shape:
            raise ValueError(f"shape mismatch: parameter {p.shape}, gradient {g.shape}, state {acc.shape}")
        acc += g * g
        p -= learning_rate * g / (np.sqrt(acc) + epsilon)
    model.version += 1
    return model, state


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0001
    batch_size: int = 8
    max_epochs: int = 100
    patience: int = 10
    validation_fraction: float = 0.1
    seed: int = 0
    adagrad_epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0 or self.adagrad_epsilon <= 0:
            raise ValueError("learning rate must be >= 0 and epsilon > 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs and patience must be positive")
        if not 0 <= self.validation_fraction < 0.5:
            raise ValueError("validation_fraction must lie in [0, 0.5)")


@dataclass
class TrainReport:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    stop_reason: str = ""
    snapshot: str = ""
    batches_per_epoch: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def batches_per_epoch(n_rows: int, batch_size: int) -> int:
    return math.ceil(n_rows / batch_size)


def train(model: MlpModel, features, targets, config: TrainConfig = TrainConfig()
          ) -> tuple[MlpModel, TrainReport]:
    """Mini-batch Adagrad with early stopping on a held-out validation slice.

    ``model`` is updated in place and ends holding the snapshot with the
    lowest validation MSE. With ``validation_fraction == 0`` the training MSE
    is monitored instead.
    """
    x = np.asarray(features, dtype=np.float64)
    y = _as_column(targets, x.shape[0])
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(x.shape[0])
    n_val = int(round(config.validation_fraction * x.shape[0]))
    val_idx, fit_idx = order[:n_val], order[n_val:]
    x_fit, y_fit = x[fit_idx], y[fit_idx]
    x_val, y_val = (x[val_idx], y[val_idx]) if n_val else (x_fit, y_fit)
    if config.batch_size > x_fit.shape[0]:
        raise ValueError(f"batch size {config.batch_size} exceeds {x_fit.shape[0]} training rows")

    state = AdagradState.zeros_like(model)
    report = TrainReport(batches_per_epoch=batches_per_epoch(x_fit.shape[0], config.batch_size))
    best = (math.inf, 0, model.copy())
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(x_fit.shape[0])
        for start in range(0, perm.size, config.batch_size):
            idx = perm[start:start + config.batch_size]
            _, cache = forward(model, x_fit[idx])
            adagrad_step(model, backward(model, cache, y_fit[idx]), state,
                         config.learning_rate, config.adagrad_epsilon)
        train_mse = mse(predict(model, x_fit), y_fit)
        val_mse = mse(predict(model, x_val), y_val)
        if not (math.isfinite(train_mse) and math.isfinite(val_mse)):
            raise TrainingError(f"loss became non-finite in epoch {epoch}")
        report.train_mse.append(train_mse)
        report.val_mse.append(val_mse)
        report.stopped_epoch = epoch
        if val_mse < best[0]:
            best = (val_mse, epoch, model.copy())
        elif epoch - best[1] >= config.patience:
            report.stop_reason = f"no validation improvement for {config.patience} epochs"
            break
    else:
        report.stop_reason = "reached max_epochs"
    _, report.best_epoch, snap = best
    model.weights, model.biases = snap.weights, snap.biases
    model.version += 1
    report.snapshot = model.digest()
    return model, report


def predict_uws(model: MlpModel, scaler: Optional[ScalerParams], raw_features) -> int | list[int]:
    """Predicted UWS for one feature 4-tuple (or an ``M x 4`` matrix), truncated toward zero."""
    if scaler is None:
        raise ValueError("scaler is not fitted")
    raw = np.asarray(raw_features, dtype=np.float64)
    single = raw.ndim == 1
    out = predict_uws_from_scaled(model, scaler, transform_features(scaler, raw))
    return out[0] if single else out


def predict_uws_from_scaled(model: MlpModel, scaler: ScalerParams, scaled_features) -> list[int]:
    scaled = predict(model, scaled_features)[:, 0]
    return [int(v) for v in inverse_transform_label(scaler, scaled)]


@dataclass
class ModelFile:
    model: MlpModel
    scaler: Optional[ScalerParams]
    metadata: dict


def model_to_json(model: MlpModel, scaler: Optional[ScalerParams] = None,
                  metadata: Optional[dict] = None) -> str:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "weights": [w.ravel(order="C").tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "scaler": scaler.to_dict() if scaler is not None else None,
        "metadata": metadata or {},
    }
    # float repr is the shortest string that round-trips exactly
    return json.dumps(doc, indent=1) + "\n"


def save_model(model: MlpModel, path, scaler: Optional[ScalerParams] = None,
               metadata: Optional[dict] = None) -> None:
    Path(path).write_text(model_to_json(model, scaler, metadata))


def model_from_json(text: str) -> ModelFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {doc.get('version')!r}")
    try:
        sizes = tuple(int(s) for s in doc["layer_sizes"])
        _check_sizes(sizes)
        weights, biases = [], []
        if len(doc["weights"]) != len(sizes) - 1 or len(doc["biases"]) != len(sizes) - 1:
            raise ModelFormatError("layer count does not match layer_sizes")
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            w = np.asarray(doc["weights"][k], dtype=np.float64)
            b = np.asarray(doc["biases"][k], dtype=np.float64)
            if w.shape != (fan_in * fan_out,) or b.shape != (fan_out,):
                raise ModelFormatError(f"layer {k + 1} has the wrong number of parameters")
            weights.append(w.reshape(fan_out, fan_in))
            biases.append(b)
        scaler = ScalerParams.from_dict(doc["scaler"]) if doc.get("scaler") else None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model file: {exc}") from None
    return ModelFile(MlpModel(sizes, weights, biases), scaler, doc.get("metadata") or {})


def read_model_file(path) -> ModelFile:
    return model_from_json(Path(path).read_text())


def load_model(path) -> MlpModel:
    return read_model_file(path).model
