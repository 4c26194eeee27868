"""Evaluation of trained UWS regressors."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .dataset import FEATURE_NAMES, DatasetRow, ScalerParams, xy
from .mlp import MlpModel, layer_param_counts, mse, predict, predict_uws_from_scaled


def mean_relative_deviation(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError(f"y_true {t.shape} and y_pred {p.shape} differ in shape")
    if t.size == 0:
        raise ValueError("no samples")
    if np.any(t == 0):
        raise ValueError("relative deviation is undefined for a true value of 0")
    return float(np.mean(np.abs((p - t) / t)))


def accuracy(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    """``1 - mean(|pred - true| / true)``."""
    return 1.0 - mean_relative_deviation(y_true, y_pred)


def baseline_mse(train_targets, test_targets) -> float:
    """Test MSE of the constant predictor equal to the training-target mean."""
    tr = np.asarray(train_targets, dtype=np.float64).ravel()
    te = np.asarray(test_targets, dtype=np.float64).ravel()
    if tr.size == 0 or te.size == 0:
        raise ValueError("baseline needs nonempty train and test targets")
    return float(np.mean((te - tr.mean()) ** 2))


@dataclass(frozen=True)
class EvaluationReport:
    accuracy: float
    mean_relative_deviation: float
    mse: float
    baseline_mse: float
    samples: int

    def to_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        return "\n".join([
            f"samples                  {self.samples}",
            f"accuracy                 {self.accuracy:.4f}",
            f"mean relative deviation  {self.mean_relative_deviation:.4f}",
            f"mse (scaled)             {self.mse:.6f}",
            f"baseline mse (scaled)    {self.baseline_mse:.6f}",
        ])


def evaluate(model: MlpModel, scaler: ScalerParams, test_rows: Sequence[DatasetRow],
             train_target_mean: float) -> EvaluationReport:
    """Accuracy on integer-truncated UWS predictions plus scaled-target MSE against the mean predictor.

    ``train_target_mean`` is the mean scaled label of the training rows.
    """
    x, y = xy(scaler, test_rows)
    pred = predict_uws_from_scaled(model, scaler, x)
    dev = mean_relative_deviation([r.uws for r in test_rows], pred)
    return EvaluationReport(
        accuracy=1.0 - dev,
        mean_relative_deviation=dev,
        mse=mse(predict(model, x), y),
        baseline_mse=baseline_mse([train_target_mean], y),
        samples=len(test_rows),
    )


@dataclass(frozen=True)
class FeatureImportance:
    name: str
    mean: float
    std: float


@dataclass(frozen=True)
class ImportanceReport:
    baseline_mse: float
    repeats: int
    features: tuple[FeatureImportance, ...]

    def ranking(self) -> list[str]:
        return [f.name for f in self.features]

    def by_name(self) -> dict[str, FeatureImportance]:
        return {f.name: f for f in self.features}

    def to_dict(self) -> dict:
        return {"baseline_mse": self.baseline_mse, "repeats": self.repeats,
                "features": [asdict(f) for f in self.features]}

    def format(self) -> str:
        width = max(len(f.name) for f in self.features)
        lines = [f"{'Feature':<{width}}  Influence"]
        lines += [f"{f.name:<{width}}  {f.mean:.4f} ± {f.std:.4f}" for f in self.features]
        return "\n".join(lines)


def permutation_importance(model: MlpModel, scaler: ScalerParams, test_rows: Sequence[DatasetRow],
                           repeats: int = 5, seed: int = 0, shuffle: bool = True) -> ImportanceReport:
    """MSE increase (scaled targets) when one feature column is shuffled.

    Each (feature, repeat) draws its permutation from its own generator seeded
    with ``(seed, feature, repeat)``. ``shuffle=False`` substitutes the
    identity permutation.
    """
    if len(test_rows) < 2:
        raise ValueError("permutation importance needs at least two rows")
    if repeats < 2:
        raise ValueError("need at least two repeats")
    x, y = xy(scaler, test_rows)
    base = mse(predict(model, x), y)
    out = []
    for j, name in enumerate(FEATURE_NAMES):
        scores = []
        for r in range(repeats):
            xp = x.copy()
            if shuffle:
                xp[:, j] = xp[np.random.default_rng([seed, j, r]).permutation(len(xp)), j]
            scores.append(mse(predict(model, xp), y) - base)
        out.append(FeatureImportance(name, float(np.mean(scores)), float(np.std(scores))))
    out.sort(key=lambda f: -f.mean)
    return ImportanceReport(base, repeats, tuple(out))


def model_summary(model_or_sizes) -> str:
    """Keras-style table: one row per dense layer with its output width and parameter count."""
    sizes = model_or_sizes.layer_sizes if isinstance(model_or_sizes, MlpModel) else tuple(model_or_sizes)
    counts = layer_param_counts(sizes)
    rows = [("Layer (type)", "Output Shape", "Param #")]
    for k, (width, n) in enumerate(zip(sizes[1:], counts), start=1):
        rows.append((f"dense_{k} (Dense)", f"(None, {width})", str(n)))
    w0 = max(len(r[0]) for r in rows) + 2
    w1 = max(len(r[1]) for r in rows) + 2
    lines = [f"{a:<{w0}}{b:<{w1}}{c}" for a, b, c in rows]
    total = sum(counts)
    lines.append(f"Total params: {total:,}")
    lines.append(f"Trainable params: {total:,}")
    return "\n".join(lines)
