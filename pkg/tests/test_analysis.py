import numpy as np
import pytest
from hypothesis import given, strategies as st

from sguws.analysis import (
    accuracy,
    baseline_mse,
    evaluate,
    mean_relative_deviation,
    model_summary,
    permutation_importance,
)
from sguws.dataset import FEATURE_NAMES, DatasetRow, build_dataset, fit_scaler, merge_datasets, split, xy
from sguws.mlp import DEFAULT_LAYERS, MlpModel, TrainConfig, init_model, train


@pytest.fixture(scope="module")
def trained():
    rows = merge_datasets(build_dataset(d) for d in (8, 9, 10, 11, 12))
    tr, te = split(rows)
    scaler = fit_scaler(tr)
    x, y = xy(scaler, tr)
    model, _ = train(init_model((4, 16, 8, 1), 0), x, y, TrainConfig(learning_rate=0.01, max_epochs=60))
    return model, scaler, tr, te, float(y.mean())


def test_accuracy_examples():
    assert accuracy([10, 20], [10, 20]) == 1.0
    assert accuracy([10, 20], [9, 22]) == pytest.approx(0.9, abs=1e-12)
    assert mean_relative_deviation([4], [2]) == 0.5


def test_accuracy_rejects_zero_truth():
    with pytest.raises(ValueError, match="true value of 0"):
        accuracy([0, 1], [0, 1])


def test_accuracy_shape_checks():
    with pytest.raises(ValueError):
        accuracy([1, 2], [1])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_baseline_examples():
    assert baseline_mse([3, 3, 3], [3, 3]) == 0.0
    assert baseline_mse([0, 1], [0, 1]) == 0.25
    with pytest.raises(ValueError):
        baseline_mse([], [1])


def test_evaluate_beats_baseline(trained):
    model, scaler, tr, te, mean = trained
    report = evaluate(model, scaler, te, mean)
    assert report.samples == len(te)
    assert report.mse < report.baseline_mse
    assert report.accuracy == pytest.approx(1 - report.mean_relative_deviation)
    assert "accuracy" in report.format()
    assert set(report.to_dict()) == {"accuracy", "mean_relative_deviation", "mse", "baseline_mse", "samples"}


def test_importance_deterministic_and_shaped(trained):
    model, scaler, _, te, _ = trained
    a = permutation_importance(model, scaler, te, repeats=3, seed=4)
    b = permutation_importance(model, scaler, te, repeats=3, seed=4)
    assert a == b
    assert sorted(a.ranking()) == sorted(FEATURE_NAMES)
    means = [f.mean for f in a.features]
    assert means == sorted(means, reverse=True)
    assert means[0] > 0
    assert "±" in a.format()


def test_identity_permutation_gives_zero(trained):
    model, scaler, _, te, _ = trained
    report = permutation_importance(model, scaler, te, repeats=2, shuffle=False)
    assert all(f.mean == 0.0 and f.std == 0.0 for f in report.features)


def test_constant_column_has_zero_importance(trained):
    model, scaler, _, te, _ = trained
    flat = [DatasetRow(r.input_degree, 5, r.control_degree, r.control_weight, r.uws) for r in te]
    report = permutation_importance(model, scaler, flat, repeats=3)
    f = report.by_name()["Input Weight"]
    assert f.mean == 0.0 and f.std == 0.0


def test_synthetic_dominant_feature():
    # label depends only on control degree; a model reading only that input must rank it first
    rows = [DatasetRow(a, w, c, v, 10 + 3 * c) for a in (3, 4, 5) for w in (3, 5) for c in range(3, 12)
            for v in (3, 5)]
    scaler = fit_scaler(rows)
    w = np.zeros((1, 4))
    w[0, 2] = 1.0
    model = MlpModel((4, 1), [w], [np.zeros(1)])
    report = permutation_importance(model, scaler, rows, repeats=5, seed=1)
    assert report.ranking()[0] == "Control Degree"
    assert report.features[0].mean > 0
    assert all(f.mean == 0.0 for f in report.features[1:])


def test_importance_argument_checks(trained):
    model, scaler, _, te, _ = trained
    with pytest.raises(ValueError):
        permutation_importance(model, scaler, te[:1])
    with pytest.raises(ValueError):
        permutation_importance(model, scaler, te, repeats=1)


def test_summary_small_models():
    assert model_summary((1, 1)).splitlines()[-2] == "Total params: 2"
    assert "Total params: 19" in model_summary((4, 3, 1))


def test_summary_default_model():
    text = model_summary(init_model(DEFAULT_LAYERS, 0))
    assert "Total params: 6,791" in text
    for n in ("500", "5050", "1020", "210", "11"):
        assert any(line.rstrip().endswith(n) for line in text.splitlines())


@given(st.lists(st.integers(1, 200), min_size=2, max_size=7))
def test_summary_total_closed_form(sizes):
    total = sum(a * b + b for a, b in zip(sizes, sizes[1:]))
    assert f"Total params: {total:,}" in model_summary(sizes)
