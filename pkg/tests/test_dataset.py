import numpy as np
import pytest
from hypothesis import given, strategies as st

from sguws.complexity import brute_force_uws
from sguws.dataset import (
    CSV_HEADER,
    DatasetRow,
    ScalerParams,
    SplitSpec,
    audit_labels,
    build_dataset,
    dumps_csv,
    enumerate_pairs,
    fit_scaler,
    inverse_transform_label,
    loads_csv,
    merge_datasets,
    read_csv,
    split,
    train_size,
    transform,
    transform_features,
    write_csv,
)
from sguws.errors import ParseError
from sguws.generator import sg_full_period
from sguws.gf2poly import enumerate_primitive, parse_polynomial as P

PAIR_COUNTS = {7: 20, 8: 24, 9: 24, 10: 72, 11: 208, 12: 216, 13: 840, 14: 1280, 15: 1280, 16: 6360,
           17: 13080, 18: 13896, 19: 48600, 20: 70416, 21: 245628}

rows_strategy = st.lists(st.builds(DatasetRow, *[st.integers(0, 10**6)] * 5), max_size=30)


@pytest.mark.parametrize("degree", [8, 9, 10, 11, 12, 13, 14, 15, 16, 17])
def test_pair_counts_match_table(degree):
    assert len(enumerate_pairs(degree)) == PAIR_COUNTS[degree]


def test_degree_seven_needs_min_degree_two():
    assert len(enumerate_pairs(7, min_component_degree=2)) == 20
    assert len(enumerate_pairs(7)) == 8


def test_pair_count_cross_check_by_products():
    counts = {n: len(enumerate_primitive(n)) for n in range(3, 15)}
    total = sum(counts[a] * counts[17 - a] for a in range(3, 15) if np.gcd(a, 17 - a) == 1)
    assert total == 13080


def test_pair_ordering_and_filters():
    pairs = enumerate_pairs(11)
    keys = [(p.degree, p.mask, q.mask) for p, q in pairs]
    assert keys == sorted(keys)
    for p, q in pairs:
        assert p.degree + q.degree == 11 and min(p.degree, q.degree) >= 3
        assert np.gcd(p.degree, q.degree) == 1


def test_no_admissible_pairs_is_empty():
    assert enumerate_pairs(5) == []
    assert build_dataset(5) == []
    assert len(enumerate_pairs(9, require_coprime_degrees=False)) == 48


def test_build_degree_seven():
    rows = build_dataset(7, min_component_degree=2)
    assert len(rows) == 20
    pairs = enumerate_pairs(7, min_component_degree=2)
    for row, (p, q) in zip(rows, pairs):
        assert row.features == (p.degree, p.weight, q.degree, q.weight)
        assert row.uws == brute_force_uws(sg_full_period(p, q)).uws


def test_example_pair_row():
    p, q = P("x^2+x+1"), P("x^5+x^3+x^2+x+1")
    rows = build_dataset(7, min_component_degree=2)
    pairs = enumerate_pairs(7, min_component_degree=2)
    row = rows[pairs.index((p, q))]
    assert row.features == (2, 3, 5, 5)
    assert row.uws == brute_force_uws(sg_full_period(p, q)).uws


@pytest.mark.parametrize("degree", [8, 10, 11])
def test_row_invariants(degree):
    for r in build_dataset(degree):
        assert r.input_weight % 2 == 1 and r.control_weight % 2 == 1
        assert 3 <= r.input_weight <= r.input_degree + 1
        assert 3 <= r.control_weight <= r.control_degree + 1
        assert r.uws >= 1


def test_workers_do_not_change_output():
    one = dumps_csv(build_dataset(11, workers=1))
    assert dumps_csv(build_dataset(11, workers=3)) == one
    assert dumps_csv(build_dataset(11, workers=1)) == one


def test_audit_catches_wrong_label():
    pairs = enumerate_pairs(8)
    rows = build_dataset(8)
    assert audit_labels(rows, pairs, fraction=1.0) == list(range(len(rows)))
    bad = list(rows)
    bad[5] = DatasetRow(*bad[5].features, bad[5].uws + 1)
    with pytest.raises(AssertionError, match="row 5"):
        audit_labels(bad, pairs, fraction=1.0)


def test_csv_single_row():
    text = ",".join(CSV_HEADER) + "\n3,3,17,3,42\n"
    assert loads_csv(text) == [DatasetRow(3, 3, 17, 3, 42)]


@given(rows_strategy)
def test_csv_round_trip(rows):
    assert loads_csv(dumps_csv(rows)) == rows


def test_csv_file_round_trip(tmp_path):
    rows = build_dataset(8)
    path = tmp_path / "d.csv"
    write_csv(rows, path)
    assert read_csv(path) == rows
    raw = path.read_bytes()
    assert raw.startswith(b"input_degree,input_weight,control_degree,control_weight,uws\n")
    assert b"\r" not in raw


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("a,b,c,d,e\n1,2,3,4,5\n", 1),
    (",".join(CSV_HEADER) + "\n1,2,3,4,5\n1,2,3,4\n", 3),
    (",".join(CSV_HEADER) + "\n1,2,x,4,5\n", 2),
])
def test_csv_errors(text, line):
    with pytest.raises(ParseError) as info:
        loads_csv(text)
    assert info.value.line == line


def test_merge():
    a, b = build_dataset(8), build_dataset(9)
    assert merge_datasets([a]) == a
    assert merge_datasets([]) == []
    assert merge_datasets([a, b]) == a + b


def test_merge_size_sum():
    assert sum(PAIR_COUNTS[d] for d in range(7, 20)) == 85900


def test_scaler_formula():
    rows = [DatasetRow(2, 7, 3, 3, 10), DatasetRow(5, 7, 4, 5, 20), DatasetRow(17, 7, 5, 7, 30)]
    params = fit_scaler(rows)
    t = transform(params, rows)
    assert t[:, 0].tolist() == [0.0, 0.2, 1.0]
    assert t[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert t[:, 4].tolist() == [0.0, 0.5, 1.0]
    assert np.allclose(inverse_transform_label(params, t[:, 4]), [10, 20, 30], rtol=0, atol=1e-12)


def test_scaler_out_of_range_not_clamped():
    params = ScalerParams((0, 0, 0, 0, 0), (10, 10, 10, 10, 10))
    assert transform_features(params, [[20, -10, 5, 0]]).tolist() == [[2.0, -1.0, 0.5, 0.0]]


def test_unfitted_scaler():
    with pytest.raises(ValueError):
        transform(None, [DatasetRow(1, 1, 1, 1, 1)])
    with pytest.raises(ValueError):
        inverse_transform_label(None, 0.5)


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=50))
def test_label_inverse(values):
    rows = [DatasetRow(1, 1, 1, 1, v) for v in values]
    params = fit_scaler(rows)
    back = inverse_transform_label(params, transform(params, rows)[:, 4])
    if len(set(values)) > 1:
        assert np.max(np.abs(back - np.array(values))) <= 1e-12 * max(values)


@pytest.mark.parametrize("total, expected", [(70416, 56333), (245628, 196502), (85900, 68720), (10, 8),
                                             (5, 4), (2, 2)])
def test_train_size(total, expected):
    assert train_size(total, 0.2) == expected


def test_split_deterministic_disjoint_exhaustive():
    rows = [DatasetRow(i, 0, 0, 0, i) for i in range(101)]
    tr, te = split(rows)
    assert len(tr) == 81 and len(te) == 20
    assert sorted(tr + te, key=lambda r: r.uws) == rows
    assert split(rows) == (tr, te)
    assert split(rows, SplitSpec(0.2, 124)) != (tr, te)


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_split_bad_fraction(fraction):
    with pytest.raises(ValueError):
        split([DatasetRow(0, 0, 0, 0, 0)] * 4, SplitSpec(fraction))


def test_scaled_train_in_unit_interval():
    rows = merge_datasets(build_dataset(d) for d in (8, 10, 11))
    tr, te = split(rows)
    params = fit_scaler(tr)
    t = transform(params, tr)
    assert t.min() >= 0.0 and t.max() <= 1.0
