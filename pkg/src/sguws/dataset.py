"""Shrinking-generator datasets: pair enumeration, labelling, CSV I/O, scaling, splitting."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .complexity import BRUTE_FORCE_MAX_LENGTH, brute_force_uws, uws_cyclic, uws_linear
from .errors import ParseError, ResourceError
from .generator import DEFAULT_BIT_BUDGET, sg_period_array, sg_period_length
from .gf2poly import BinaryPolynomial, enumerate_primitive

log = logging.getLogger(__name__)

CSV_HEADER = ("input_degree", "input_weight", "control_degree", "control_weight", "uws")
FEATURE_NAMES = ("Input Degree", "Input Weight", "Control Degree", "Control Weight")


@dataclass(frozen=True)
class DatasetRow:
    input_degree: int
    input_weight: int
    control_degree: int
    control_weight: int
    uws: int

    @property
    def features(self) -> tuple[int, int, int, int]:
        return (self.input_degree, self.input_weight, self.control_degree, self.control_weight)


Pair = tuple[BinaryPolynomial, BinaryPolynomial]


def enumerate_pairs(sg_degree: int, min_component_degree: int = 3,
                    require_coprime_degrees: bool = True) -> list[Pair]:
    """Ordered (input, control) primitive pairs whose degrees sum to ``sg_degree``.

    Sorted by (input degree, input mask, control mask). An empty list means no
    admissible pair.
    """
    min_component_degree = max(2, min_component_degree)
    pairs = []
    for a in range(min_component_degree, sg_degree - min_component_degree + 1):
        b = sg_degree - a
        if require_coprime_degrees and math.gcd(a, b) != 1:
            continue
        controls = enumerate_primitive(b)
        for p in enumerate_primitive(a):
            pairs.extend((p, q) for q in controls)
    return pairs


def label_pair(input_poly: BinaryPolynomial, control_poly: BinaryPolynomial,
               cyclic: bool = False, bit_budget: int = DEFAULT_BIT_BUDGET) -> DatasetRow:
    """Features and UWS label for one pair, using all-ones seeds and one full period."""
    bits = sg_period_array(input_poly, control_poly, bit_budget=bit_budget)
    result = uws_cyclic(bits, witness=False) if cyclic else uws_linear(bits, witness=False)
    return DatasetRow(input_poly.degree, input_poly.weight,
                      control_poly.degree, control_poly.weight, result.uws)


def _label_shard(args) -> list[tuple[int, ...]]:
    masks, cyclic, bit_budget = args
    out = []
    for a, b in masks:
        try:
            row = label_pair(BinaryPolynomial(a), BinaryPolynomial(b), cyclic, bit_budget)
        except Exception as exc:
            raise RuntimeError(
                f"labelling pair ({BinaryPolynomial(a)}, {BinaryPolynomial(b)}) failed: {exc}") from exc
        out.append(astuple(row))
    return out


def _shards(items: Sequence, count: int) -> list[Sequence]:
    size = max(1, math.ceil(len(items) / count))
    return [items[i:i + size] for i in range(0, len(items), size)]


def build_dataset(sg_degree: int, min_component_degree: int = 3, require_coprime_degrees: bool = True,
                  workers: int = 1, cyclic: bool = False, bit_budget: int = DEFAULT_BIT_BUDGET,
                  audit_fraction: float = 0.01, audit_seed: int = 0) -> list[DatasetRow]:
    """Label every admissible pair for ``sg_degree``.

    Pairs are split into contiguous shards, one job per shard; rows come back
    in enumeration order whatever the worker count. A random ``audit_fraction``
    of rows (at least one) is re-checked against the brute-force UWS.
    """
    pairs = enumerate_pairs(sg_degree, min_component_degree, require_coprime_degrees)
    if not pairs:
        return []
    for p, q in pairs:
        length = sg_period_length(p.degree, q.degree)
        if length > bit_budget:
            raise ResourceError(f"pair ({p}, {q}) needs {length} bits, above the budget of {bit_budget}")
    masks = [(p.mask, q.mask) for p, q in pairs]
    workers = max(1, int(workers))
    # several shards per worker keeps the pool busy when shard costs differ
    shards = _shards(masks, workers * 4 if workers > 1 else 1)
    jobs = [(s, cyclic, bit_budget) for s in shards]
    if workers == 1:
        results = [_label_shard(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_label_shard, jobs))
    rows = [DatasetRow(*t) for shard in results for t in shard]
    log.info("sg degree %d: %d rows", sg_degree, len(rows))
    if audit_fraction > 0:
        audit_labels(rows, pairs, audit_fraction, audit_seed, cyclic)
    return rows


def audit_labels(rows: Sequence[DatasetRow], pairs: Sequence[Pair], fraction: float = 0.01,
                 seed: int = 0, cyclic: bool = False) -> list[int]:
    """Recompute a seeded sample of labels by brute force; raise on any mismatch.

    Returns the audited row indices. Rows whose keystream exceeds the
    brute-force length guard are not eligible.
    """
    if len(rows) != len(pairs):
        raise ValueError("rows and pairs differ in length")
    eligible = [i for i, (p, q) in enumerate(pairs)
                if sg_period_length(p.degree, q.degree) <= BRUTE_FORCE_MAX_LENGTH]
    if not eligible:
        return []
    k = min(len(eligible), max(1, math.ceil(fraction * len(rows))))
    rng = np.random.default_rng(seed)
    picked = sorted(rng.choice(eligible, size=k, replace=False).tolist())
    for i in picked:
        p, q = pairs[i]
        expected = brute_force_uws(sg_period_array(p, q), "cyclic" if cyclic else "linear").uws
        if rows[i].uws != expected:
            raise AssertionError(f"row {i} ({p}, {q}): stored UWS {rows[i].uws}, brute force {expected}")
    return picked


def write_csv(rows: Iterable[DatasetRow], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dumps_csv(rows))


def dumps_csv(rows: Iterable[DatasetRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(astuple(r))
    return buf.getvalue()


def loads_csv(text: str) -> list[DatasetRow]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("missing header", line=1)
    if tuple(lines[0].strip().split(",")) != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)!r}, got {lines[0]!r}", line=1)
    rows = []
    width = len(fields(DatasetRow))
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.strip().split(",")
        if len(parts) != width:
            raise ParseError(f"expected {width} fields, got {len(parts)}", line=lineno)
        try:
            values = [int(v) for v in parts]
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", line=lineno) from None
        rows.append(DatasetRow(*values))
    return rows


def read_csv(path) -> list[DatasetRow]:
    return loads_csv(Path(path).read_text())


def merge_datasets(datasets: Iterable[Sequence[DatasetRow]]) -> list[DatasetRow]:
    return [row for rows in datasets for row in rows]


def rows_to_matrix(rows: Sequence[DatasetRow]) -> np.ndarray:
    """Rows as an ``M x 5`` float matrix in CSV column order."""
    if len(rows) == 0:
        return np.zeros((0, len(CSV_HEADER)))
    return np.array([astuple(r) for r in rows], dtype=np.float64)


@dataclass(frozen=True)
class ScalerParams:
    """Per-column minima and maxima, columns in ``CSV_HEADER`` order."""

    min: tuple[float, ...]
    max: tuple[float, ...]

    @property
    def range(self) -> np.ndarray:
        return np.asarray(self.max) - np.asarray(self.min)

    def to_dict(self) -> dict:
        return {"min": list(self.min), "max": list(self.max)}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(tuple(float(v) for v in d["min"]), tuple(float(v) for v in d["max"]))


def fit_scaler(train_rows) -> ScalerParams:
    m = train_rows if isinstance(train_rows, np.ndarray) else rows_to_matrix(train_rows)
    if m.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    return ScalerParams(tuple(m.min(axis=0).tolist()), tuple(m.max(axis=0).tolist()))


def _scale(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    safe = np.where(span == 0, 1.0, span)
    # constant columns map to 0.0
    return np.where(span == 0, 0.0, (values - lo) / safe)


def transform(params: ScalerParams | None, rows) -> np.ndarray:
    """Scale a full ``M x 5`` table (features and label). Values outside the fitted range are kept."""
    if params is None:
        raise ValueError("scaler is not fitted")
    m = rows if isinstance(rows, np.ndarray) else rows_to_matrix(rows)
    return _scale(m, np.asarray(params.min), np.asarray(params.max))


def transform_features(params: ScalerParams | None, features) -> np.ndarray:
    """Scale an ``M x 4`` feature matrix with the first four columns of ``params``."""
    if params is None:
        raise ValueError("scaler is not fitted")
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return _scale(x, np.asarray(params.min[:4]), np.asarray(params.max[:4]))


def inverse_transform_label(params: ScalerParams | None, scaled):
    """Map scaled labels back to UWS units: ``scaled * range + min``."""
    if params is None:
        raise ValueError("scaler is not fitted")
    return np.asarray(scaled, dtype=np.float64) * (params.max[4] - params.min[4]) + params.min[4]


def xy(params: ScalerParams, rows) -> tuple[np.ndarray, np.ndarray]:
    """Scaled features ``(M, 4)`` and scaled targets ``(M, 1)``."""
    t = transform(params, rows)
    return t[:, :4], t[:, 4:5]


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.20
    seed: int = 123


def train_size(total: int, test_fraction: float) -> int:
    """Round-half-up of ``total * (1 - test_fraction)``, in exact arithmetic."""
    exact = total * (1 - Fraction(str(test_fraction)))
    return math.floor(exact + Fraction(1, 2))


def split(rows: Sequence, spec: SplitSpec = SplitSpec()) -> tuple[list, list]:
    """Seeded shuffle, then the first ``train_size`` rows train and the rest test."""
    if not 0 < spec.test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {spec.test_fraction}")
    if len(rows) < 2:
        raise ValueError("need at least two rows to split")
    order = np.random.default_rng(spec.seed).permutation(len(rows))
    n_train = train_size(len(rows), spec.test_fraction)
    rows = list(rows)
    return [rows[i] for i in order[:n_train]], [rows[i] for i in order[n_train:]]


def default_workers() -> int:
    return os.cpu_count() or 1
