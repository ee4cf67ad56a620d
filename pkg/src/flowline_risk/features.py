"""Design-matrix assembly from merged flowlines, splitting, and scaling.

Numeric columns come straight from the operational attributes plus the
derived line age and the three geometry measurements; nominal attributes
expand through one-hot encoding. The spill root cause is never a
predictor: it only exists for positive rows, so admitting it would leak
the label.
"""

from __future__ import annotations

import csv
import datetime
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import MultiLine, bounding_box, line_count, multiline_length
from .matcher import MergedFlowline

log = logging.getLogger(__name__)

NUMERIC_COLUMNS = (
    "diameter_in", "length_ft", "max_op_pressure", "line_age",
    "geom_length_m", "n_lines", "bbox_area_m2",
)
CATEGORICAL_COLUMNS = (
    "operator_number", "flowline_id", "location_id", "status",
    "flowline_action", "location_type", "fluid_type", "material",
)
ID_LIKE_COLUMNS = ("flowline_id", "location_id")


class FutureDate(ValueError):
    pass


class EmptyColumn(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class DegenerateClass(ValueError):
    pass


@dataclass(frozen=True)
class ColumnMeta:
    """Name plus provenance of one design-matrix column."""

    name: str
    kind: str                  # "numeric" or "one-hot"
    source: str | None = None  # one-hot: the categorical column encoded
    category: str | None = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.kind == "one-hot":
            d["source"] = self.source
            d["category"] = self.category
        return d

    @staticmethod
    def from_dict(d: dict) -> "ColumnMeta":
        return ColumnMeta(d["name"], d["kind"], d.get("source"), d.get("category"))


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    column_meta: list[ColumnMeta]
    row_ids: list[str]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.shape[0] != len(self.y) or self.X.shape[0] != len(self.row_ids):
            raise ValueError("X, y and row_ids disagree on row count")
        if self.X.shape[1] != len(self.column_meta):
            raise ValueError("X and column_meta disagree on column count")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("design matrix contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def column_names(self) -> list[str]:
        return [c.name for c in self.column_meta]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(
            self.X[indices], self.y[indices], self.column_meta,
            [self.row_ids[i] for i in indices],
        )


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int


@dataclass
class FeatureConfig:
    drop_id_like: bool = False
    one_hot_columns: tuple[str, ...] = CATEGORICAL_COLUMNS
    reference_date: datetime.date = field(default_factory=datetime.date.today)
    count_segments: bool = False

    def encoded_columns(self) -> list[str]:
        cols = [c for c in self.one_hot_columns]
        if self.drop_id_like:
            cols = [c for c in cols if c not in ID_LIKE_COLUMNS]
        return cols


def line_age(construction_date: datetime.date, reference_date: datetime.date) -> float:
    """Age in fractional years, day count over 365.25."""
    if construction_date > reference_date:
        raise FutureDate(f"construction date {construction_date} is after {reference_date}")
    return (reference_date - construction_date).days / 365.25


class OneHotEncoder:
    """One binary column per category, category order = first appearance."""

    def __init__(self):
        self.categories: dict[str, list[str]] = {}

    def fit(self, table: dict[str, list[str]], columns: list[str]) -> "OneHotEncoder":
        for column in columns:
            values = table[column]
            if not values:
                raise EmptyColumn(column)
            seen: list[str] = []
            for v in values:
                if v not in seen:
                    seen.append(v)
            self.categories[column] = seen
        return self

    def transform(self, table: dict[str, list[str]]) -> tuple[np.ndarray, list[ColumnMeta]]:
        blocks = []
        metas: list[ColumnMeta] = []
        n = None
        for column, cats in self.categories.items():
            values = table[column]
            n = len(values) if n is None else n
            block = np.zeros((len(values), len(cats)))
            lookup = {c: j for j, c in enumerate(cats)}
            for i, v in enumerate(values):
                j = lookup.get(v)
                if j is None:
                    log.warning("unseen %s category %r maps to all-zeros", column, v)
                else:
                    block[i, j] = 1.0
            blocks.append(block)
            metas.extend(ColumnMeta(f"{column}={c}", "one-hot", column, c) for c in cats)
        if not blocks:
            return np.zeros((0, 0)), []
        return np.hstack(blocks), metas


def one_hot(table: dict[str, list[str]], columns: list[str]) -> tuple[np.ndarray, list[ColumnMeta]]:
    """Fit-and-transform convenience over OneHotEncoder."""
    return OneHotEncoder().fit(table, columns).transform(table)


def geometry_features(g: MultiLine, count_segments: bool = False) -> tuple[float, int, float]:
    """(total length m, member count, bounding box area m2)."""
    return (
        multiline_length(g),
        line_count(g, count_segments=count_segments),
        bounding_box(g).area(),
    )


def assemble(merged: list[MergedFlowline], config: FeatureConfig | None = None) -> Dataset:
    """Numeric design matrix plus binary risk target from merged flowlines."""
    if not merged:
        raise EmptyInput("no merged flowlines to featurize")
    cfg = config or FeatureConfig()

    encoded = cfg.encoded_columns()
    if not cfg.drop_id_like and any(c in encoded for c in ID_LIKE_COLUMNS):
        log.warning(
            "one-hot encoding id-like columns %s; near-unique keys blow up the "
            "matrix width and can leak identity, pass drop_id_like=True to omit them",
            [c for c in ID_LIKE_COLUMNS if c in encoded],
        )

    numeric = np.empty((len(merged), len(NUMERIC_COLUMNS)))
    for i, m in enumerate(merged):
        op = m.operational
        geom_len, n_lines, box_area = geometry_features(m.geometry, cfg.count_segments)
        numeric[i] = (
            op.diameter_inches,
            op.length_feet,
            op.max_operating_pressure,
            line_age(op.construction_date, cfg.reference_date),
            geom_len,
            float(n_lines),
            box_area,
        )
    metas = [ColumnMeta(name, "numeric") for name in NUMERIC_COLUMNS]

    table = {
        column: [getattr(m.operational, _FIELD_BY_COLUMN[column]) for m in merged]
        for column in encoded
    }
    if encoded:
        hot, hot_metas = one_hot(table, encoded)
        X = np.hstack([numeric, hot])
        metas.extend(hot_metas)
    else:
        X = numeric

    y = np.array([m.risk for m in merged], dtype=int)
    return Dataset(X, y, metas, [m.flowline_id for m in merged])


_FIELD_BY_COLUMN = {
    "operator_number": "operator_number",
    "flowline_id": "flowline_id",
    "location_id": "location_id",
    "status": "status",
    "flowline_action": "flowline_action",
    "location_type": "location_type",
    "fluid_type": "fluid_type",
    "material": "material",
}


def stratified_split(ds: Dataset, train_fraction: float = 0.7, seed: int = 0) -> SplitPair:
    """Seeded per-class 70/30 partition with largest-remainder rounding.

    Any class with at least two members contributes at least one row to
    each side; with less than one positive per hundred rows, naive rounding
    could otherwise empty the test positives and leave recall undefined.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    classes, counts = np.unique(ds.y, return_counts=True)
    count_of = dict(zip(classes.tolist(), counts.tolist()))
    if len(classes) < 2:
        raise DegenerateClass("need at least two classes to stratify")

    rng = np.random.default_rng(seed)
    total_train = int(round(train_fraction * ds.n_rows))

    # Single-member classes cannot sit on both sides; they go to train.
    singles = [c for c in classes.tolist() if count_of[c] == 1]
    if singles:
        log.warning("classes %s have one member each, assigning them to train", singles)
    splittable = [c for c in classes.tolist() if count_of[c] >= 2]
    alloc = {c: 1 for c in singles}

    # Largest-remainder allocation of the remaining train budget.
    budget = total_train - len(singles)
    targets = {c: train_fraction * count_of[c] for c in splittable}
    for c in splittable:
        alloc[c] = int(np.floor(targets[c]))
    leftover = budget - sum(alloc[c] for c in splittable)
    by_remainder = sorted(splittable, key=lambda c: (-(targets[c] - alloc[c]), c))
    for c in by_remainder[:max(leftover, 0)]:
        alloc[c] += 1
    for c in splittable:
        alloc[c] = min(max(alloc[c], 1), count_of[c] - 1)  # both sides non-empty

    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in classes:
        members = np.flatnonzero(ds.y == c)
        members = members[rng.permutation(len(members))]
        k = alloc[c]
        train_idx.extend(members[:k].tolist())
        test_idx.extend(members[k:].tolist())

    train_idx.sort()
    test_idx.sort()
    return SplitPair(ds.subset(np.array(train_idx)), ds.subset(np.array(test_idx)), seed)


def standardize(
    train: np.ndarray, test: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray]:
    """Z-score both matrices with the train mean and population sd.

    Zero-variance columns pass through unscaled with a warning.
    """
    train = np.asarray(train, dtype=float)
    if train.shape[0] == 0:
        raise ValueError("empty training matrix")
    means = train.mean(axis=0)
    sds = train.std(axis=0)
    flat = sds == 0.0
    if np.any(flat):
        log.warning("%d zero-variance columns left unscaled", int(np.sum(flat)))
    safe = np.where(flat, 1.0, sds)
    train_z = (train - means) / safe
    test_z = None if test is None else (np.asarray(test, dtype=float) - means) / safe
    return train_z, test_z, means, sds


def save_dataset(ds: Dataset, csv_path, meta_path, seed: int | None = None, extra: dict | None = None) -> None:
    """Write the matrix as CSV plus a JSON sidecar with column provenance."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", *ds.column_names(), "risk"])
        for i in range(ds.n_rows):
            writer.writerow([ds.row_ids[i], *[repr(float(v)) for v in ds.X[i]], int(ds.y[i])])
    sidecar = {
        "columns": [c.to_dict() for c in ds.column_meta],
        "n_rows": ds.n_rows,
        "seed": seed,
    }
    if extra:
        sidecar.update(extra)
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(csv_path, meta_path) -> Dataset:
    with open(meta_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    metas = [ColumnMeta.from_dict(d) for d in sidecar["columns"]]
    row_ids: list[str] = []
    rows: list[list[float]] = []
    ys: list[int] = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["row_id", *[c.name for c in metas], "risk"]
        if header != expected:
            raise ValueError("feature CSV header does not match its sidecar")
        for row in reader:
            row_ids.append(row[0])
            rows.append([float(v) for v in row[1:-1]])
            ys.append(int(row[-1]))
    X = np.array(rows) if rows else np.zeros((0, len(metas)))
    return Dataset(X, np.array(ys, dtype=int), metas, row_ids)
