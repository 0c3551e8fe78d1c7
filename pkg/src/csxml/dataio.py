"""Dataset ingestion, relabeling, splitting, oversampling, and windowing.

CSV files are comma-separated with a header row, UTF-8, '.' decimals.
Schema files list one `name: kind` pair per line, kind in
{continuous, categorical}; an optional trailing note after a second ':'
is informational.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyFile,
    LeakageError,
    MissingColumn,
    SeriesTooShort,
    SingleClassDataset,
    UnknownClassName,
    UnparsableValue,
)

log = logging.getLogger(__name__)

PHYSIOLOGICAL_CLASSES = {"low sickness": 0, "moderate sickness": 1, "acute sickness": 1}
GAMEPLAY_CLASSES = {"none": 0, "slight": 1, "moderate": 1, "severe": 1}

TAG_TRAIN = "train"
TAG_TEST = "test"


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    kind: str  # "continuous" | "categorical"
    note: str = ""


@dataclass
class Dataset:
    """Feature matrix plus aligned labels.

    `labels` hold binary 0/1 values (label_kind "binary") or FMS scores in
    [0, 10] (label_kind "fms"). Categorical features are stored as their
    stable first-seen integer codes; `codes` maps name -> {string: code}.
    `row_tags` carries split provenance so training-only transforms can
    assert they never see test rows.
    """

    schema: list
    X: np.ndarray
    labels: np.ndarray
    label_kind: str  # "binary" | "fms"
    provenance: str = "synthetic"
    codes: dict = field(default_factory=dict)
    row_tags: np.ndarray | None = None
    n_rejected_rows: int = 0

    def __post_init__(self):
        if self.X.shape[0] != self.labels.shape[0]:
            raise ValueError("row count != label count")

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def feature_names(self):
        return [c.name for c in self.schema]

    def feature_kinds(self):
        return [c.kind for c in self.schema]

    def take(self, idx, tag=None):
        tags = None
        if tag is not None:
            tags = np.full(len(idx), tag, dtype=object)
        elif self.row_tags is not None:
            tags = self.row_tags[idx]
        return Dataset(self.schema, self.X[idx], self.labels[idx], self.label_kind,
                       self.provenance, self.codes, tags, 0)


@dataclass
class WindowedSeries:
    """Sliding windows over a time-ordered series, flattened step-major."""

    window: int
    dataset: Dataset  # flattened windows with the next-step FMS target


def assert_train_only(ds: Dataset, transform: str):
    """Raise if any row is tagged as test data (leakage guard)."""
    if ds.row_tags is not None and np.any(ds.row_tags == TAG_TEST):
        raise LeakageError(f"{transform} received test-tagged rows")


def read_schema(path):
    """Parse a schema file into a list of FeatureColumn."""
    cols = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(":", 2)]
            if len(parts) < 2:
                raise UnparsableValue(len(cols) + 1, "schema", line)
            name, kind = parts[0], parts[1]
            note = parts[2] if len(parts) == 3 else ""
            if kind not in ("continuous", "categorical"):
                raise UnparsableValue(len(cols) + 1, name, kind)
            if name in seen:
                raise UnparsableValue(len(cols) + 1, name, "duplicate name")
            seen.add(name)
            cols.append(FeatureColumn(name, kind, note))
    if not cols:
        raise EmptyFile(f"schema file has no columns: {path}")
    return cols


def load_dataset(path, schema, label_column="label", label_kind="binary",
                 provenance="synthetic", codes=None):
    """Load a CSV into a Dataset.

    Categorical strings map to stable first-seen integer codes (or reuse a
    supplied `codes` mapping so prediction-time encoding matches training).
    With label_kind="class", string class names are converted through
    `relabel_binary` using `provenance`. Rows with missing cells are
    rejected with a counted warning.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"no header row in {path}") from None
        header = [h.strip() for h in header]
        col_pos = {}
        for col in schema:
            if col.name not in header:
                raise MissingColumn(col.name)
            col_pos[col.name] = header.index(col.name)
        if label_column not in header:
            raise MissingColumn(label_column)
        label_pos = header.index(label_column)

        prior = codes or {}
        codes = {c.name: dict(prior.get(c.name, {})) for c in schema}
        rows, labels = [], []
        n_rejected = 0
        for i, rec in enumerate(reader, start=2):  # header is line 1
            if not rec or all(cell.strip() == "" for cell in rec):
                continue
            cells = [rec[col_pos[c.name]].strip() if col_pos[c.name] < len(rec) else ""
                     for c in schema]
            label_cell = rec[label_pos].strip() if label_pos < len(rec) else ""
            if "" in cells or label_cell == "":
                n_rejected += 1
                continue
            row = np.empty(len(schema))
            for j, (col, cell) in enumerate(zip(schema, cells)):
                if col.kind == "categorical":
                    cmap = codes[col.name]
                    if cell not in cmap:
                        cmap[cell] = len(cmap)
                    row[j] = cmap[cell]
                else:
                    try:
                        row[j] = float(cell)
                    except ValueError:
                        raise UnparsableValue(i, col.name, cell) from None
            if label_kind == "class":
                labels.append(float(relabel_binary(label_cell, provenance)))
            else:
                try:
                    labels.append(float(label_cell))
                except ValueError:
                    raise UnparsableValue(i, label_column, label_cell) from None
            rows.append(row)

    if not rows:
        raise EmptyFile(f"no data rows in {path}")
    if n_rejected:
        log.warning("rejected %d rows with missing cells in %s", n_rejected, path)
    X = np.vstack(rows)
    y = np.asarray(labels)
    kind = "binary" if label_kind == "class" else label_kind
    if kind == "binary" and not np.isin(y, (0.0, 1.0)).all():
        raise UnparsableValue("*", label_column, "binary labels must be 0/1")
    if kind == "fms" and (y.min() < 0.0 or y.max() > 10.0):
        raise UnparsableValue("*", label_column, "FMS scores must lie in [0, 10]")
    return Dataset(schema, X, y, kind, provenance, codes, None, n_rejected)


def relabel_binary(raw_class, provenance):
    """Map a severity class name to the binary cybersickness label."""
    table = {"physiological": PHYSIOLOGICAL_CLASSES, "gameplay": GAMEPLAY_CLASSES}
    if provenance not in table:
        raise UnknownClassName(f"unknown provenance: {provenance!r}")
    mapping = table[provenance]
    key = raw_class.strip().lower()
    if key not in mapping:
        raise UnknownClassName(f"unknown class {raw_class!r} for {provenance}")
    return mapping[key]


def split(ds: Dataset, train_fraction, seed):
    """Shuffled row-level split; train gets floor(N * fraction) rows."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if ds.n_rows == 0:
        raise ValueError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.n_rows)
    n_train = int(np.floor(ds.n_rows * train_fraction))
    train = ds.take(perm[:n_train], tag=TAG_TRAIN)
    test = ds.take(perm[n_train:], tag=TAG_TEST)
    return train, test


def oversample(train: Dataset, seed):
    """Duplicate minority-class rows with replacement until classes balance.

    Training data only; all original rows are retained.
    """
    assert_train_only(train, "oversample")
    if train.label_kind != "binary":
        raise SingleClassDataset("oversampling requires binary labels")
    y = train.labels.astype(int)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassDataset("both classes must be present")
    if n_pos == n_neg:
        return train
    minority = 1 if n_pos < n_neg else 0
    deficit = abs(n_pos - n_neg)
    rng = np.random.default_rng(seed)
    pool = np.flatnonzero(y == minority)
    extra = rng.choice(pool, size=deficit, replace=True)
    idx = np.concatenate([np.arange(train.n_rows), extra])
    return train.take(idx)


def make_windows(series: Dataset, w):
    """Build (w-step window, next-step FMS) pairs from a time-ordered series.

    Windows flatten step-major: all features of the earliest step first.
    """
    if w < 1:
        raise ValueError("window length must be positive")
    if series.label_kind != "fms":
        raise SeriesTooShort("windowing requires FMS-labeled series")
    n = series.n_rows
    if n <= w:
        raise SeriesTooShort(f"series length {n} must exceed window {w}")
    n_out = n - w
    f = series.n_features
    Xw = np.empty((n_out, w * f))
    for i in range(n_out):
        Xw[i] = series.X[i:i + w].reshape(-1)
    targets = series.labels[w:]
    schema = [FeatureColumn(f"{c.name}@t-{w - 1 - s}", c.kind, c.note)
              for s in range(w) for c in series.schema]
    out = Dataset(schema, Xw, targets, "fms", series.provenance, series.codes)
    return WindowedSeries(w, out)
