"""Dataset loading, validation and the train/validation/test split protocol."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, ValidationError, record_warning

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

_SPLIT_TAG = 0x51  # spawn-key tag reserved for split streams


@dataclass(frozen=True)
class FeatureColumn:
    """One feature: continuous values are float64 with NaN for missing,
    categorical values are strings (the missing marker is kept as a token)."""

    name: str
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise ValidationError(f"unknown column kind {self.kind!r}")
        self.values.setflags(write=False)

    def subset(self, idx: np.ndarray) -> "FeatureColumn":
        return FeatureColumn(self.name, self.kind, self.values[idx])


@dataclass(frozen=True)
class Dataset:
    features: tuple[FeatureColumn, ...]
    labels: np.ndarray  # 0-based class indices
    class_names: tuple[str, ...]

    def __post_init__(self):
        n = len(self.labels)
        for col in self.features:
            if len(col.values) != n:
                raise ValidationError(
                    f"column {col.name!r} has {len(col.values)} rows, labels have {n}"
                )
        if n < 1:
            raise ValidationError("dataset has no rows")
        if len(self.class_names) < 2:
            raise ValidationError("dataset must contain at least two classes")
        present = np.bincount(self.labels, minlength=len(self.class_names))
        if (present == 0).any():
            raise ValidationError("every class must appear at least once")
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def p(self) -> int:
        return len(self.features)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(col.name for col in self.features)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            tuple(col.subset(idx) for col in self.features),
            self.labels[idx].copy(),
            self.class_names,
        )

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.class_names))


@dataclass(frozen=True)
class SplitPlan:
    """Per (run, fold) disjoint train/validation/test index sets."""

    runs: int
    folds: int
    seed: int
    indices: tuple  # indices[run][fold] == (train, validation, test)
    warnings: tuple[str, ...] = field(default=())


def parse_schema_file(path) -> dict[str, str]:
    """Read a column-kind declaration file: one `name,kind` line per column."""
    schema = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [part.strip() for part in line.split(",")]
            if len(parts) != 2 or parts[1] not in (CONTINUOUS, CATEGORICAL):
                raise ParseError(
                    f"schema line must be `name,kind` with kind continuous|categorical: {line!r}",
                    row=lineno,
                )
            schema[parts[0]] = parts[1]
    return schema


def _parse_continuous(cells, colname, col_idx, missing):
    out = np.empty(len(cells), dtype=np.float64)
    for i, cell in enumerate(cells):
        if cell == missing or cell == "":
            out[i] = np.nan
            continue
        try:
            val = float(cell)
        except ValueError:
            raise ParseError(
                f"column {colname!r} declared continuous but value {cell!r} is not a number",
                row=i + 2,  # header is row 1
                column=col_idx + 1,
            ) from None
        if not math.isfinite(val):
            raise ParseError(
                f"column {colname!r} contains non-finite value {cell!r}",
                row=i + 2,
                column=col_idx + 1,
            )
        out[i] = val
    return out


def _all_numeric(cells, missing):
    for cell in cells:
        if cell == missing or cell == "":
            continue
        try:
            if not math.isfinite(float(cell)):
                return False
        except ValueError:
            return False
    return True


def load_csv(path, schema=None, label_column="class", missing="?", warnings=None) -> Dataset:
    """Load an RFC-4180-style CSV with a header row into a Dataset.

    Columns named in *schema* get the declared kind; the rest are inferred
    (all-numeric values -> continuous, anything else -> categorical). Rows
    whose label cell is missing are dropped.
    """
    schema = dict(schema or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file: header row required", row=1) from None
        header = [h.strip() for h in header]
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}",
                    row=reader.line_num,
                )
            rows.append([cell.strip() for cell in row])

    if label_column not in header:
        raise SchemaError(f"label column {label_column!r} not found in header {header}")
    for name in schema:
        if name not in header:
            raise SchemaError(f"schema declares unknown column {name!r}")

    label_idx = header.index(label_column)
    kept, dropped = [], 0
    for row in rows:
        if row[label_idx] == missing or row[label_idx] == "":
            dropped += 1
        else:
            kept.append(row)
    if dropped:
        record_warning(warnings, f"dropped {dropped} row(s) with a missing label")
    if not kept:
        raise ValidationError("no rows with a usable label")

    label_cells = [row[label_idx] for row in kept]
    class_names = tuple(sorted(set(label_cells)))
    if len(class_names) < 2:
        raise ValidationError(
            f"label column {label_column!r} has a single distinct value {class_names[0]!r}"
        )
    class_index = {name: k for k, name in enumerate(class_names)}
    labels = np.array([class_index[cell] for cell in label_cells], dtype=np.int64)

    features = []
    for j, name in enumerate(header):
        if j == label_idx:
            continue
        cells = [row[j] for row in kept]
        kind = schema.get(name)
        if kind is None:
            kind = CONTINUOUS if _all_numeric(cells, missing) else CATEGORICAL
        if kind == CONTINUOUS:
            values = _parse_continuous(cells, name, j, missing)
        else:
            # missing categorical cells become a dedicated token (the marker itself)
            values = np.array([cell if cell != "" else missing for cell in cells], dtype=object)
        features.append(FeatureColumn(name, kind, values))

    if not features:
        raise ValidationError("dataset has no feature columns")
    return Dataset(tuple(features), labels, class_names)


def _deal_folds(groups, folds, rng):
    """Shuffle each group and deal members round-robin into folds, rotating the
    starting fold so fold sizes stay balanced across groups."""
    fold_members = [[] for _ in range(folds)]
    offset = 0
    for group in groups:
        idx = np.array(group, dtype=np.int64)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            fold_members[(offset + j) % folds].append(int(i))
        offset = (offset + len(idx)) % folds
    return [np.array(sorted(members), dtype=np.int64) for members in fold_members]


def make_split_plan(
    ds: Dataset, runs: int, folds: int, seed: int, stratify: bool = True, warnings=None
) -> SplitPlan:
    """Stratified cross-validation plan: per fold, 1/folds of rows is the test
    set and the remainder is split train:validation = 2:1 (rounding favours
    train). Deterministic given (ds, runs, folds, seed)."""
    if folds < 2:
        raise ValidationError("folds must be >= 2")
    if ds.n < folds:
        raise ValidationError(f"need at least {folds} rows for {folds} folds, have {ds.n}")
    warn_sink = [] if warnings is None else warnings

    counts = ds.class_counts()
    if stratify and (counts < folds).any():
        small = [ds.class_names[k] for k in np.flatnonzero(counts < folds)]
        record_warning(
            warn_sink,
            f"class(es) {small} have fewer members than folds={folds}; "
            "fold stratification degrades to best effort",
        )

    if stratify:
        groups_template = [np.flatnonzero(ds.labels == k) for k in range(len(ds.class_names))]
    else:
        groups_template = [np.arange(ds.n)]

    all_runs = []
    for run in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_SPLIT_TAG, run)))
        shuffled_groups = []
        for group in groups_template:
            g = group.copy()
            rng.shuffle(g)
            shuffled_groups.append(g)
        fold_members = _deal_folds(shuffled_groups, folds, rng)
        fold_sets = [set(members.tolist()) for members in fold_members]

        run_folds = []
        for f in range(folds):
            test = fold_members[f]
            train_parts, val_parts = [], []
            for g in shuffled_groups:
                rest = [int(i) for i in g if i not in fold_sets[f]]
                n_val = len(rest) // 3  # favour train on rounding
                n_train = len(rest) - n_val
                train_parts.extend(rest[:n_train])
                val_parts.extend(rest[n_train:])
            train = np.array(sorted(train_parts), dtype=np.int64)
            val = np.array(sorted(val_parts), dtype=np.int64)
            for arr in (train, val, test):
                arr.setflags(write=False)
            run_folds.append((train, val, test))
        all_runs.append(tuple(run_folds))

    return SplitPlan(runs, folds, seed, tuple(all_runs), tuple(warn_sink))


def write_dataset_csv(ds: Dataset, path, label_column="class"):
    """Write a Dataset back out as CSV (floats via repr, so output is
    byte-stable across runs)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([col.name for col in ds.features] + [label_column])
        for i in range(ds.n):
            row = []
            for col in ds.features:
                v = col.values[i]
                if col.kind == CONTINUOUS:
                    row.append("?" if np.isnan(v) else repr(float(v)))
                else:
                    row.append(str(v))
            row.append(ds.class_names[ds.labels[i]])
            writer.writerow(row)
