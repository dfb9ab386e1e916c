"""Entropy-based MDLP discretization, fit on training data only.

Continuous features are recursively split at class-boundary midpoints; a
split is kept only when its information gain beats the minimum-description-
length stopping rule. Categorical features pass through with an extra bin
reserved for tokens unseen at fit time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataio import CATEGORICAL, CONTINUOUS, Dataset
from .errors import SchemaError

MISSING_CODE = -1  # continuous NaN when the fit data had no missing values


@dataclass(frozen=True)
class ContinuousBins:
    cuts: np.ndarray  # strictly increasing cut points
    has_missing_bin: bool

    @property
    def n_bins(self) -> int:
        return len(self.cuts) + 1 + (1 if self.has_missing_bin else 0)

    @property
    def missing_bin(self) -> int:
        return len(self.cuts) + 1 if self.has_missing_bin else MISSING_CODE


@dataclass(frozen=True)
class CategoricalBins:
    tokens: tuple[str, ...]  # sorted tokens observed at fit time

    @property
    def n_bins(self) -> int:
        return len(self.tokens) + 1  # trailing bin for unseen tokens

    @property
    def unseen_bin(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class BinMap:
    feature_names: tuple[str, ...]
    kinds: tuple[str, ...]
    per_feature: tuple  # ContinuousBins | CategoricalBins, aligned with names

    @property
    def bin_counts(self) -> np.ndarray:
        return np.array([b.n_bins for b in self.per_feature], dtype=np.int64)

    def to_json(self) -> str:
        # key order carries the feature order, so keys must not be sorted
        payload = {}
        for name, kind, b in zip(self.feature_names, self.kinds, self.per_feature):
            if kind == CONTINUOUS:
                payload[name] = {
                    "kind": kind,
                    "cuts": [float(c) for c in b.cuts],
                    "has_missing_bin": b.has_missing_bin,
                }
            else:
                payload[name] = {"kind": kind, "tokens": list(b.tokens)}
        return json.dumps(payload, indent=2)

    @staticmethod
    def from_json(text: str) -> "BinMap":
        payload = json.loads(text)
        names, kinds, per_feature = [], [], []
        for name, entry in payload.items():
            names.append(name)
            kinds.append(entry["kind"])
            if entry["kind"] == CONTINUOUS:
                per_feature.append(
                    ContinuousBins(np.array(entry["cuts"], dtype=np.float64),
                                   entry["has_missing_bin"])
                )
            else:
                per_feature.append(CategoricalBins(tuple(entry["tokens"])))
        return BinMap(tuple(names), tuple(kinds), tuple(per_feature))


@dataclass(frozen=True)
class DiscretizedDataset:
    codes: np.ndarray  # (n, p) int32 bin indices; MISSING_CODE marks "no information"
    bins: np.ndarray  # (p,) table size per feature
    labels: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.codes.setflags(write=False)
        self.bins.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def p(self) -> int:
        return self.codes.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def _entropy(counts: np.ndarray) -> float:
    """Shannon entropy in nats of a count vector."""
    total = counts.sum()
    if total == 0:
        return 0.0
    nz = counts[counts > 0]
    probs = nz / total
    return float(-(probs * np.log(probs)).sum())


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Row-wise entropy in nats of a (m, K) count matrix."""
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        probs = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
        logs = np.where(probs > 0, np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    return -(probs * logs).sum(axis=1)


def _mdlp_accepts(n, ent_s, k, ent1, k1, n1, ent2, k2, n2) -> bool:
    """Fayyad-Irani stopping rule, all entropies in nats (the usual base-2
    statement scaled by ln 2, which leaves the inequality unchanged)."""
    gain = ent_s - (n1 * ent1 + n2 * ent2) / n
    delta = math.log(3.0**k - 2.0) - (k * ent_s - k1 * ent1 - k2 * ent2)
    return gain > (math.log(n - 1.0) + delta) / n


def _boundary_flags(y, group_starts):
    """boundary[g] is True when a cut before value group g is a boundary
    point: the two adjacent groups carry more than one class between them.
    The property only involves adjacent groups, so it holds within any
    segment and is computed once per feature."""
    n_groups = len(group_starts) - 1
    first = y[group_starts[:-1]]
    group_id = np.cumsum(np.isin(np.arange(len(y)), group_starts[:-1])) - 1
    mixed = np.maximum.reduceat(y != first[group_id], group_starts[:-1])
    boundary = np.zeros(n_groups, dtype=bool)
    boundary[1:] = mixed[:-1] | mixed[1:] | (first[:-1] != first[1:])
    return boundary


def mdlp_cuts(values: np.ndarray, labels: np.ndarray, n_classes: int,
              boundary_only: bool = True) -> np.ndarray:
    """Fit MDLP cut points for one continuous feature.

    Returns the accepted cut points, strictly increasing. *boundary_only*
    restricts candidates to class-boundary midpoints (the optimum is always
    at one); the unrestricted variant exists for oracle tests.
    """
    mask = ~np.isnan(values)
    v = values[mask]
    y = labels[mask]
    if len(v) == 0:
        return np.array([], dtype=np.float64)
    order = np.argsort(v, kind="stable")
    v = v[order]
    y = y[order]
    n = len(v)

    # distinct-value group starts; group_starts[-1] == n is a sentinel
    is_new = np.empty(n, dtype=bool)
    is_new[0] = True
    is_new[1:] = v[1:] != v[:-1]
    group_starts = np.append(np.flatnonzero(is_new), n)
    n_groups = len(group_starts) - 1

    # prefix class counts at group boundaries: cum[g] = counts of y[:group_starts[g]]
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), y] = 1
    cum = np.zeros((n_groups + 1, n_classes), dtype=np.int64)
    np.cumsum(onehot, axis=0, out=onehot)
    cum[1:] = onehot[group_starts[1:] - 1]

    cuts = []
    stack = [(0, n_groups)]  # half-open group ranges
    while stack:
        lo_g, hi_g = stack.pop()
        if hi_g - lo_g < 2:
            continue
        if boundary_only:
            cands = _boundary_candidates(y, group_starts, lo_g, hi_g)
        else:
            cands = list(range(lo_g + 1, hi_g))
        if not cands:
            continue

        seg_counts = cum[hi_g] - cum[lo_g]
        seg_n = int(seg_counts.sum())
        ent_s = _entropy(seg_counts)
        k = int((seg_counts > 0).sum())

        left_counts = cum[cands] - cum[lo_g]
        right_counts = seg_counts - left_counts
        ent_left = _entropy_rows(left_counts)
        ent_right = _entropy_rows(right_counts)
        n_left = left_counts.sum(axis=1)
        n_right = right_counts.sum(axis=1)
        weighted = (n_left * ent_left + n_right * ent_right) / seg_n
        best = int(np.argmin(weighted))  # ties resolve to the smallest cut value
        g = cands[best]

        k1 = int((left_counts[best] > 0).sum())
        k2 = int((right_counts[best] > 0).sum())
        if _mdlp_accepts(seg_n, ent_s, k,
                         float(ent_left[best]), k1, int(n_left[best]),
                         float(ent_right[best]), k2, int(n_right[best])):
            cut = (v[group_starts[g] - 1] + v[group_starts[g]]) / 2.0
            cuts.append(float(cut))
            stack.append((g, hi_g))
            stack.append((lo_g, g))
    return np.array(sorted(cuts), dtype=np.float64)


def fit_mdlp(train: Dataset, boundary_only: bool = True) -> BinMap:
    """Fit the per-feature bin map on training data.

    A continuous feature with no accepted cut legitimately ends up with a
    single bin; its missing bin is reserved only when the training column
    actually contains missing values, so constant clean features keep exactly
    one bin and cancel in the posterior.
    """
    n_classes = len(train.class_names)
    per_feature = []
    for col in train.features:
        if col.kind == CONTINUOUS:
            cuts = mdlp_cuts(col.values, train.labels, n_classes, boundary_only)
            has_missing = bool(np.isnan(col.values).any())
            per_feature.append(ContinuousBins(cuts, has_missing))
        else:
            per_feature.append(CategoricalBins(tuple(sorted(set(col.values.tolist())))))
    return BinMap(train.feature_names, tuple(c.kind for c in train.features),
                  tuple(per_feature))


def transform(ds: Dataset, bins: BinMap) -> DiscretizedDataset:
    """Map every value to its bin index.

    Left-closed convention: a value equal to a cut goes to the bin on the
    left. Unseen categorical tokens go to the reserved unseen bin; a missing
    continuous value goes to the reserved missing bin when one exists, else
    to the MISSING_CODE sentinel (scored as uninformative downstream).
    """
    if ds.feature_names != bins.feature_names:
        raise SchemaError(
            f"feature names {ds.feature_names} do not match bin map {bins.feature_names}"
        )
    for col, kind in zip(ds.features, bins.kinds):
        if col.kind != kind:
            raise SchemaError(f"column {col.name!r} kind {col.kind!r} != fitted {kind!r}")

    codes = np.empty((ds.n, ds.p), dtype=np.int32)
    for j, (col, b) in enumerate(zip(ds.features, bins.per_feature)):
        if col.kind == CONTINUOUS:
            vals = col.values
            # bin = number of cuts strictly below the value
            idx = np.searchsorted(b.cuts, vals, side="left").astype(np.int32)
            idx[np.isnan(vals)] = b.missing_bin
            codes[:, j] = idx
        else:
            lookup = {tok: i for i, tok in enumerate(b.tokens)}
            unseen = b.unseen_bin
            codes[:, j] = [lookup.get(tok, unseen) for tok in col.values]
    return DiscretizedDataset(codes, bins.bin_counts, ds.labels.copy(),
                              ds.class_names, ds.feature_names)
