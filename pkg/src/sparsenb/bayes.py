"""Naive Bayes over discretized features restricted to a feature combination.

All likelihood arithmetic runs in log space; Laplace smoothing keeps every
conditional cell strictly positive, including reserved unseen/missing bins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .discretize import MISSING_CODE, DiscretizedDataset
from .errors import ValidationError


@dataclass(frozen=True)
class FeatureCombination:
    indices: tuple[int, ...]  # sorted, unique, non-empty

    def __post_init__(self):
        if not self.indices:
            raise ValidationError("feature combination must be non-empty")
        if list(self.indices) != sorted(set(self.indices)):
            raise ValidationError(f"indices must be sorted and unique: {self.indices}")

    def __len__(self):
        return len(self.indices)

    @staticmethod
    def of(indices) -> "FeatureCombination":
        return FeatureCombination(tuple(sorted(set(int(i) for i in indices))))


@dataclass(frozen=True)
class NBModel:
    class_names: tuple[str, ...]
    combo: FeatureCombination
    log_priors: np.ndarray  # (K,)
    log_cond: tuple  # per combo feature, (K, b_i) log conditional table
    alpha: float

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def to_json(self) -> str:
        return json.dumps(
            {
                "class_names": list(self.class_names),
                "features": list(self.combo.indices),
                "alpha": self.alpha,
                "priors": np.exp(self.log_priors).tolist(),
                "conditionals": [np.exp(t).tolist() for t in self.log_cond],
            },
            indent=2,
            sort_keys=True,
        )


def count_table(codes_col: np.ndarray, labels: np.ndarray, n_classes: int,
                n_bins: int) -> np.ndarray:
    """(K, b) integer counts of bin values per class for one feature."""
    table = np.zeros((n_classes, n_bins), dtype=np.int64)
    for k in range(n_classes):
        vals = codes_col[labels == k]
        vals = vals[vals != MISSING_CODE]
        table[k] = np.bincount(vals, minlength=n_bins)
    return table


def smoothed_log_table(counts: np.ndarray, alpha: float) -> np.ndarray:
    """log[(count + alpha) / (class_count + alpha * bins)] per cell."""
    class_counts = counts.sum(axis=1, keepdims=True)
    bins = counts.shape[1]
    return np.log(counts + alpha) - np.log(class_counts + alpha * bins)


def fit(train: DiscretizedDataset, combo: FeatureCombination, alpha: float = 1.0) -> NBModel:
    """Priors from class relative frequencies; per selected feature, a
    Laplace-smoothed categorical conditional over its bins."""
    if alpha <= 0:
        raise ValidationError("smoothing constant alpha must be positive")
    class_counts = np.bincount(train.labels, minlength=train.n_classes)
    if (class_counts == 0).any():
        raise ValidationError("every class must be present in the training data")
    log_priors = np.log(class_counts / class_counts.sum())
    log_cond = tuple(
        smoothed_log_table(
            count_table(train.codes[:, i], train.labels, train.n_classes,
                        int(train.bins[i])),
            alpha,
        )
        for i in combo.indices
    )
    return NBModel(train.class_names, combo, log_priors, log_cond, alpha)


def log_scores(model: NBModel, rows: np.ndarray) -> np.ndarray:
    """(n, K) unnormalized log posteriors for full-width code rows.

    MISSING_CODE cells contribute nothing (an unobservable value carries no
    evidence for any class).
    """
    rows = np.atleast_2d(rows)
    n = rows.shape[0]
    scores = np.tile(model.log_priors, (n, 1))
    for table, i in zip(model.log_cond, model.combo.indices):
        col = rows[:, i]
        seen = col != MISSING_CODE
        scores[seen] += table[:, col[seen]].T
    return scores


def posterior(model: NBModel, row: np.ndarray) -> np.ndarray:
    """Proper posterior distribution over classes via log-sum-exp."""
    return posterior_batch(model, np.atleast_2d(row))[0]


def posterior_batch(model: NBModel, rows: np.ndarray) -> np.ndarray:
    scores = log_scores(model, rows)
    shifted = scores - scores.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def predict(model: NBModel, row: np.ndarray) -> int:
    """Argmax class index; exact ties break toward the lowest class index."""
    return int(predict_batch(model, np.atleast_2d(row))[0])


def predict_batch(model: NBModel, rows: np.ndarray) -> np.ndarray:
    return np.argmax(log_scores(model, rows), axis=1)
