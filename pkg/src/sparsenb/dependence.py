"""Class-conditional mutual-information dependence matrix and its
rescaled-complement dissimilarity matrix."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .discretize import DiscretizedDataset
from .errors import ValidationError, record_warning


@dataclass(frozen=True)
class DependenceMatrix:
    m: np.ndarray  # (p, p) symmetric, nats, diagonal unused (0)
    m_star: float  # max off-diagonal entry

    def __post_init__(self):
        self.m.setflags(write=False)

    @property
    def p(self) -> int:
        return self.m.shape[0]

    def write_csv(self, names, path):
        _write_matrix_csv(self.m, names, path)


@dataclass(frozen=True)
class DissimilarityMatrix:
    h: np.ndarray  # (p, p) symmetric in [0, 1], diagonal 0

    def __post_init__(self):
        self.h.setflags(write=False)

    @property
    def p(self) -> int:
        return self.h.shape[0]

    def write_csv(self, names, path):
        _write_matrix_csv(self.h, names, path)


def _write_matrix_csv(matrix, names, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(names))
        for name, row in zip(names, matrix):
            writer.writerow([name] + [repr(float(v)) for v in row])


def mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information (nats) of two bin-index sequences.

    Estimated on the empirical joint table; 0*log(0/...) cells contribute
    nothing. The operand order is canonicalized first so the result is
    bit-identical under argument swap.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) != len(y):
        raise ValidationError(f"sequences differ in length: {len(x)} vs {len(y)}")
    if len(x) == 0:
        raise ValidationError("sequences must be non-empty")
    if x.tobytes() > y.tobytes():
        x, y = y, x
    bx = int(x.max()) + 1
    by = int(y.max()) + 1
    joint = np.bincount(x * by + y, minlength=bx * by).reshape(bx, by)
    return _mi_from_table(joint)


def _mi_from_table(joint: np.ndarray) -> float:
    """MI in nats from an integer contingency table.

    Cell ratios are formed from exact integer products, so independent
    (product) tables give log(1.0) == 0.0 without rounding residue.
    """
    n = int(joint.sum())
    if n == 0:
        return 0.0
    rows = joint.sum(axis=1)
    cols = joint.sum(axis=0)
    i_idx, j_idx = np.nonzero(joint)
    cells = joint[i_idx, j_idx].astype(np.float64)
    ratio = (joint[i_idx, j_idx] * n) / (rows[i_idx] * cols[j_idx])
    mi = float((cells / n) @ np.log(ratio))
    return max(mi, 0.0)


def build_dependence_matrix(train: DiscretizedDataset, warnings=None) -> DependenceMatrix:
    """m(i, j) = max over classes of the MI between features i and j computed
    on that class's rows only (the worst case over classes)."""
    p = train.p
    counts = np.bincount(train.labels, minlength=train.n_classes)
    if (counts == 0).any():
        raise ValidationError("every class needs at least one training row")
    singles = [train.class_names[k] for k in np.flatnonzero(counts == 1)]
    if singles:
        record_warning(
            warnings,
            f"class(es) {singles} have a single row; their conditional MI is 0 by convention",
        )

    by_class = [train.codes[train.labels == k] for k in range(train.n_classes)]
    m = np.zeros((p, p), dtype=np.float64)
    for i in range(p):
        for j in range(i + 1, p):
            best = 0.0
            for rows in by_class:
                best = max(best, mutual_information(rows[:, i], rows[:, j]))
            m[i, j] = m[j, i] = best
    m_star = float(m.max()) if p >= 2 else 0.0
    return DependenceMatrix(m, m_star)


def dissimilarity(dm: DependenceMatrix, warnings=None) -> DissimilarityMatrix:
    """h(i, j) = (m_star - m(i, j)) / m_star off the diagonal; diagonal 0.

    If every pair is sample-independent (m_star == 0) the convention is
    h = 1 everywhere off the diagonal, with a warning recorded.
    """
    p = dm.p
    if dm.m_star <= 0.0:
        record_warning(
            warnings,
            "all feature pairs have zero sample dependence; dissimilarity set to 1",
        )
        h = np.ones((p, p), dtype=np.float64)
    else:
        h = (dm.m_star - dm.m) / dm.m_star
    np.fill_diagonal(h, 0.0)
    return DissimilarityMatrix(h)
