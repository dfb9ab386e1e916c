"""Classification performance measures and per-class performance constraints.

Recall and accuracy are reported in percent, precision and AUC in [0, 1],
mirroring how results are conventionally tabulated for these measures.
A measure that is undefined on the given predictions (empty class, nothing
predicted as a class) is reported as None, never silently 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError

MEASURES = ("acc", "auc", "recall", "precision")
PER_CLASS = ("recall", "precision")


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    """(K, K) counts indexed [true class, predicted class]."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def recall_k(cm: np.ndarray, k: int):
    """True-class-k hit rate in percent, or None when class k has no members."""
    row = cm[k].sum()
    if row == 0:
        return None
    return float(cm[k, k]) * 100.0 / float(row)


def acc(cm: np.ndarray) -> float:
    """Overall correct-classification rate in percent."""
    total = cm.sum()
    if total == 0:
        raise ValidationError("confusion matrix is empty")
    return float(np.trace(cm)) * 100.0 / float(total)


def precision_k(cm: np.ndarray, k: int):
    """Fraction of k-predictions that are correct, or None if k is never predicted."""
    col = cm[:, k].sum()
    if col == 0:
        return None
    return float(cm[k, k]) / float(col)


def auc_binary(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve as the normalized Mann-Whitney statistic.

    *scores* are positive-class posteriors, *labels* are booleans (True =
    positive). Ties count half. Requires both classes present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs at least one sample of each class")
    ranks = rankdata(scores)  # average ranks on ties
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u) / (n_pos * n_neg)


@dataclass(frozen=True)
class Constraint:
    measure: str  # acc | auc | recall | precision
    klass: int | None  # 0-based class index for per-class measures
    strict: bool  # True for ">", False for ">="
    threshold: float

    def key(self, class_names) -> str:
        return measure_key(self.measure, self.klass, class_names)


ConstraintSpec = tuple[Constraint, ...]


@dataclass(frozen=True)
class Objective:
    measure: str
    klass: int | None = None

    def key(self, class_names) -> str:
        return measure_key(self.measure, self.klass, class_names)


def measure_key(measure: str, klass, class_names) -> str:
    if measure in PER_CLASS:
        return f"{measure}:{class_names[klass]}"
    return measure


def _resolve_class(token: str, class_names) -> int:
    """Class reference in constraint/objective text: a class name, else a
    1-based class index."""
    if token in class_names:
        return class_names.index(token)
    if re.fullmatch(r"\d+", token):
        k = int(token)
        if 1 <= k <= len(class_names):
            return k - 1
    raise ValidationError(
        f"unknown class {token!r}; classes are {list(class_names)} (or a 1-based index)"
    )


def _parse_measure(text: str, class_names):
    if ":" in text:
        name, _, cls = text.partition(":")
        name = name.strip()
        if name not in PER_CLASS:
            raise ValidationError(f"measure {name!r} takes no class qualifier")
        return name, _resolve_class(cls.strip(), class_names)
    name = text.strip()
    if name not in ("acc", "auc"):
        raise ValidationError(
            f"measure must be acc, auc, recall:CLASS or precision:CLASS, got {text!r}"
        )
    return name, None


def parse_objective(text: str, class_names) -> Objective:
    measure, klass = _parse_measure(text, class_names)
    if measure == "auc" and len(class_names) != 2:
        raise ValidationError("auc objective is only defined for two-class problems")
    return Objective(measure, klass)


_CONSTRAINT_RE = re.compile(r"^(?P<measure>[^<>=]+?)(?P<op>>=|>)(?P<threshold>.+)$")


def parse_constraints(text: str, class_names) -> ConstraintSpec:
    """Parse `measure[:class](>|>=)threshold`, comma-separated.

    Example: ``recall:2>=92,acc>80``.
    """
    out = []
    if not text or not text.strip():
        return tuple(out)
    for part in text.split(","):
        part = part.strip()
        match = _CONSTRAINT_RE.match(part)
        if not match:
            raise ValidationError(f"cannot parse constraint {part!r}")
        measure, klass = _parse_measure(match.group("measure"), class_names)
        if measure == "auc" and len(class_names) != 2:
            raise ValidationError("auc constraint is only defined for two-class problems")
        try:
            threshold = float(match.group("threshold"))
        except ValueError:
            raise ValidationError(f"bad threshold in constraint {part!r}") from None
        hi = 1.0 if measure in ("precision", "auc") else 100.0
        if not 0.0 <= threshold <= hi:
            raise ValidationError(
                f"threshold {threshold} outside the natural range [0, {hi}] of {measure}"
            )
        out.append(Constraint(measure, klass, match.group("op") == ">", threshold))
    return tuple(out)


def evaluate_measures(cm: np.ndarray, class_names, scores=None, labels=None) -> dict:
    """All measures derivable from the confusion matrix, plus AUC when
    positive-class scores are supplied (binary only)."""
    values = {"acc": acc(cm)}
    for k, name in enumerate(class_names):
        values[f"recall:{name}"] = recall_k(cm, k)
        values[f"precision:{name}"] = precision_k(cm, k)
    if scores is not None and len(class_names) == 2:
        values["auc"] = auc_binary(scores, labels)
    return values


@dataclass(frozen=True)
class Violation:
    key: str
    threshold: float
    strict: bool
    value: float | None  # None when the measure is undefined
    margin: float | None  # threshold - value; None for undefined measures
    undefined: bool = False


@dataclass(frozen=True)
class ConstraintResult:
    feasible: bool
    violations: tuple[Violation, ...]

    def total_relative_violation(self) -> float:
        """Sum of shortfalls relative to their thresholds; undefined measures
        count as infinitely violated."""
        total = 0.0
        for v in self.violations:
            if v.undefined:
                return float("inf")
            scale = abs(v.threshold) if v.threshold != 0 else 1.0
            total += max(v.margin, 0.0) / scale
        return total


def check_constraints(values: dict, spec: ConstraintSpec, class_names) -> ConstraintResult:
    """Feasible iff every constraint holds; each failure is reported with its
    shortfall. A constraint on an undefined measure counts as violated."""
    violations = []
    for con in spec:
        key = con.key(class_names)
        if key not in values:
            raise ValidationError(f"constraint references unevaluated measure {key!r}")
        value = values[key]
        if value is None:
            violations.append(Violation(key, con.threshold, con.strict, None, None, True))
            continue
        ok = value > con.threshold if con.strict else value >= con.threshold
        if not ok:
            violations.append(
                Violation(key, con.threshold, con.strict, value, con.threshold - value)
            )
    return ConstraintResult(not violations, tuple(violations))
