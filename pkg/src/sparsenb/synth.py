"""Synthetic dataset generators: the block-correlated regression-to-
classification model, and a small four-feature Gaussian example with one
strongly correlated pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import CONTINUOUS, Dataset, FeatureColumn
from .errors import ValidationError


@dataclass(frozen=True)
class SynthConfig:
    p: int
    rho: float
    n: int = 2000
    noise_sd: float = 2.5
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise ValidationError("need at least two features")
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError(f"rho must lie in [0, 1), got {self.rho}")
        if self.n < 1:
            raise ValidationError("n must be positive")


def _dataset_from_matrix(x: np.ndarray, labels: np.ndarray, class_names) -> Dataset:
    cols = tuple(
        FeatureColumn(f"V{j + 1}", CONTINUOUS, np.ascontiguousarray(x[:, j]))
        for j in range(x.shape[1])
    )
    return Dataset(cols, labels, class_names)


def generate_blocks(cfg: SynthConfig) -> Dataset:
    """Two equicorrelated feature blocks driving a linear response whose sign
    defines the class.

    Rows are i.i.d. zero-mean Gaussian with unit variances, correlation rho
    inside each block (first floor(p/4) features, then the rest) and zero
    across blocks; block members are built as sqrt(rho) * shared + sqrt(1 -
    rho) * own noise, which realizes that covariance exactly. Coefficients
    are U[0.9, 1.1] on the first block and U[-1/3 - 0.1, -1/3 + 0.1] on the
    second; the response adds N(0, noise_sd^2) noise. The sign-zero corner
    (probability zero) lands in the positive class.
    """
    rng = np.random.default_rng(cfg.seed)
    size1 = cfg.p // 4
    beta = np.empty(cfg.p)
    beta[:size1] = rng.uniform(0.9, 1.1, size=size1)
    beta[size1:] = rng.uniform(-1.0 / 3.0 - 0.1, -1.0 / 3.0 + 0.1, size=cfg.p - size1)

    shared = rng.standard_normal((cfg.n, 2))
    own = rng.standard_normal((cfg.n, cfg.p))
    x = np.empty((cfg.n, cfg.p))
    root_rho = np.sqrt(cfg.rho)
    root_rest = np.sqrt(1.0 - cfg.rho)
    x[:, :size1] = root_rho * shared[:, [0]] + root_rest * own[:, :size1]
    x[:, size1:] = root_rho * shared[:, [1]] + root_rest * own[:, size1:]

    y = x @ beta + cfg.noise_sd * rng.standard_normal(cfg.n)
    labels = (y >= 0).astype(np.int64)  # y == 0 -> class 2 ("pos")
    _require_both_classes(labels)
    return _dataset_from_matrix(x, labels, ("neg", "pos"))


def generate_gaussian_pair(seed: int, n: int = 2000, sigma: float = 1.0,
                           pair_correlation: float = 0.95) -> Dataset:
    """Four Gaussian features over two balanced classes, conditionally
    independent given the class except for the (V1, V2) pair at the given
    correlation. Class-conditional means are drawn uniformly from [1, 7];
    the class-conditional standard deviation defaults to 1."""
    rng = np.random.default_rng(seed)
    means = rng.uniform(1.0, 7.0, size=(2, 4))
    n1 = n // 2
    counts = (n1, n - n1)
    blocks = []
    for k in (0, 1):
        nk = counts[k]
        z = rng.standard_normal((nk, 4))
        x = np.empty((nk, 4))
        x[:, 0] = means[k, 0] + sigma * z[:, 0]
        x[:, 1] = means[k, 1] + sigma * (
            pair_correlation * z[:, 0] + np.sqrt(1.0 - pair_correlation**2) * z[:, 1]
        )
        x[:, 2] = means[k, 2] + sigma * z[:, 2]
        x[:, 3] = means[k, 3] + sigma * z[:, 3]
        blocks.append(x)
    x = np.vstack(blocks)
    labels = np.repeat(np.array([0, 1], dtype=np.int64), counts)
    return _dataset_from_matrix(x, labels, ("c1", "c2"))


def _require_both_classes(labels):
    if len(np.unique(labels)) < 2:
        raise ValidationError(
            "degenerate draw produced a single class; use a different seed"
        )
