"""Agglomerative hierarchical clustering of features over the dissimilarity
matrix, the cut grid along its heights, and per-cut feature partitions.

Cluster ids follow the usual convention: leaves are 0..p-1 and the cluster
created by merge step t gets id p+t. Ties between equally dissimilar merge
candidates resolve to the pair with the smallest first id, then smallest
second id, which keeps merge sequences bit-deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dependence import DissimilarityMatrix
from .errors import ValidationError

LINKAGES = ("complete", "single", "average")

_EPS_FRACTION = 2.0**-30  # cut nudge below a merge height, relative to height range


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple  # p-1 records (left_id, right_id, height), heights non-decreasing
    p: int

    def heights(self) -> np.ndarray:
        return np.array([h for (_, _, h) in self.merges], dtype=np.float64)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["left", "right", "height"])
            for left, right, height in self.merges:
                writer.writerow([left, right, repr(float(height))])


@dataclass(frozen=True)
class CutGrid:
    cuts: tuple[float, ...]  # distinct heights, ascending, within [0, 1]


@dataclass(frozen=True)
class Partition:
    clusters: tuple  # disjoint sorted tuples of feature indices covering 0..p-1

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)


def cluster(h: DissimilarityMatrix | np.ndarray, linkage: str = "complete") -> Dendrogram:
    """Agglomerate features over the dissimilarity matrix.

    Complete linkage (the default) repeatedly merges the pair of clusters
    whose maximum member-pair dissimilarity is minimal, recording that value
    as the merge height. Inter-cluster distances are maintained with the
    Lance-Williams update for the chosen linkage.
    """
    if linkage not in LINKAGES:
        raise ValidationError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    mat = h.h if isinstance(h, DissimilarityMatrix) else np.asarray(h, dtype=np.float64)
    p = mat.shape[0]
    if p < 2:
        raise ValidationError("clustering needs at least two features")

    total = 2 * p - 1
    d = np.full((total, total), np.inf, dtype=np.float64)
    d[:p, :p] = mat
    np.fill_diagonal(d, np.inf)
    active = np.zeros(total, dtype=bool)
    active[:p] = True
    sizes = np.zeros(total, dtype=np.int64)
    sizes[:p] = 1

    triu = np.triu(np.ones((total, total), dtype=bool), k=1)

    merges = []
    last_height = -np.inf
    for step in range(p - 1):
        eligible = triu & active[:, None] & active[None, :]
        masked = np.where(eligible, d, np.inf)
        flat = int(np.argmin(masked))  # row-major: smallest a, then smallest b
        a, b = divmod(flat, total)
        height = float(d[a, b])
        assert height >= last_height, "linkage produced a non-monotone merge height"
        last_height = height

        new = p + step
        others = np.flatnonzero(active)
        others = others[(others != a) & (others != b)]
        if linkage == "complete":
            d[new, others] = np.maximum(d[a, others], d[b, others])
        elif linkage == "single":
            d[new, others] = np.minimum(d[a, others], d[b, others])
        else:  # average (UPGMA)
            d[new, others] = (sizes[a] * d[a, others] + sizes[b] * d[b, others]) / (
                sizes[a] + sizes[b]
            )
        d[others, new] = d[new, others]
        sizes[new] = sizes[a] + sizes[b]
        active[a] = active[b] = False
        active[new] = True
        merges.append((int(a), int(b), height))

    return Dendrogram(tuple(merges), p)


def cut_grid(d: Dendrogram, max_cuts: int = 100) -> CutGrid:
    """Heights to cut the dendrogram at: the distinct merge heights, each
    nudged just below the merge so the cut separates the clusters joining
    there. When there are more than *max_cuts* heights, take that many at
    evenly spaced quantile positions of the sorted heights."""
    heights = sorted(set(float(h) for h in d.heights()))
    if len(heights) > max_cuts:
        pos = np.round(np.linspace(0, len(heights) - 1, max_cuts)).astype(int)
        heights = [heights[i] for i in pos]
    span = heights[-1] - heights[0]
    eps = _EPS_FRACTION * (span if span > 0 else 1.0)
    cuts = [min(max(h - eps, 0.0), 1.0) for h in heights]
    return CutGrid(tuple(cuts))


def partition_at(d: Dendrogram, c: float) -> Partition:
    """Connected components of the merge forest after dropping every merge
    higher than *c*: features merging at or below the cut share a cluster."""
    if not 0.0 <= c <= 1.0:
        raise ValidationError(f"cut height must lie in [0, 1], got {c}")
    parent = list(range(2 * d.p - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for step, (a, b, height) in enumerate(d.merges):
        if height <= c:
            new = d.p + step
            parent[find(a)] = new
            parent[find(b)] = new

    groups: dict[int, list[int]] = {}
    for leaf in range(d.p):
        groups.setdefault(find(leaf), []).append(leaf)
    clusters = sorted(tuple(sorted(g)) for g in groups.values())
    return Partition(tuple(clusters))
