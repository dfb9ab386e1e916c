import numpy as np
import pytest

from sparsenb.dendrogram import cluster, cut_grid, partition_at
from sparsenb.errors import ValidationError


def random_dissimilarity(rng, p):
    h = rng.uniform(0.01, 1.0, size=(p, p))
    h = (h + h.T) / 2
    np.fill_diagonal(h, 0.0)
    return h


def brute_force_merges(h, linkage="complete"):
    """Per-step agglomeration oracle: recompute every inter-cluster distance
    from the original matrix member pairs, then take the minimal pair with
    the (smaller id, larger id) tie rule."""
    p = h.shape[0]
    members = {i: [i] for i in range(p)}
    merges = []
    for step in range(p - 1):
        best = None
        for a in sorted(members):
            for b in sorted(members):
                if a >= b:
                    continue
                pairs = [h[i, j] for i in members[a] for j in members[b]]
                if linkage == "complete":
                    dist = max(pairs)
                elif linkage == "single":
                    dist = min(pairs)
                else:
                    dist = sum(pairs) / len(pairs)
                if best is None or dist < best[0]:
                    best = (dist, a, b)
        dist, a, b = best
        new = p + step
        members[new] = members.pop(a) + members.pop(b)
        merges.append((a, b, dist))
    return merges


# ------------------------------------------------------------- clustering

def test_forced_merge_order():
    h = np.array([[0.0, 0.1, 0.9], [0.1, 0.0, 0.9], [0.9, 0.9, 0.0]])
    dend = cluster(h)
    assert dend.merges == ((0, 1, 0.1), (2, 3, 0.9))


def test_all_ones_merge_at_height_one():
    h = np.ones((5, 5))
    np.fill_diagonal(h, 0.0)
    dend = cluster(h)
    assert all(height == 1.0 for _, _, height in dend.merges)


@pytest.mark.parametrize("linkage", ["complete", "single", "average"])
def test_matches_brute_force_oracle(linkage):
    rng = np.random.default_rng(99)
    for _ in range(40):
        p = int(rng.integers(2, 9))
        h = random_dissimilarity(rng, p)
        dend = cluster(h, linkage)
        oracle = brute_force_merges(h, linkage)
        if linkage == "average":
            # running-average updates differ from direct means in the last ulp
            assert [m[:2] for m in dend.merges] == [m[:2] for m in oracle]
            got = [m[2] for m in dend.merges]
            want = [m[2] for m in oracle]
            assert got == pytest.approx(want, abs=1e-12)
        else:
            # max/min linkage heights are matrix entries: exact equality
            assert list(dend.merges) == oracle


def test_heights_non_decreasing(rng):
    for _ in range(20):
        h = random_dissimilarity(rng, 10)
        heights = cluster(h).heights()
        assert (np.diff(heights) >= 0).all()


def test_single_feature_rejected():
    with pytest.raises(ValidationError):
        cluster(np.zeros((1, 1)))


# --------------------------------------------------------------- cut grid

@pytest.mark.parametrize("p,expected", [(14, 13), (200, 100), (2, 1)])
def test_cut_counts(p, expected, rng):
    grid = cut_grid(cluster(random_dissimilarity(rng, p)))
    assert len(grid.cuts) == expected
    assert list(grid.cuts) == sorted(grid.cuts)
    assert all(0.0 <= c <= 1.0 for c in grid.cuts)


def test_cuts_sit_below_their_merge_heights(rng):
    dend = cluster(random_dissimilarity(rng, 12))
    heights = sorted(set(dend.heights()))
    grid = cut_grid(dend)
    for c, h in zip(grid.cuts, heights):
        assert c < h
    # each cut separates the clusters merging at its height
    for i, c in enumerate(grid.cuts):
        n_clusters = len(partition_at(dend, c).clusters)
        assert n_clusters == 12 - i


# -------------------------------------------------------------- partitions

def test_partition_analog_of_worked_example():
    # 14 features, two strongly dependent pairs, everything else nearly
    # independent: a cut between the pair heights and the rest gives 12
    # clusters, ten singletons plus the two pairs
    p = 14
    h = np.full((p, p), 0.95)
    for i, j in [(4, 5), (8, 9)]:
        h[i, j] = h[j, i] = 0.2
    np.fill_diagonal(h, 0.0)
    dend = cluster(h)
    part = partition_at(dend, 0.74)
    assert len(part.clusters) == 12
    assert (4, 5) in part.clusters and (8, 9) in part.clusters
    assert sorted(part.sizes) == [1] * 10 + [2, 2]


def test_partition_extremes(rng):
    dend = cluster(random_dissimilarity(rng, 7))
    lowest = min(dend.heights())
    below = partition_at(dend, lowest / 2)
    assert below.clusters == tuple((i,) for i in range(7))
    top = partition_at(dend, 1.0)
    assert top.clusters == (tuple(range(7)),)


def test_partition_refinement_and_count_identity(rng):
    for _ in range(10):
        dend = cluster(random_dissimilarity(rng, 9))
        heights = dend.heights()
        cuts = sorted(rng.uniform(0, 1, size=6))
        parts = [partition_at(dend, c) for c in cuts]
        for c, part in zip(cuts, parts):
            assert len(part.clusters) == 9 - int((heights <= c).sum())
        for finer, coarser in zip(parts, parts[1:]):
            coarse_sets = [set(cl) for cl in coarser.clusters]
            for cl in finer.clusters:
                assert any(set(cl) <= cs for cs in coarse_sets)


def test_partition_bounds_checked(rng):
    dend = cluster(random_dissimilarity(rng, 3))
    with pytest.raises(ValidationError):
        partition_at(dend, 1.5)


def test_merge_list_csv(tmp_path, rng):
    dend = cluster(random_dissimilarity(rng, 5))
    path = tmp_path / "merges.csv"
    dend.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "left,right,height"
    assert len(lines) == 5  # header + p-1 merges
