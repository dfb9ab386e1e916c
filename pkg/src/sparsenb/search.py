"""Cluster-respecting feature-subset search.

For each cut of the dendrogram grid, combinations holding at most one
feature per cluster are sampled (each cluster contributes a uniformly chosen
member with probability q, nothing otherwise), scored on the validation set,
filtered by the performance constraints, and the best feasible combination
is selected with the full feature set always admitted to the comparison.

Random draws are keyed by (seed, cut, draw) counters, never by execution
order, so results are identical at any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bayes import FeatureCombination
from .dataio import Dataset, SplitPlan
from .dendrogram import Dendrogram, Partition, cluster, cut_grid, partition_at
from .dependence import DependenceMatrix, build_dependence_matrix, dissimilarity
from .discretize import MISSING_CODE, DiscretizedDataset, fit_mdlp, transform
from .errors import ValidationError
from .metrics import (
    ConstraintResult,
    ConstraintSpec,
    Objective,
    check_constraints,
    confusion_matrix,
    evaluate_measures,
)

_FOLD_TAG = 0xF0
_DRAW_TAG = 0xD0

Q_AUTO = "auto"
Q_DENSE_THRESHOLD = 0.1  # matrix entries above this count as dependent
Q_DENSE_FRACTION = 0.20  # fraction of dependent entries that flips the regime
Q_DENSE = 0.4
Q_SPARSE = 0.6


@dataclass(frozen=True)
class SearchConfig:
    objective: Objective
    constraints: ConstraintSpec = ()
    max_combinations: int = 25  # draws per cut
    max_cuts: int = 100  # grid cap; effective count is min(p - 1, max_cuts)
    q: float | str = Q_AUTO
    alpha: float = 1.0
    seed: int = 0
    linkage: str = "complete"

    def __post_init__(self):
        if self.max_combinations < 1:
            raise ValidationError("max_combinations must be >= 1")
        if isinstance(self.q, str):
            if self.q != Q_AUTO:
                raise ValidationError(f"q must be a probability or {Q_AUTO!r}")
        elif not 0.0 <= self.q <= 1.0:
            raise ValidationError(f"q must lie in [0, 1], got {self.q}")


@dataclass(frozen=True)
class Candidate:
    combo: FeatureCombination
    cut: float
    objective_value: float | None  # evaluated on the validation set
    feasible: bool
    total_violation: float
    cut_index: int = 0
    draw: int = 0


@dataclass(frozen=True)
class SelectionResult:
    winner: FeatureCombination
    winner_source: str  # candidate | full-set | fallback-least-violating
    objective_value: float | None
    validation_measures: dict
    constraint_result: ConstraintResult
    audit: tuple[Candidate, ...]
    full_set_value: float | None
    full_set_feasible: bool
    q: float
    cuts: tuple[float, ...]


def choose_q(m: DependenceMatrix) -> float:
    """Cluster-inclusion probability from the dependence matrix: the sparser
    setting when at least 20% of off-diagonal entries exceed 0.1, else the
    looser one."""
    p = m.p
    if p < 2:
        raise ValidationError("q rule needs at least two features")
    off = ~np.eye(p, dtype=bool)
    frac = float((m.m[off] > Q_DENSE_THRESHOLD).mean())
    return Q_DENSE if frac >= Q_DENSE_FRACTION else Q_SPARSE


def nc(partition: Partition, cap: int | None = None) -> int:
    """Number of one-feature-per-cluster combinations at a cut: the product
    of cluster sizes, saturating at cap + 1 when a cap is given."""
    total = 1
    for size in partition.sizes:
        total *= size
        if cap is not None and total > cap:
            return cap + 1
    return total


def draw_combination(partition: Partition, q: float, rng: np.random.Generator) -> tuple[int, ...]:
    """One draw: per cluster, with probability q include one uniformly chosen
    member. May be empty."""
    chosen = []
    for members in partition.clusters:
        if rng.random() < q:
            pick = members[int(rng.integers(len(members)))] if len(members) > 1 else members[0]
            chosen.append(pick)
    assert len(set(chosen)) == len(chosen)  # never two features from one cluster
    return tuple(sorted(chosen))


def sample_combinations(partition: Partition, max_combinations: int, q: float,
                        rng) -> list[FeatureCombination]:
    """min(nc, max_combinations) draws; empty draws are discarded without
    replacement. *rng* is either a Generator shared across draws or a
    callable mapping the draw index to a Generator."""
    n_draws = min(nc(partition, cap=max_combinations), max_combinations)
    rng_for = rng if callable(rng) else (lambda _di: rng)
    out = []
    for di in range(n_draws):
        picked = draw_combination(partition, q, rng_for(di))
        if picked:
            out.append(FeatureCombination(picked))
    return out


class FoldEvaluator:
    """Scores feature combinations fitted on one training fold against a
    fixed evaluation split.

    Conditional tables are per-feature, so fitting a combination is just
    selecting the precomputed per-feature log-likelihood contributions;
    accumulation order matches the reference model path bit-for-bit.
    """

    def __init__(self, train: DiscretizedDataset, eval_codes: np.ndarray,
                 eval_labels: np.ndarray, alpha: float = 1.0):
        from .bayes import count_table, smoothed_log_table

        self.n_classes = train.n_classes
        self.class_names = train.class_names
        self.alpha = alpha
        class_counts = np.bincount(train.labels, minlength=train.n_classes)
        if (class_counts == 0).any():
            raise ValidationError("every class must be present in the training fold")
        self.log_priors = np.log(class_counts / class_counts.sum())
        self.eval_labels = np.asarray(eval_labels)
        n_eval = eval_codes.shape[0]

        self._contrib = []
        for i in range(train.p):
            table = smoothed_log_table(
                count_table(train.codes[:, i], train.labels, train.n_classes,
                            int(train.bins[i])),
                alpha,
            )
            col = eval_codes[:, i]
            contrib = np.zeros((n_eval, self.n_classes))
            seen = col != MISSING_CODE
            contrib[seen] = table[:, col[seen]].T
            self._contrib.append(contrib)

    def log_scores(self, indices) -> np.ndarray:
        scores = np.tile(self.log_priors, (self._contrib[0].shape[0], 1))
        for i in indices:
            scores += self._contrib[i]
        return scores

    def measures(self, indices, with_auc: bool) -> dict:
        scores = self.log_scores(indices)
        preds = np.argmax(scores, axis=1)
        cm = confusion_matrix(self.eval_labels, preds, self.n_classes)
        pos_scores = None
        if with_auc and self.n_classes == 2:
            shifted = scores - scores.max(axis=1, keepdims=True)
            expd = np.exp(shifted)
            pos_scores = (expd / expd.sum(axis=1, keepdims=True))[:, 1]
        return evaluate_measures(cm, self.class_names, pos_scores,
                                 self.eval_labels == 1 if pos_scores is not None else None)


def _winner_key(value, combo: FeatureCombination):
    return (-value, len(combo), combo.indices)


def run_selection(train: DiscretizedDataset, validation: DiscretizedDataset,
                  dend: Dendrogram, config: SearchConfig) -> SelectionResult:
    """Sample per-cut combinations, evaluate them on the validation split and
    select the best feasible one, with the full feature set always admitted
    to the comparison. Ties break toward fewer features, then the
    lexicographically smaller index set. If nothing is feasible the least
    violating candidate is returned, flagged as a fallback."""
    if isinstance(config.q, str):
        raise ValidationError("q must be resolved to a number before run_selection")
    q = float(config.q)
    p = train.p
    grid = cut_grid(dend, max_cuts=config.max_cuts)
    evaluator = FoldEvaluator(train, validation.codes, validation.labels, config.alpha)
    with_auc = config.objective.measure == "auc" or any(
        c.measure == "auc" for c in config.constraints
    )
    obj_key = config.objective.key(train.class_names)

    cache: dict[tuple, tuple] = {}

    def evaluate(combo: FeatureCombination):
        hit = cache.get(combo.indices)
        if hit is None:
            values = evaluator.measures(combo.indices, with_auc)
            result = check_constraints(values, config.constraints, train.class_names)
            hit = (values[obj_key], result, values)
            cache[combo.indices] = hit
        return hit

    audit = []
    for ci, c in enumerate(grid.cuts):
        part = partition_at(dend, c)
        n_draws = min(nc(part, cap=config.max_combinations), config.max_combinations)
        for di in range(n_draws):
            rng = np.random.default_rng(
                np.random.SeedSequence(config.seed, spawn_key=(_DRAW_TAG, ci, di))
            )
            picked = draw_combination(part, q, rng)
            if not picked:
                continue  # discarded, not replaced
            combo = FeatureCombination(picked)
            value, result, _ = evaluate(combo)
            audit.append(Candidate(combo, c, value, result.feasible,
                                   result.total_relative_violation(), ci, di))

    full = FeatureCombination(tuple(range(p)))
    full_value, full_result, _ = evaluate(full)

    pool: dict[tuple, tuple] = {}
    for cand in audit:
        if cand.feasible and cand.objective_value is not None:
            pool.setdefault(cand.combo.indices, (cand.objective_value, cand.combo))
    if full_result.feasible and full_value is not None:
        pool.setdefault(full.indices, (full_value, full))

    if pool:
        value, winner = min(pool.values(), key=lambda vc: _winner_key(vc[0], vc[1]))
        source = "full-set" if winner.indices == full.indices else "candidate"
    else:
        # nothing feasible anywhere: least total relative violation wins
        contenders = {cand.combo.indices: cand for cand in audit}
        contenders.setdefault(
            full.indices,
            Candidate(full, 1.0, full_value, full_result.feasible,
                      full_result.total_relative_violation()),
        )
        def fallback_key(cand: Candidate):
            value = cand.objective_value if cand.objective_value is not None else -np.inf
            return (cand.total_violation, -value, len(cand.combo), cand.combo.indices)

        best = min(contenders.values(), key=fallback_key)
        winner, value = best.combo, best.objective_value
        source = "fallback-least-violating"

    win_value, win_result, win_values = evaluate(winner)
    return SelectionResult(
        winner=winner,
        winner_source=source,
        objective_value=win_value,
        validation_measures=win_values,
        constraint_result=win_result,
        audit=tuple(audit),
        full_set_value=full_value,
        full_set_feasible=full_result.feasible,
        q=q,
        cuts=grid.cuts,
    )


@dataclass(frozen=True)
class BruteForceRow:
    combo: FeatureCombination
    objective_value: float | None
    feasible: bool


@dataclass(frozen=True)
class BruteForceResult:
    winner: FeatureCombination
    objective_value: float | None
    feasible: bool
    rows: tuple[BruteForceRow, ...]


def brute_force(train: DiscretizedDataset, validation: DiscretizedDataset,
                objective: Objective, constraints: ConstraintSpec = (),
                max_p: int = 15, alpha: float = 1.0) -> BruteForceResult:
    """Exhaustive search over all 2^p - 1 feature subsets, with the same
    evaluation path and tie rules as run_selection. Refuses p > max_p."""
    from itertools import combinations

    p = train.p
    if p > max_p:
        raise ValidationError(
            f"brute force over 2^{p} - 1 subsets refused (p > max_p = {max_p})"
        )
    evaluator = FoldEvaluator(train, validation.codes, validation.labels, alpha)
    with_auc = objective.measure == "auc" or any(c.measure == "auc" for c in constraints)
    obj_key = objective.key(train.class_names)

    rows = []
    feasible_pool = []
    fallback_pool = []
    for r in range(1, p + 1):
        for indices in combinations(range(p), r):
            combo = FeatureCombination(indices)
            values = evaluator.measures(indices, with_auc)
            result = check_constraints(values, constraints, train.class_names)
            value = values[obj_key]
            rows.append(BruteForceRow(combo, value, result.feasible))
            if result.feasible and value is not None:
                feasible_pool.append((value, combo))
            fallback_pool.append(
                (result.total_relative_violation(),
                 -(value if value is not None else -np.inf),
                 len(combo), combo.indices, combo, value, result.feasible)
            )

    if feasible_pool:
        value, winner = min(feasible_pool, key=lambda vc: _winner_key(vc[0], vc[1]))
        win_feasible = True
    else:
        entry = min(fallback_pool)
        winner, value, win_feasible = entry[4], entry[5], entry[6]
    return BruteForceResult(winner, value, win_feasible, tuple(rows))


def _fold_seed(seed: int, run: int, fold: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(_FOLD_TAG, run, fold))
    return int(ss.generate_state(1, np.uint64)[0])


def _aggregate(records, key):
    by_measure: dict[str, list[float]] = {}
    for rec in records:
        for name, value in rec[key].items():
            if value is not None:
                by_measure.setdefault(name, []).append(value)
    out = {}
    for name, vals in sorted(by_measure.items()):
        arr = np.array(vals, dtype=np.float64)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out[name] = {"mean": float(arr.mean()), "sd": sd, "n": len(arr)}
    return out


def _run_one_fold(ds: Dataset, plan: SplitPlan, config: SearchConfig, run: int,
                  fold: int, classic: bool, global_bins, keep_audit: bool) -> dict:
    started = time.perf_counter()
    warnings: list[str] = []
    train_idx, val_idx, test_idx = plan.indices[run][fold]
    bins = global_bins if global_bins is not None else fit_mdlp(ds.subset(train_idx))
    dtrain = transform(ds.subset(train_idx), bins)
    dval = transform(ds.subset(val_idx), bins)
    dtest = transform(ds.subset(test_idx), bins)

    record = {"run": run, "fold": fold}
    if classic:
        winner = FeatureCombination(tuple(range(ds.p)))
        record.update(q=None, winner_source="full-set", objective_value=None,
                      n_candidates=0)
        val_eval = FoldEvaluator(dtrain, dval.codes, dval.labels, config.alpha)
        record["validation_measures"] = val_eval.measures(winner.indices, True)
        record["objective_value"] = record["validation_measures"][
            config.objective.key(ds.class_names)
        ]
    else:
        m = build_dependence_matrix(dtrain, warnings)
        q = float(config.q) if not isinstance(config.q, str) else choose_q(m)
        h = dissimilarity(m, warnings)
        dend = cluster(h, config.linkage)
        fold_config = replace(config, q=q, seed=_fold_seed(config.seed, run, fold))
        selection = run_selection(dtrain, dval, dend, fold_config)
        winner = selection.winner
        record.update(
            q=q,
            winner_source=selection.winner_source,
            objective_value=selection.objective_value,
            validation_measures=selection.validation_measures,
            n_candidates=len(selection.audit),
            full_set_value=selection.full_set_value,
            full_set_feasible=selection.full_set_feasible,
        )
        if keep_audit:
            record["audit"] = [
                {
                    "cut_index": cand.cut_index,
                    "cut": cand.cut,
                    "draw": cand.draw,
                    "features": list(cand.combo.indices),
                    "objective_value": cand.objective_value,
                    "feasible": cand.feasible,
                }
                for cand in selection.audit
            ]

    test_eval = FoldEvaluator(dtrain, dtest.codes, dtest.labels, config.alpha)
    record["test_measures"] = test_eval.measures(winner.indices, True)
    record["winner"] = list(winner.indices)
    record["winner_names"] = [ds.feature_names[i] for i in winner.indices]
    record["winner_size"] = len(winner)
    record["warnings"] = warnings
    record["seconds"] = time.perf_counter() - started
    return record


def cross_validated_run(ds: Dataset, plan: SplitPlan, config: SearchConfig,
                        threads: int = 1, classic: bool = False,
                        discretize_globally: bool = False,
                        keep_audit: bool = False) -> dict:
    """Run the full selection protocol over every (run, fold) of the plan.

    Per fold: discretizer, dependence matrix, dendrogram and candidate models
    all come from the training split; candidates are compared on the
    validation split; the winner is scored on the test split. *classic*
    skips the search and scores the full feature set (the baseline).
    Fold-level failures are recorded and skipped.
    """
    global_bins = fit_mdlp(ds) if discretize_globally else None
    tasks = [(run, fold) for run in range(plan.runs) for fold in range(plan.folds)]

    def work(task):
        run, fold = task
        try:
            return _run_one_fold(ds, plan, config, run, fold, classic,
                                 global_bins, keep_audit)
        except Exception as exc:  # fold skipped, run continues
            return {"run": run, "fold": fold, "error": f"{type(exc).__name__}: {exc}"}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, tasks))
    else:
        records = [work(task) for task in tasks]

    ok = [rec for rec in records if "error" not in rec]
    sizes = np.array([rec["winner_size"] for rec in ok], dtype=np.float64)
    aggregate = {
        "test_measures": _aggregate(ok, "test_measures"),
        "sparsity": {
            "mean": float(sizes.mean()) if len(sizes) else None,
            "sd": float(sizes.std(ddof=1)) if len(sizes) > 1 else 0.0,
        },
        "folds_completed": len(ok),
        "folds_failed": len(records) - len(ok),
    }
    return {
        "class_names": list(ds.class_names),
        "feature_names": list(ds.feature_names),
        "n_rows": ds.n,
        "n_features": ds.p,
        "folds": records,
        "aggregate": aggregate,
    }
