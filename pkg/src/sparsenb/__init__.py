"""Sparse Naive Bayes: feature selection by dependence clustering.

Features are clustered by their class-conditional mutual information,
cluster-respecting feature subsets are sampled along the dendrogram cuts,
and the subset maximizing a chosen performance measure, subject to
per-class performance constraints, is selected against the full-set
baseline.
"""

from .bayes import FeatureCombination, NBModel, fit, posterior, predict
from .dataio import (
    Dataset,
    FeatureColumn,
    SplitPlan,
    load_csv,
    make_split_plan,
    parse_schema_file,
    write_dataset_csv,
)
from .dendrogram import CutGrid, Dendrogram, Partition, cluster, cut_grid, partition_at
from .dependence import (
    DependenceMatrix,
    DissimilarityMatrix,
    build_dependence_matrix,
    dissimilarity,
    mutual_information,
)
from .discretize import BinMap, DiscretizedDataset, fit_mdlp, transform
from .errors import ParseError, SchemaError, SparseNBError, ValidationError
from .metrics import (
    Constraint,
    Objective,
    acc,
    auc_binary,
    check_constraints,
    confusion_matrix,
    parse_constraints,
    parse_objective,
    precision_k,
    recall_k,
)
from .search import (
    Candidate,
    SearchConfig,
    SelectionResult,
    brute_force,
    choose_q,
    cross_validated_run,
    nc,
    run_selection,
    sample_combinations,
)
from .synth import SynthConfig, generate_blocks, generate_gaussian_pair

__version__ = "0.1.0"

__all__ = [
    "BinMap",
    "Candidate",
    "Constraint",
    "CutGrid",
    "Dataset",
    "Dendrogram",
    "DependenceMatrix",
    "DiscretizedDataset",
    "DissimilarityMatrix",
    "FeatureColumn",
    "FeatureCombination",
    "NBModel",
    "Objective",
    "Partition",
    "ParseError",
    "SchemaError",
    "SearchConfig",
    "SelectionResult",
    "SparseNBError",
    "SplitPlan",
    "SynthConfig",
    "ValidationError",
    "acc",
    "auc_binary",
    "brute_force",
    "build_dependence_matrix",
    "check_constraints",
    "choose_q",
    "cluster",
    "confusion_matrix",
    "cross_validated_run",
    "cut_grid",
    "dissimilarity",
    "fit",
    "fit_mdlp",
    "generate_blocks",
    "generate_gaussian_pair",
    "load_csv",
    "make_split_plan",
    "mutual_information",
    "nc",
    "parse_constraints",
    "parse_objective",
    "parse_schema_file",
    "partition_at",
    "posterior",
    "precision_k",
    "predict",
    "recall_k",
    "run_selection",
    "sample_combinations",
    "transform",
    "write_dataset_csv",
]
