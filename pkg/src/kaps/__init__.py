"""K-adaptive partitioning of right-censored survival data.

Partitions a cohort into K ordered subgroups along one prognostic factor by
maximizing the smallest pairwise log-rank statistic, and picks the number of
subgroups with a covariate-permutation test.
"""

from .survival import (
    Cohort,
    KmCurve,
    SurvivalRecord,
    TestResult,
    WeightKind,
    k_sample_test,
    km_fit,
    km_quantile,
    km_survival_at,
    two_sample_test,
)
from .splitting import (
    CutpointScorer,
    InfeasibleSplitError,
    MaxMinRescorer,
    PairScope,
    PairStatCache,
    SearchConfig,
    SplitEvaluation,
    SplitSet,
    enumerate_split_sets,
    evaluate_split,
    find_best_split,
)
from .selection import (
    Correction,
    KSelectionResult,
    PermutationPlan,
    PermutationScoring,
    correct_pvalue,
    derive_rng,
    permutation_pvalue,
    permute_covariate,
    select_k,
)
from .simulation import (
    ExperimentResult,
    ModelKind,
    SimModel,
    calibrate_censoring,
    generate,
    greedy_tree_fit,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "Cohort",
    "Correction",
    "CutpointScorer",
    "ExperimentResult",
    "InfeasibleSplitError",
    "KSelectionResult",
    "KmCurve",
    "MaxMinRescorer",
    "ModelKind",
    "PairScope",
    "PairStatCache",
    "PermutationPlan",
    "PermutationScoring",
    "SearchConfig",
    "SimModel",
    "SplitEvaluation",
    "SplitSet",
    "SurvivalRecord",
    "TestResult",
    "WeightKind",
    "calibrate_censoring",
    "correct_pvalue",
    "derive_rng",
    "enumerate_split_sets",
    "evaluate_split",
    "find_best_split",
    "generate",
    "greedy_tree_fit",
    "k_sample_test",
    "km_fit",
    "km_quantile",
    "km_survival_at",
    "permutation_pvalue",
    "permute_covariate",
    "run_experiment",
    "select_k",
    "two_sample_test",
]
