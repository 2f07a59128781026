"""Choosing the number of subgroups by a covariate-permutation test.

For each candidate K the best split is found once on the raw data. The
covariate labels are then permuted R times and each permutation is scored; the
permutation p-value is the fraction of permuted scores reaching the raw
minimum-pairwise statistic. In the default ``RESEARCH`` scoring the split
search is re-run on every permuted dataset, so raw and permuted statistics are
both search maxima and the p-value is exact under the null; the alternative
``FIXED_CUTPOINTS`` scoring keeps the raw cutpoints and only reallocates the
permuted records (cheaper, but anti-conservative because only the raw side was
maximized). The largest K whose corrected p-value clears the significance
level is selected.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .splitting import (
    CutpointScorer,
    InfeasibleSplitError,
    MaxMinRescorer,
    SearchConfig,
    SplitEvaluation,
    find_best_split,
)
from .survival import Cohort


class Correction(Enum):
    """Multiplicity handling for the per-K permutation p-value."""

    NONE = "none"
    PAPER_DIVIDE = "paper"              # p / (K-1)
    BONFERRONI_MULTIPLY = "bonferroni"  # min(1, p * (K-1))


class PermutationScoring(Enum):
    RESEARCH = "research"                # re-run the split search per permutation
    FIXED_CUTPOINTS = "fixed-cutpoints"  # score the raw cutpoints only


@dataclass(frozen=True)
class PermutationPlan:
    replications: int = 1000
    seed: int = 0
    alpha: float = 0.05
    correction: Correction = Correction.BONFERRONI_MULTIPLY
    scoring: PermutationScoring = PermutationScoring.RESEARCH

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")


@dataclass(frozen=True)
class KChoice:
    k: int
    best: SplitEvaluation
    p_value: float
    p_corrected: float


@dataclass(frozen=True)
class KSelectionResult:
    per_k: tuple[KChoice, ...]
    k_hat: Optional[int]

    @property
    def exhaustive_flags(self) -> tuple[bool, ...]:
        return tuple(choice.best.exhaustive for choice in self.per_k)

    def choice(self, k: int) -> KChoice:
        for entry in self.per_k:
            if entry.k == k:
                return entry
        raise KeyError(f"no result for K={k}")


def derive_rng(*keys: int) -> np.random.Generator:
    """Philox stream keyed by a tuple of integers.

    Philox is counter-based, so streams for distinct key tuples are
    independent and safe to draw from in parallel.
    """
    seq = np.random.SeedSequence(tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seed=seq))


def permute_covariate(cohort: Cohort, rng: np.random.Generator) -> Cohort:
    """Cohort with covariate labels shuffled; (time, event) pairs untouched."""
    return Cohort(
        time=cohort.time, event=cohort.event,
        covariate=rng.permutation(cohort.covariate),
    )


def _permutation_pvalues(
    cohort: Cohort,
    bests: dict[int, SplitEvaluation],
    plan: PermutationPlan,
    config: SearchConfig,
) -> dict[int, float]:
    """Permutation p-values for several K at once, sharing the permutation
    stream and (under RESEARCH scoring) one rescorer rebuild per permutation.

    Replication r draws from the stream keyed by (seed, r). Thresholds are
    computed through the same scoring path as the permuted values so exact
    ties (e.g. permutations inducing the raw allocation) always count.
    """
    ks = sorted(bests)
    if plan.scoring is PermutationScoring.RESEARCH:
        rescorer = MaxMinRescorer(
            cohort, ks, config.min_subgroup, config.weight, config.pair_scope
        )
        raw = rescorer.max_min_all(cohort.covariate)
        exceed = {k: 0 for k in ks}
        for r in range(1, plan.replications + 1):
            rng = derive_rng(plan.seed, r)
            scores = rescorer.max_min_all(rng.permutation(cohort.covariate))
            for k in ks:
                if scores[k] >= raw[k]:
                    exceed[k] += 1
        return {k: exceed[k] / plan.replications for k in ks}

    scorers = {
        k: CutpointScorer(
            cohort, bests[k].split.cutpoints, config.weight, config.pair_scope
        )
        for k in ks
    }
    raw = {k: bests[k].min_pairwise.statistic for k in ks}
    exceed = {k: 0 for k in ks}
    for r in range(1, plan.replications + 1):
        rng = derive_rng(plan.seed, r)
        permuted = rng.permutation(cohort.covariate)
        for k in ks:
            if scorers[k].min_pairwise_statistic(permuted) >= raw[k]:
                exceed[k] += 1
    return {k: exceed[k] / plan.replications for k in ks}


def permutation_pvalue(
    cohort: Cohort,
    best: SplitEvaluation,
    plan: PermutationPlan,
    config: SearchConfig,
) -> float:
    """Fraction of R covariate permutations whose minimum-pairwise score
    reaches the raw statistic of ``best``; lies on the grid {0, 1/R, ..., 1}."""
    config = replace(config, k=best.split.k)
    return _permutation_pvalues(cohort, {best.split.k: best}, plan, config)[
        best.split.k
    ]


def correct_pvalue(p: float, k: int, correction: Correction) -> float:
    """Multiplicity-corrected p-value for a K-subgroup comparison."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if correction is Correction.PAPER_DIVIDE:
        return p / (k - 1)
    if correction is Correction.BONFERRONI_MULTIPLY:
        return min(1.0, p * (k - 1))
    return p


def select_k(
    cohort: Cohort,
    k_range: Iterable[int],
    plan: PermutationPlan,
    config: SearchConfig,
) -> KSelectionResult:
    """Best split and permutation p-value per candidate K, then the largest K
    whose corrected p-value is at or below alpha.

    Candidate Ks that admit no feasible split are skipped; if none is feasible
    an error is raised. ``k_hat`` is None when no K qualifies.
    """
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise InfeasibleSplitError("empty k range")
    bests: dict[int, SplitEvaluation] = {}
    for k in ks:
        try:
            bests[k] = find_best_split(cohort, replace(config, k=k))
        except InfeasibleSplitError:
            continue
    if not bests:
        raise InfeasibleSplitError("no feasible split set for any K in range")
    pvalues = _permutation_pvalues(cohort, bests, plan, config)
    per_k = tuple(
        KChoice(
            k=k,
            best=bests[k],
            p_value=pvalues[k],
            p_corrected=correct_pvalue(pvalues[k], k, plan.correction),
        )
        for k in sorted(bests)
    )
    qualifying = [c.k for c in per_k if c.p_corrected <= plan.alpha]
    return KSelectionResult(
        per_k=per_k, k_hat=max(qualifying) if qualifying else None
    )
