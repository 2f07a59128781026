"""Synthetic survival cohorts, a greedy binary-split baseline, and the batch
experiment runner that scores fitted cutpoints on independent test data.

Survival times are exponential with a covariate-driven rate; censoring times
are uniform on (0, theta) with theta calibrated so the expected censoring
fraction hits a requested target. The stepwise model has three hazard levels
separated by true cutpoints 7 and 14; the linear model ties the hazard rate
linearly to the covariate.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .selection import PermutationPlan, derive_rng, select_k
from .splitting import (
    CutpointScorer,
    InfeasibleSplitError,
    PairScope,
    PairStatCache,
    SearchConfig,
    SplitSet,
    find_best_split,
)
from .survival import Cohort, WeightKind

COVARIATE_LOW, COVARIATE_HIGH = 1, 20
STEPWISE_CUTPOINTS = (7.0, 14.0)
STEPWISE_RATES = (0.02, 0.04, 0.08)
LINEAR_RATE_SLOPE = 0.1

# 0.95 quantile of chi-square with 2 df, for confidence-ellipse axes.
_CHI2_2_Q95 = 5.991464547107979


class ModelKind(Enum):
    SM = "sm"   # stepwise hazards 0.02 / 0.04 / 0.08 at cutpoints 7, 14
    LM = "lm"   # hazard 0.1 * X


@dataclass(frozen=True)
class SimModel:
    kind: ModelKind
    n: int = 200
    censoring_rate_target: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0.0 <= self.censoring_rate_target < 1.0:
            raise ValueError("censoring target must be in [0, 1)")


def hazard_rate(kind: ModelKind, covariate: np.ndarray) -> np.ndarray:
    x = np.asarray(covariate, dtype=np.float64)
    if kind is ModelKind.SM:
        idx = np.searchsorted(np.asarray(STEPWISE_CUTPOINTS), x, side="left")
        return np.asarray(STEPWISE_RATES, dtype=np.float64)[idx]
    return LINEAR_RATE_SLOPE * x


def _covariate_rates(kind: ModelKind) -> np.ndarray:
    values = np.arange(COVARIATE_LOW, COVARIATE_HIGH + 1, dtype=np.float64)
    return hazard_rate(kind, values)


def expected_censoring_fraction(kind: ModelKind, theta: float) -> float:
    """P(T > C) for C ~ U(0, theta), T ~ Exp(rate), averaged over the
    discrete-uniform covariate: mean of (1 - e^(-rate*theta)) / (rate*theta)."""
    if math.isinf(theta):
        return 0.0
    x = _covariate_rates(kind) * theta
    return float(np.mean(-np.expm1(-x) / x))


@lru_cache(maxsize=None)
def _calibrate(kind: ModelKind, target: float) -> float:
    if target == 0.0:
        return math.inf
    lo, hi = 1e-9, 1.0
    while expected_censoring_fraction(kind, hi) > target:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("unattainable censoring target")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if expected_censoring_fraction(kind, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    theta = 0.5 * (lo + hi)
    if abs(expected_censoring_fraction(kind, theta) - target) > 1e-4:
        raise ValueError("unattainable censoring target")
    return theta


def calibrate_censoring(model: SimModel) -> float:
    """Upper bound theta of the uniform censoring law hitting the target
    censoring fraction (within 1e-4); +inf when the target is zero."""
    if not 0.0 <= model.censoring_rate_target <= 0.6:
        raise ValueError("censoring target must be in [0, 0.6]")
    return _calibrate(model.kind, model.censoring_rate_target)


def generate(model: SimModel, rng: Optional[np.random.Generator] = None) -> Cohort:
    """One simulated cohort: X ~ DU(1,20), T ~ Exp(rate(X)), C ~ U(0, theta),
    observed time min(T, C) with event indicator T <= C."""
    if rng is None:
        rng = derive_rng(model.seed)
    theta = calibrate_censoring(model)
    x = rng.integers(COVARIATE_LOW, COVARIATE_HIGH + 1, size=model.n).astype(
        np.float64
    )
    t = rng.exponential(scale=1.0 / hazard_rate(model.kind, x))
    if math.isinf(theta):
        return Cohort(time=t, event=np.ones(model.n, dtype=bool), covariate=x)
    c = rng.uniform(0.0, theta, size=model.n)
    return Cohort(time=np.minimum(t, c), event=t <= c, covariate=x)


def greedy_tree_fit(
    cohort: Cohort,
    max_groups: int,
    min_subgroup: int,
    weight: WeightKind = WeightKind.LOGRANK,
) -> SplitSet:
    """Greedy recursive binary partitioning on the covariate.

    Repeatedly splits the leaf whose best binary log-rank split has the largest
    statistic (ties: smaller cutpoint, then leftmost leaf) until ``max_groups``
    leaves are reached or no leaf admits a feasible split. Returns the implied
    cutpoint set. This is the binary-recursive contrast to the simultaneous
    max-min search, not a reimplementation of any particular tree package.
    """
    if max_groups < 2:
        raise ValueError("max_groups must be at least 2")
    cache = PairStatCache(cohort)
    cum, m = cache.cum_counts, cache.m

    def best_cut(lo: int, hi: int) -> Optional[tuple[float, int]]:
        best: Optional[tuple[float, int]] = None
        for b in range(lo + 1, hi):
            if cum[b] - cum[lo] < min_subgroup or cum[hi] - cum[b] < min_subgroup:
                continue
            stat = cache.pair_test(lo, b, b, hi, weight).statistic
            if best is None or stat > best[0] + 1e-9:
                best = (stat, b)
        return best

    leaves: list[tuple[int, int]] = [(0, m)]
    interior: list[int] = []
    while len(leaves) < max_groups:
        split_choice: Optional[tuple[float, int, int]] = None  # (stat, leaf, b)
        for i, (lo, hi) in enumerate(leaves):
            cand = best_cut(lo, hi)
            if cand is None:
                continue
            if split_choice is None or cand[0] > split_choice[0] + 1e-9:
                split_choice = (cand[0], i, cand[1])
        if split_choice is None:
            if not interior:
                raise InfeasibleSplitError("no feasible split set")
            break
        _, i, b = split_choice
        lo, hi = leaves[i]
        leaves[i:i + 1] = [(lo, b), (b, hi)]
        interior.append(b)
    if not interior:
        raise InfeasibleSplitError("no feasible split set")
    return cache.split_for(tuple(sorted(interior)))


@dataclass(frozen=True)
class ReplicationRecord:
    """One fitted partition scored on the replication's test cohort."""

    model: ModelKind
    censoring_rate: float
    rep: int
    method: str
    k: int
    cutpoints: Optional[tuple[float, ...]]
    overall: Optional[float]
    min_pairwise: Optional[float]
    error: Optional[str] = None


@dataclass(frozen=True)
class SelectionRecord:
    model: ModelKind
    censoring_rate: float
    rep: int
    method: str
    k_hat: Optional[int]


@dataclass
class ExperimentResult:
    records: list[ReplicationRecord]
    selections: list[SelectionRecord]

    def aggregates(self) -> list[dict]:
        """Mean and standard error (sd / sqrt(#ok)) of the test statistics per
        (model, censoring rate, method, k), with failure tallies."""
        groups: dict[tuple, list[ReplicationRecord]] = {}
        for rec in self.records:
            key = (rec.model.value, rec.censoring_rate, rec.method, rec.k)
            groups.setdefault(key, []).append(rec)
        rows = []
        for key in sorted(groups):
            recs = groups[key]
            ok = [r for r in recs if r.error is None]
            row = {
                "model": key[0],
                "cr": key[1],
                "method": key[2],
                "k": key[3],
                "n_ok": len(ok),
                "n_fail": len(recs) - len(ok),
            }
            for name, vals in (
                ("overall", [r.overall for r in ok]),
                ("min_pairwise", [r.min_pairwise for r in ok]),
            ):
                arr = np.asarray(vals, dtype=np.float64)
                if arr.size:
                    row[f"mean_{name}"] = float(arr.mean())
                    row[f"se_{name}"] = float(
                        arr.std(ddof=1) / math.sqrt(arr.size)
                    ) if arr.size > 1 else 0.0
                else:
                    row[f"mean_{name}"] = None
                    row[f"se_{name}"] = None
            rows.append(row)
        return rows

    def cutpoint_matrix(
        self, model: ModelKind, method: str, k: int,
        censoring_rate: Optional[float] = None,
    ) -> np.ndarray:
        """(#ok reps, k-1) array of fitted cutpoints."""
        rows = [
            rec.cutpoints
            for rec in self.records
            if rec.model is model and rec.method == method and rec.k == k
            and rec.error is None and rec.cutpoints is not None
            and len(rec.cutpoints) == k - 1
            and (censoring_rate is None or rec.censoring_rate == censoring_rate)
        ]
        return np.asarray(rows, dtype=np.float64)

    def k_hat_counts(self, model: ModelKind, method: str = "kaps") -> Counter:
        counts: Counter = Counter()
        for sel in self.selections:
            if sel.model is model and sel.method == method:
                counts[sel.k_hat] += 1
        return counts

    def ellipses(self) -> list[dict]:
        """95% confidence-ellipse parameters of the fitted cutpoint clouds,
        for every (model, cr, method, k) with two cutpoints."""
        combos = sorted(
            {
                (r.model, r.censoring_rate, r.method, r.k)
                for r in self.records
                if r.k == 3 and r.error is None
            },
            key=lambda c: (c[0].value, c[1], c[2], c[3]),
        )
        out = []
        for model, cr, method, k in combos:
            pts = self.cutpoint_matrix(model, method, k, cr)
            if pts.shape[0] < 3:
                continue
            center = pts.mean(axis=0)
            cov = np.cov(pts.T, ddof=1)
            eigval, eigvec = np.linalg.eigh(cov)
            axes = np.sqrt(np.maximum(eigval, 0.0) * _CHI2_2_Q95)
            angle = math.degrees(math.atan2(eigvec[1, 1], eigvec[0, 1]))
            out.append(
                {
                    "model": model.value,
                    "cr": cr,
                    "method": method,
                    "k": k,
                    "center": [float(v) for v in center],
                    "axes": sorted((float(a) for a in axes), reverse=True),
                    "angle_deg": float(angle),
                    "det_cov": float(np.linalg.det(np.atleast_2d(cov))),
                }
            )
        return out

    def to_csv(self, path: str) -> None:
        """Flat per-replication table: model,cr,rep,method,k,cutpoints,overall,min_pairwise."""
        import csv

        tmp = f"{path}.tmp"
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["model", "cr", "rep", "method", "k", "cutpoints",
                 "overall", "min_pairwise"]
            )
            for rec in self.records:
                cuts = (
                    ";".join(f"{c:g}" for c in rec.cutpoints)
                    if rec.cutpoints is not None else ""
                )
                writer.writerow(
                    [
                        rec.model.value,
                        f"{rec.censoring_rate:g}",
                        rec.rep,
                        rec.method,
                        rec.k,
                        cuts,
                        "" if rec.overall is None else f"{rec.overall:.10g}",
                        "" if rec.min_pairwise is None else f"{rec.min_pairwise:.10g}",
                    ]
                )
        os.replace(tmp, path)

    def summary_dict(self) -> dict:
        selections: dict[str, dict] = {}
        for sel in self.selections:
            entry = selections.setdefault(
                sel.model.value, {"counts": {}, "per_rep": []}
            )
            label = "none" if sel.k_hat is None else str(sel.k_hat)
            entry["counts"][label] = entry["counts"].get(label, 0) + 1
            entry["per_rep"].append(sel.k_hat)
        return {
            "aggregates": self.aggregates(),
            "k_selection": selections,
            "cutpoint_ellipses": self.ellipses(),
        }


def thread_count(threads: Optional[int] = None) -> int:
    """Worker cap: explicit argument, else the KAPS_THREADS variable, else 1."""
    if threads is not None:
        return max(1, int(threads))
    return max(1, int(os.environ.get("KAPS_THREADS", "1")))


def _selection_seed(model: SimModel, rep: int) -> int:
    seq = np.random.SeedSequence((model.seed, rep, 2))
    return int(seq.generate_state(1, np.uint64)[0])


def _run_replication(args: tuple) -> tuple[list[ReplicationRecord], list[SelectionRecord]]:
    (model, methods, rep, k_values, min_frac, weight, k_range,
     permutations, alpha) = args
    train = generate(model, derive_rng(model.seed, rep, 0))
    test = generate(model, derive_rng(model.seed, rep, 1))
    min_subgroup = max(1, math.ceil(min_frac * model.n))
    cr = model.censoring_rate_target

    def scored(method: str, k: int, cuts: Optional[tuple[float, ...]],
               error: Optional[str] = None) -> ReplicationRecord:
        if cuts is None:
            return ReplicationRecord(model.kind, cr, rep, method, k,
                                     None, None, None, error)
        scorer = CutpointScorer(test, cuts, weight, PairScope.ALL_PAIRS)
        ev = scorer.evaluate(test.covariate)
        return ReplicationRecord(
            model.kind, cr, rep, method, k, cuts,
            ev.overall.statistic, ev.min_pairwise.statistic,
        )

    records: list[ReplicationRecord] = []
    if model.kind is ModelKind.SM:
        records.append(scored("ref", 3, STEPWISE_CUTPOINTS))
    for k in k_values:
        for method in methods:
            try:
                if method == "kaps":
                    config = SearchConfig(k=k, min_subgroup=min_subgroup,
                                          weight=weight)
                    cuts = find_best_split(train, config).split.cutpoints
                elif method == "greedy":
                    cuts = greedy_tree_fit(train, k, min_subgroup,
                                           weight).cutpoints
                else:
                    raise ValueError(f"unknown method {method!r}")
                records.append(scored(method, k, cuts))
            except InfeasibleSplitError as exc:
                records.append(scored(method, k, None, str(exc)))

    selections: list[SelectionRecord] = []
    if k_range and "kaps" in methods:
        plan = PermutationPlan(
            replications=permutations, seed=_selection_seed(model, rep),
            alpha=alpha,
        )
        config = SearchConfig(k=2, min_subgroup=min_subgroup, weight=weight)
        try:
            result = select_k(train, k_range, plan, config)
            selections.append(
                SelectionRecord(model.kind, cr, rep, "kaps", result.k_hat)
            )
        except InfeasibleSplitError:
            selections.append(SelectionRecord(model.kind, cr, rep, "kaps", None))
    return records, selections


def run_experiment(
    models: Sequence[SimModel],
    methods: Sequence[str] = ("kaps", "greedy"),
    reps: int = 100,
    k_values: Sequence[int] = (3,),
    *,
    min_frac: float = 0.10,
    weight: WeightKind = WeightKind.LOGRANK,
    k_range: Optional[Sequence[int]] = None,
    permutations: int = 200,
    alpha: float = 0.05,
    threads: Optional[int] = None,
) -> ExperimentResult:
    """Train/test replications for each model: fit each method on a fresh
    training cohort, score the fitted cutpoints on an independent test cohort,
    and (optionally) run the permutation K-selection per replication.

    For the stepwise model a method-free reference row at the true cutpoints
    (7, 14) is recorded per replication. Replications are independent, run in
    deterministic per-replication streams, and may execute in parallel; results
    are identical for any worker count.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    tasks = [
        (model, tuple(methods), rep, tuple(k_values), min_frac, weight,
         tuple(k_range) if k_range else None, permutations, alpha)
        for model in models
        for rep in range(reps)
    ]
    workers = thread_count(threads)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_replication, tasks, chunksize=4))
    else:
        outcomes = [_run_replication(t) for t in tasks]
    records: list[ReplicationRecord] = []
    selections: list[SelectionRecord] = []
    for recs, sels in outcomes:
        records.extend(recs)
        selections.extend(sels)
    return ExperimentResult(records=records, selections=selections)
