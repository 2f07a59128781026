"""Cutpoint split sets over an ordered covariate and the max-min pairwise search.

A split set of K-1 cutpoints partitions a cohort into K ordered subgroups
(record i goes to subgroup g iff cut_{g-1} < X_i <= cut_g). The search scores a
split by the *smallest* pairwise chi-square among its subgroup pairs and keeps
the split maximizing that score, breaking ties by the overall K-sample
statistic and then by the lexicographically smallest cutpoint vector.

Subgroups are contiguous runs of distinct covariate values, so every pairwise
statistic is a function of an ordered interval pair. ``PairStatCache`` holds
prefix tables of at-risk/event counts per distinct covariate value, giving each
interval-pair statistic in O(#event times) and memoizing it by index tuple.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np

from .survival import (
    Cohort,
    TestResult,
    WeightKind,
    chi2_sf,
    counts_on_grid,
    event_time_grid,
    k_sample_statistic_from_counts,
    statistic_from_pair_counts,
)

# Two min-pairwise statistics within this absolute distance count as tied.
STAT_TIE_TOL = 1e-9


class InfeasibleSplitError(ValueError):
    """No split set satisfies the subgroup-size constraint."""


class PairScope(Enum):
    """Which subgroup pairs enter the minimum."""

    ADJACENT = "adjacent"    # the K-1 pairs (g, g+1)
    ALL_PAIRS = "all"        # every pair 1 <= g < h <= K


@dataclass(frozen=True)
class SplitSet:
    """Strictly ascending cutpoints; values must be observed covariate values."""

    cutpoints: tuple[float, ...]

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cutpoints)
        if len(cuts) < 1:
            raise ValueError("a split set needs at least one cutpoint")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cutpoints must be strictly ascending")
        object.__setattr__(self, "cutpoints", cuts)

    @property
    def k(self) -> int:
        return len(self.cutpoints) + 1

    def assign(self, covariate: np.ndarray) -> np.ndarray:
        """Subgroup index (0-based) per record: g = #{cutpoints < X}."""
        return np.searchsorted(np.asarray(self.cutpoints), covariate, side="left")


@dataclass(frozen=True)
class SearchConfig:
    k: int
    min_subgroup: int
    weight: WeightKind = WeightKind.LOGRANK
    pair_scope: PairScope = PairScope.ADJACENT
    budget: Optional[int] = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.min_subgroup < 1:
            raise ValueError("min_subgroup must be positive")


@dataclass(frozen=True)
class SplitEvaluation:
    split: SplitSet
    min_pairwise: TestResult
    worst_pair: tuple[int, int]          # 1-based (g, h), g < h
    overall: TestResult
    pairwise: dict[tuple[int, int], TestResult]  # all pairs, 1-based keys
    group_sizes: tuple[int, ...]
    exhaustive: bool = True


class PairStatCache:
    """Prefix tables over distinct covariate values plus a memoized pair test.

    Intervals are half-open index ranges [lo, hi) over the ascending distinct
    covariate values; ``pair_test`` results are bit-identical to calling
    ``two_sample_test`` on the induced subgroups.
    """

    def __init__(self, cohort: Cohort):
        self.cohort = cohort
        self.values = cohort.distinct_covariates()
        m = self.values.size
        vidx = np.searchsorted(self.values, cohort.covariate)
        self.counts = np.bincount(vidx, minlength=m).astype(np.int64)
        self.cum_counts = np.concatenate([[0], np.cumsum(self.counts)])

        self.grid = event_time_grid(cohort.time, cohort.event)
        j = self.grid.size
        # pos_i = #{grid times <= Y_i}; record i is at risk at grid[t] iff pos_i > t
        pos = np.searchsorted(self.grid, cohort.time, side="right")
        pos_counts = np.zeros((m, j + 1), dtype=np.int64)
        np.add.at(pos_counts, (vidx, pos), 1)
        exited = np.cumsum(pos_counts, axis=1)[:, :j]
        risk_per_value = self.counts[:, None] - exited
        ev_per_value = np.zeros((m, j), dtype=np.int64)
        if j:
            ev_pos = np.searchsorted(self.grid, cohort.time[cohort.event])
            np.add.at(ev_per_value, (vidx[cohort.event], ev_pos), 1)

        zero = np.zeros((1, j), dtype=np.int64)
        self.risk_pref = np.concatenate([zero, np.cumsum(risk_per_value, axis=0)])
        self.ev_pref = np.concatenate([zero, np.cumsum(ev_per_value, axis=0)])
        self._memo: dict[tuple[int, int, int, int, WeightKind], TestResult] = {}

    @property
    def m(self) -> int:
        return int(self.values.size)

    def interval_size(self, lo: int, hi: int) -> int:
        return int(self.cum_counts[hi] - self.cum_counts[lo])

    def interval_counts(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        return (
            self.risk_pref[hi] - self.risk_pref[lo],
            self.ev_pref[hi] - self.ev_pref[lo],
        )

    def pair_test(
        self, lo1: int, hi1: int, lo2: int, hi2: int, weight: WeightKind
    ) -> TestResult:
        key = (lo1, hi1, lo2, hi2, weight)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        n_a, d_a = self.interval_counts(lo1, hi1)
        n_b, d_b = self.interval_counts(lo2, hi2)
        stat = statistic_from_pair_counts(n_a, d_a, n_b, d_b, weight)
        result = TestResult(statistic=stat, df=1, p_value=chi2_sf(stat, 1))
        self._memo[key] = result
        return result

    def boundaries_for(self, split: SplitSet) -> tuple[int, ...]:
        """Interior boundary indices (b such that group ends before values[b])."""
        bounds = []
        for cut in split.cutpoints:
            idx = int(np.searchsorted(self.values, cut))
            if idx >= self.values.size or self.values[idx] != cut:
                raise ValueError(
                    f"cutpoint {cut:g} is not an observed covariate value"
                )
            bounds.append(idx + 1)
        return tuple(bounds)

    def split_for(self, bounds: tuple[int, ...]) -> SplitSet:
        return SplitSet(tuple(float(self.values[b - 1]) for b in bounds))


def _iter_boundary_tuples(
    cum: np.ndarray, m: int, k: int, min_subgroup: int
) -> Iterator[tuple[int, ...]]:
    """Feasible interior boundaries (b_1 < ... < b_{K-1}) in ascending
    lexicographic order; group g spans value indices [b_{g-1}, b_g)."""
    total = int(cum[m])
    chosen: list[int] = []

    def rec(level: int, lo: int) -> Iterator[tuple[int, ...]]:
        needed_after = (k - 1 - level) * min_subgroup
        for b in range(lo + 1, m):
            if cum[b] - cum[chosen[-1] if chosen else 0] < min_subgroup:
                continue
            if total - cum[b] < needed_after:
                break
            chosen.append(b)
            if level == k - 2:
                yield tuple(chosen)
            else:
                yield from rec(level + 1, b)
            chosen.pop()

    yield from rec(0, 0)


def _check_config(cohort: Cohort, config: SearchConfig) -> None:
    if config.min_subgroup * config.k > cohort.n:
        raise InfeasibleSplitError("no feasible split set")


def count_feasible_split_sets(cohort: Cohort, config: SearchConfig) -> int:
    """Number of feasible split sets, by dynamic programming over boundaries."""
    _check_config(cohort, config)
    cache = PairStatCache(cohort)
    cum, m, k, ms = cache.cum_counts, cache.m, config.k, config.min_subgroup
    ways = {0: 1}
    for _ in range(k - 1):
        nxt: dict[int, int] = {}
        for prev, w in ways.items():
            for b in range(prev + 1, m):
                if cum[b] - cum[prev] >= ms:
                    nxt[b] = nxt.get(b, 0) + w
        ways = nxt
    return sum(w for b, w in ways.items() if cum[m] - cum[b] >= ms)


def enumerate_split_sets(cohort: Cohort, config: SearchConfig) -> Iterator[SplitSet]:
    """All split sets whose subgroups each hold >= min_subgroup records,
    in ascending lexicographic cutpoint order."""
    _check_config(cohort, config)
    cache = PairStatCache(cohort)

    def gen():
        for bounds in _iter_boundary_tuples(
            cache.cum_counts, cache.m, config.k, config.min_subgroup
        ):
            yield cache.split_for(bounds)

    return gen()


def _scope_pairs(k: int, scope: PairScope) -> list[tuple[int, int]]:
    if scope is PairScope.ADJACENT:
        return [(g, g + 1) for g in range(1, k)]
    return [(g, h) for g in range(1, k) for h in range(g + 1, k + 1)]


def _bounds_to_edges(bounds: tuple[int, ...], m: int) -> list[int]:
    return [0, *bounds, m]


def _min_over_scope(
    cache: PairStatCache,
    edges: list[int],
    k: int,
    weight: WeightKind,
    scope: PairScope,
) -> float:
    worst = np.inf
    for g, h in _scope_pairs(k, scope):
        stat = cache.pair_test(
            edges[g - 1], edges[g], edges[h - 1], edges[h], weight
        ).statistic
        if stat < worst:
            worst = stat
    return worst


def evaluate_split(
    cohort: Cohort,
    split: SplitSet,
    config: SearchConfig,
    cache: Optional[PairStatCache] = None,
) -> SplitEvaluation:
    """Full scoring of one split: all pairwise tests, worst pair, overall test."""
    if cache is None:
        cache = PairStatCache(cohort)
    k = split.k
    bounds = cache.boundaries_for(split)
    edges = _bounds_to_edges(bounds, cache.m)
    sizes = tuple(cache.interval_size(a, b) for a, b in zip(edges, edges[1:]))
    if any(s < config.min_subgroup for s in sizes):
        raise InfeasibleSplitError("constraint violated")

    pairwise: dict[tuple[int, int], TestResult] = {}
    for g in range(1, k):
        for h in range(g + 1, k + 1):
            pairwise[(g, h)] = cache.pair_test(
                edges[g - 1], edges[g], edges[h - 1], edges[h], config.weight
            )
    worst_pair = min(
        _scope_pairs(k, config.pair_scope),
        key=lambda gh: (pairwise[gh].statistic, gh),
    )

    n_gj = np.empty((k, cache.grid.size), dtype=np.int64)
    d_gj = np.empty_like(n_gj)
    for g, (a, b) in enumerate(zip(edges, edges[1:])):
        n_gj[g], d_gj[g] = cache.interval_counts(a, b)
    stat, rank = k_sample_statistic_from_counts(n_gj, d_gj, config.weight)
    df = max(rank, 1)
    overall = TestResult(statistic=stat, df=df, p_value=chi2_sf(stat, df))

    return SplitEvaluation(
        split=split,
        min_pairwise=pairwise[worst_pair],
        worst_pair=worst_pair,
        overall=overall,
        pairwise=pairwise,
        group_sizes=sizes,
    )


def _overall_stat(cache: PairStatCache, edges: list[int], weight: WeightKind) -> float:
    k = len(edges) - 1
    n_gj = np.empty((k, cache.grid.size), dtype=np.int64)
    d_gj = np.empty_like(n_gj)
    for g, (a, b) in enumerate(zip(edges, edges[1:])):
        n_gj[g], d_gj[g] = cache.interval_counts(a, b)
    stat, _ = k_sample_statistic_from_counts(n_gj, d_gj, weight)
    return stat


def _select_best(
    cache: PairStatCache,
    candidates: Iterator[tuple[int, ...]],
    config: SearchConfig,
) -> Optional[tuple[int, ...]]:
    """Max-min scan with the tie rules. Candidates must arrive in ascending
    lexicographic order for the final tie-break to hold."""
    m = cache.m
    best_stat = -np.inf
    contenders: list[tuple[float, tuple[int, ...]]] = []
    for bounds in candidates:
        stat = _min_over_scope(
            cache, _bounds_to_edges(bounds, m), config.k, config.weight,
            config.pair_scope,
        )
        if stat < best_stat - STAT_TIE_TOL:
            continue
        if stat > best_stat:
            best_stat = stat
            contenders = [
                (s, b) for s, b in contenders if s >= best_stat - STAT_TIE_TOL
            ]
        contenders.append((stat, bounds))
    if not contenders:
        return None

    winner = None
    winner_overall = -np.inf
    for stat, bounds in contenders:
        if stat < best_stat - STAT_TIE_TOL:
            continue
        overall = _overall_stat(cache, _bounds_to_edges(bounds, m), config.weight)
        if overall > winner_overall + STAT_TIE_TOL:
            winner, winner_overall = bounds, overall
    return winner


def _beam_candidates(
    cache: PairStatCache, config: SearchConfig
) -> Iterator[tuple[int, ...]]:
    """Approximate candidate stream for large search spaces: an exhaustive pass
    over a record-mass-coarsened boundary grid, then coordinate-wise refinement
    of the beam leaders over the full grid. Deterministic; not exhaustive."""
    m, k, ms = cache.m, config.k, config.min_subgroup
    cum = cache.cum_counts
    budget = config.budget or 0
    n_coarse = max(4 * k, int(round(budget ** (1.0 / (k - 1)))))
    targets = np.linspace(0, cum[m], num=min(n_coarse, m - 1) + 2)[1:-1]
    coarse = sorted({int(np.searchsorted(cum, t, side="left")) for t in targets})
    coarse = [b for b in coarse if 1 <= b <= m - 1]

    def feasible(bounds: tuple[int, ...]) -> bool:
        edges = _bounds_to_edges(bounds, m)
        return all(cum[b] - cum[a] >= ms for a, b in zip(edges, edges[1:]))

    scored: list[tuple[float, tuple[int, ...]]] = []
    for combo in itertools.combinations(coarse, k - 1):
        if not feasible(combo):
            continue
        stat = _min_over_scope(
            cache, _bounds_to_edges(combo, m), k, config.weight, config.pair_scope
        )
        scored.append((stat, combo))
    scored.sort(key=lambda sb: (-sb[0], sb[1]))
    beam = [b for _, b in scored[:16]]

    seen: set[tuple[int, ...]] = set()
    evaluations = 0
    for start in beam:
        current = start
        improved = True
        while improved and evaluations < budget:
            improved = False
            cur_stat = _min_over_scope(
                cache, _bounds_to_edges(current, m), k, config.weight,
                config.pair_scope,
            )
            for level in range(k - 1):
                lo = current[level - 1] if level else 0
                hi = current[level + 1] if level + 1 < k - 1 else m
                for b in range(lo + 1, hi):
                    trial = current[:level] + (b,) + current[level + 1:]
                    if trial == current or not feasible(trial):
                        continue
                    evaluations += 1
                    stat = _min_over_scope(
                        cache, _bounds_to_edges(trial, m), k, config.weight,
                        config.pair_scope,
                    )
                    if stat > cur_stat + STAT_TIE_TOL:
                        current, cur_stat = trial, stat
                        improved = True
            if evaluations >= budget:
                break
        if current not in seen:
            seen.add(current)
    yield from sorted(seen)


def find_best_split(cohort: Cohort, config: SearchConfig) -> SplitEvaluation:
    """Best split set under the max-min pairwise criterion.

    Exhaustive over the feasible split sets when their count fits the budget
    (or no budget is set); otherwise a beam refinement over a coarsened grid,
    flagged ``exhaustive=False`` in the result.
    """
    _check_config(cohort, config)
    cache = PairStatCache(cohort)
    exhaustive = (
        config.budget is None
        or count_feasible_split_sets(cohort, config) <= config.budget
    )
    if exhaustive:
        candidates = _iter_boundary_tuples(
            cache.cum_counts, cache.m, config.k, config.min_subgroup
        )
    else:
        candidates = _beam_candidates(cache, config)
    winner = _select_best(cache, candidates, config)
    if winner is None:
        raise InfeasibleSplitError("no feasible split set")
    evaluation = evaluate_split(cohort, cache.split_for(winner), config, cache)
    if not exhaustive:
        evaluation = replace(evaluation, exhaustive=False)
    return evaluation


class MaxMinRescorer:
    """Recomputes the best max-min pairwise statistic for covariate relabelings.

    Permuting the covariate preserves its value multiset, so the feasible
    boundary tuples and the pooled event-time grid never change; only the
    value-to-record assignment does. The tuples and the set of interval pairs
    they touch are therefore enumerated once, and each relabeling costs one
    prefix-table rebuild plus a vectorized pass over all interval pairs.

    Statistics agree with the ``PairStatCache`` path to floating-point
    round-off (the summation order differs); use :meth:`max_min` on the raw
    covariate as the comparison threshold so exact ties are counted.
    """

    _CHUNK = 4096  # interval pairs per vectorized block

    def __init__(
        self,
        cohort: Cohort,
        ks: Sequence[int],
        min_subgroup: int,
        weight: WeightKind = WeightKind.LOGRANK,
        pair_scope: PairScope = PairScope.ADJACENT,
    ):
        self.weight = weight
        self.values = cohort.distinct_covariates()
        m = self.values.size
        self._m = m
        vidx = np.searchsorted(self.values, cohort.covariate)
        counts = np.bincount(vidx, minlength=m).astype(np.int64)
        cum = np.concatenate([[0], np.cumsum(counts)])

        self.grid = event_time_grid(cohort.time, cohort.event)
        j = self.grid.size
        self._j = j
        self._pos = np.searchsorted(self.grid, cohort.time, side="right")
        self._event = np.asarray(cohort.event, dtype=bool)
        self._ev_pos = np.searchsorted(self.grid, cohort.time[self._event])

        pair_index: dict[tuple[int, int, int, int], int] = {}
        self._tuple_pairs: dict[int, np.ndarray] = {}
        for k in ks:
            pairs = _scope_pairs(k, pair_scope)
            rows = []
            for bounds in _iter_boundary_tuples(cum, m, k, min_subgroup):
                edges = _bounds_to_edges(bounds, m)
                row = []
                for g, h in pairs:
                    key = (edges[g - 1], edges[g], edges[h - 1], edges[h])
                    idx = pair_index.setdefault(key, len(pair_index))
                    row.append(idx)
                rows.append(row)
            if rows:
                self._tuple_pairs[k] = np.asarray(rows, dtype=np.int64)
        quads = np.asarray(
            sorted(pair_index, key=pair_index.__getitem__), dtype=np.int64
        ).reshape(len(pair_index), 4)
        self._quads = quads

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(sorted(self._tuple_pairs))

    def _prefix_tables(self, covariate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m, j = self._m, self._j
        vidx = np.searchsorted(self.values, covariate)
        exited = np.bincount(
            vidx * (j + 1) + self._pos, minlength=m * (j + 1)
        ).reshape(m, j + 1)
        totals = exited.sum(axis=1, keepdims=True)
        risk = totals - np.cumsum(exited, axis=1)[:, :j]
        ev = np.bincount(
            vidx[self._event] * j + self._ev_pos, minlength=m * j
        ).reshape(m, j)
        zero = np.zeros((1, j), dtype=np.int64)
        return (
            np.concatenate([zero, np.cumsum(risk, axis=0)]),
            np.concatenate([zero, np.cumsum(ev, axis=0)]),
        )

    def _pair_stats(self, covariate: np.ndarray) -> np.ndarray:
        risk_pref, ev_pref = self._prefix_tables(covariate)
        quads = self._quads
        gehan = self.weight is WeightKind.GEHAN
        stats = np.empty(quads.shape[0], dtype=np.float64)
        for start in range(0, quads.shape[0], self._CHUNK):
            q = quads[start:start + self._CHUNK]
            n_a = (risk_pref[q[:, 1]] - risk_pref[q[:, 0]]).astype(np.float64)
            d_a = (ev_pref[q[:, 1]] - ev_pref[q[:, 0]]).astype(np.float64)
            n_b = (risk_pref[q[:, 3]] - risk_pref[q[:, 2]]).astype(np.float64)
            d_b = (ev_pref[q[:, 3]] - ev_pref[q[:, 2]]).astype(np.float64)
            n = n_a + n_b
            d = d_a + d_b
            valid = (d > 0) & (n > 1)
            n_safe = np.where(valid, n, 2.0)
            w = n if gehan else 1.0
            u = np.where(valid, w * (d_a - n_a * d / n_safe), 0.0).sum(axis=1)
            v = np.where(
                valid,
                w * w * (n_a / n_safe) * (n_b / n_safe) * d * (n - d)
                / np.where(valid, n - 1.0, 1.0),
                0.0,
            ).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                stats[start:start + self._CHUNK] = np.where(
                    v > 0.0, u * u / v, 0.0
                )
        return stats

    def max_min(self, covariate: np.ndarray, k: int) -> Optional[float]:
        """Best minimum-pairwise statistic over all feasible K-group splits of
        the given covariate labeling; None when no split is feasible."""
        rows = self._tuple_pairs.get(k)
        if rows is None:
            return None
        stats = self._pair_stats(covariate)
        return float(stats[rows].min(axis=1).max())

    def max_min_all(self, covariate: np.ndarray) -> dict[int, float]:
        """One prefix rebuild, then the max-min statistic for every K at once."""
        stats = self._pair_stats(covariate)
        return {
            k: float(stats[rows].min(axis=1).max())
            for k, rows in sorted(self._tuple_pairs.items())
        }


class CutpointScorer:
    """Scores one fixed cutpoint vector against a cohort's (time, event) data
    for many covariate relabelings, without re-running any search.

    The pooled event-time grid never changes when only the covariate labels
    move, so per-group counts reduce to two bincounts per scoring.
    """

    def __init__(
        self,
        cohort: Cohort,
        cutpoints: tuple[float, ...],
        weight: WeightKind = WeightKind.LOGRANK,
        pair_scope: PairScope = PairScope.ADJACENT,
    ):
        self.cuts = np.asarray(cutpoints, dtype=np.float64)
        self.k = self.cuts.size + 1
        self.weight = weight
        self.pair_scope = pair_scope
        self.grid = event_time_grid(cohort.time, cohort.event)
        j = self.grid.size
        self._j = j
        self._pos = np.searchsorted(self.grid, cohort.time, side="right")
        self._event = np.asarray(cohort.event, dtype=bool)
        self._ev_pos = np.searchsorted(self.grid, cohort.time[self._event])
        self._pairs = _scope_pairs(self.k, pair_scope)

    def group_counts(self, covariate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        group = np.searchsorted(self.cuts, covariate, side="left")
        j, k = self._j, self.k
        exited = np.bincount(
            group * (j + 1) + self._pos, minlength=k * (j + 1)
        ).reshape(k, j + 1)
        totals = exited.sum(axis=1, keepdims=True)
        n_gj = totals - np.cumsum(exited, axis=1)[:, :j]
        d_gj = np.bincount(
            group[self._event] * j + self._ev_pos, minlength=k * j
        ).reshape(k, j)
        return n_gj, d_gj

    def min_pairwise_statistic(self, covariate: np.ndarray) -> float:
        """Smallest pairwise statistic over the configured scope; degenerate
        pairs score 0.0."""
        n_gj, d_gj = self.group_counts(covariate)
        worst = np.inf
        for g, h in self._pairs:
            stat = statistic_from_pair_counts(
                n_gj[g - 1], d_gj[g - 1], n_gj[h - 1], d_gj[h - 1], self.weight
            )
            if stat < worst:
                worst = stat
        return float(worst)

    def evaluate(self, covariate: np.ndarray) -> SplitEvaluation:
        """Full evaluation (all pairs + overall) at the fixed cutpoints."""
        n_gj, d_gj = self.group_counts(covariate)
        k = self.k
        pairwise: dict[tuple[int, int], TestResult] = {}
        for g in range(1, k):
            for h in range(g + 1, k + 1):
                stat = statistic_from_pair_counts(
                    n_gj[g - 1], d_gj[g - 1], n_gj[h - 1], d_gj[h - 1], self.weight
                )
                pairwise[(g, h)] = TestResult(stat, 1, chi2_sf(stat, 1))
        worst_pair = min(
            self._pairs, key=lambda gh: (pairwise[gh].statistic, gh)
        )
        stat, rank = k_sample_statistic_from_counts(n_gj, d_gj, self.weight)
        df = max(rank, 1)
        group = np.searchsorted(self.cuts, covariate, side="left")
        sizes = tuple(int(c) for c in np.bincount(group, minlength=k))
        return SplitEvaluation(
            split=SplitSet(tuple(float(c) for c in self.cuts)),
            min_pairwise=pairwise[worst_pair],
            worst_pair=worst_pair,
            overall=TestResult(stat, df, chi2_sf(stat, df)),
            pairwise=pairwise,
            group_sizes=sizes,
        )
