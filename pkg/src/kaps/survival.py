"""Core survival statistics: cohorts, Kaplan-Meier curves, weighted log-rank tests.

Everything here is a pure function of immutable inputs; cohorts freeze their
arrays on construction so they can be shared freely across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Iterable, Optional, Sequence

import numpy as np
from scipy.special import chdtrc


class WeightKind(Enum):
    """Weight applied at each distinct event time of a weighted log-rank test."""

    LOGRANK = "logrank"   # weight 1
    GEHAN = "gehan"       # weight = pooled number at risk


class SurvivalRecord(NamedTuple):
    time: float
    event: bool
    covariate: float


class TestResult(NamedTuple):
    statistic: float
    df: int
    p_value: float


def chi2_sf(statistic: float, df: int) -> float:
    """Upper-tail chi-square probability P(X >= statistic) at ``df`` degrees."""
    return float(chdtrc(df, statistic))


@dataclass(frozen=True)
class Cohort:
    """Right-censored sample: observed times, event indicators, ordered covariate."""

    time: np.ndarray
    event: np.ndarray
    covariate: np.ndarray

    def __post_init__(self):
        time = np.asarray(self.time, dtype=np.float64)
        event = np.asarray(self.event, dtype=bool)
        covariate = np.asarray(self.covariate, dtype=np.float64)
        if time.ndim != 1:
            raise ValueError("time must be one-dimensional")
        if time.size == 0:
            raise ValueError("empty cohort")
        if event.shape != time.shape or covariate.shape != time.shape:
            raise ValueError("time, event, covariate must have the same length")
        if not np.all(np.isfinite(time)) or np.any(time < 0):
            raise ValueError("times must be finite and non-negative")
        if not np.all(np.isfinite(covariate)):
            raise ValueError("covariate values must be finite")
        for name, arr in (("time", time), ("event", event), ("covariate", covariate)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_records(cls, records: Iterable[SurvivalRecord | tuple]) -> "Cohort":
        recs = [SurvivalRecord(*r) for r in records]
        if not recs:
            raise ValueError("empty cohort")
        return cls(
            time=np.array([r.time for r in recs], dtype=np.float64),
            event=np.array([r.event for r in recs], dtype=bool),
            covariate=np.array([r.covariate for r in recs], dtype=np.float64),
        )

    @classmethod
    def from_arrays(cls, time, event, covariate=None) -> "Cohort":
        time = np.asarray(time, dtype=np.float64)
        if covariate is None:
            covariate = np.zeros_like(time)
        return cls(time=time, event=event, covariate=covariate)

    @property
    def n(self) -> int:
        return int(self.time.size)

    @property
    def records(self) -> list[SurvivalRecord]:
        return [
            SurvivalRecord(float(t), bool(e), float(x))
            for t, e, x in zip(self.time, self.event, self.covariate)
        ]

    def distinct_covariates(self) -> np.ndarray:
        """Distinct covariate values in ascending order."""
        return np.unique(self.covariate)

    def subset(self, mask: np.ndarray) -> "Cohort":
        return Cohort(self.time[mask], self.event[mask], self.covariate[mask])


@dataclass(frozen=True)
class KmCurve:
    """Product-limit estimate over the distinct event times of a cohort.

    ``survival[j]`` is the curve value just after ``times[j]`` (right-continuous
    step function); before the first event time the curve is 1. A cohort with
    no events yields empty arrays and a curve constant at 1.
    """

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        for name in ("times", "survival", "at_risk", "events"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def event_time_grid(time: np.ndarray, event: np.ndarray) -> np.ndarray:
    """Ascending distinct times at which at least one event occurs."""
    return np.unique(np.asarray(time)[np.asarray(event, dtype=bool)])


def counts_on_grid(
    time: np.ndarray, event: np.ndarray, grid: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """At-risk and event counts of one group on a shared event-time grid.

    At tied event/censoring times the censored records still count as at risk
    (events are processed before censorings).
    """
    time = np.asarray(time, dtype=np.float64)
    event = np.asarray(event, dtype=bool)
    # at_risk[j] = #{Y_i >= grid[j]}
    exits_before = np.searchsorted(np.sort(time), grid, side="left")
    at_risk = time.size - exits_before
    ev_pos = np.searchsorted(grid, time[event])
    events = np.bincount(ev_pos, minlength=grid.size).astype(np.int64)
    return at_risk.astype(np.int64), events


def km_fit(cohort: Cohort) -> KmCurve:
    """Kaplan-Meier product-limit estimate of the survival function."""
    grid = event_time_grid(cohort.time, cohort.event)
    at_risk, events = counts_on_grid(cohort.time, cohort.event, grid)
    with np.errstate(invalid="ignore"):
        factors = 1.0 - events / at_risk
    survival = np.cumprod(factors)
    return KmCurve(times=grid, survival=survival, at_risk=at_risk, events=events)


def km_survival_at(curve: KmCurve, t: float) -> float:
    """Step-function value S(t), right-continuous in t."""
    if t < 0:
        raise ValueError("time must be non-negative")
    idx = int(np.searchsorted(curve.times, t, side="right")) - 1
    if idx < 0:
        return 1.0
    return float(curve.survival[idx])


def km_quantile(curve: KmCurve, q: float) -> Optional[float]:
    """Smallest event time where survival drops to 1-q or below; None if never.

    ``q=0.5`` is the median survival time.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("quantile must be in (0, 1)")
    threshold = 1.0 - q
    hits = np.nonzero(curve.survival <= threshold)[0]
    if hits.size == 0:
        return None
    return float(curve.times[hits[0]])


def _pair_terms(
    n_a: np.ndarray,
    d_a: np.ndarray,
    n_total: np.ndarray,
    d_total: np.ndarray,
    weight: WeightKind,
) -> tuple[float, float]:
    """Weighted observed-minus-expected sum and its variance for one group pair.

    Inputs are integer count vectors on a shared ascending event-time grid for
    the pooled two-group sample. Grid points with no pooled event or fewer than
    two at risk contribute nothing and are dropped *before* summation, so the
    result is bit-identical no matter which enclosing grid the counts came from.
    """
    keep = (d_total > 0) & (n_total > 1)
    n_a = n_a[keep].astype(np.float64)
    d_a = d_a[keep].astype(np.float64)
    n = n_total[keep].astype(np.float64)
    d = d_total[keep].astype(np.float64)
    w = n if weight is WeightKind.GEHAN else np.ones_like(n)
    u = float(np.sum(w * (d_a - n_a * d / n)))
    v = float(np.sum(w * w * (n_a / n) * ((n - n_a) / n) * d * (n - d) / (n - 1.0)))
    return u, v


def statistic_from_pair_counts(
    n_a: np.ndarray,
    d_a: np.ndarray,
    n_b: np.ndarray,
    d_b: np.ndarray,
    weight: WeightKind,
) -> float:
    """Two-sample weighted log-rank chi-square from per-time count vectors.

    Degenerate pairs (no pooled events, or zero variance) score 0.0 so that
    callers embedded in a search never abort.
    """
    u, v = _pair_terms(n_a, d_a, n_a + n_b, d_a + d_b, weight)
    if v <= 0.0:
        return 0.0
    return u * u / v


def two_sample_test(
    group_a: Cohort, group_b: Cohort, weight: WeightKind = WeightKind.LOGRANK
) -> TestResult:
    """Weighted log-rank test comparing two cohorts (chi-square, df=1).

    The statistic is ``(sum_j w_j (O_aj - E_aj))^2 / sum_j w_j^2 V_j`` with E
    and V from the conditional hypergeometric distribution at each distinct
    pooled event time (ties use the multi-event variance).
    """
    pooled_time = np.concatenate([group_a.time, group_b.time])
    pooled_event = np.concatenate([group_a.event, group_b.event])
    if not pooled_event.any():
        raise ValueError("degenerate: no events")
    grid = event_time_grid(pooled_time, pooled_event)
    n_a, d_a = counts_on_grid(group_a.time, group_a.event, grid)
    n_b, d_b = counts_on_grid(group_b.time, group_b.event, grid)
    stat = statistic_from_pair_counts(n_a, d_a, n_b, d_b, weight)
    return TestResult(statistic=stat, df=1, p_value=chi2_sf(stat, 1))


def k_sample_statistic_from_counts(
    n_gj: np.ndarray, d_gj: np.ndarray, weight: WeightKind
) -> tuple[float, int]:
    """K-sample weighted log-rank chi-square from per-group count matrices.

    ``n_gj``/``d_gj`` are (K, J) at-risk/event counts on a shared grid. Returns
    the quadratic form z' V^- z over groups 1..K-1 and the rank of V (0 when V
    vanishes entirely).
    """
    n_total = n_gj.sum(axis=0)
    d_total = d_gj.sum(axis=0)
    keep = (d_total > 0) & (n_total > 1)
    n_g = n_gj[:, keep].astype(np.float64)
    d_g = d_gj[:, keep].astype(np.float64)
    n = n_total[keep].astype(np.float64)
    d = d_total[keep].astype(np.float64)
    k = n_gj.shape[0]
    w = n if weight is WeightKind.GEHAN else np.ones_like(n)

    z = np.array([np.sum(w * (d_g[g] - n_g[g] * d / n)) for g in range(k - 1)])
    # V[g,h] = sum_j w^2 d(n-d)/(n-1) * (n_g/n) (delta_gh - n_h/n)
    scale = w * w * d * (n - d) / (n - 1.0)
    p = n_g / n
    v = np.empty((k - 1, k - 1))
    for g in range(k - 1):
        for h in range(g, k - 1):
            delta = 1.0 if g == h else 0.0
            v[g, h] = v[h, g] = float(np.sum(scale * p[g] * (delta - p[h])))

    rank = int(np.linalg.matrix_rank(v)) if v.size else 0
    if rank == 0:
        return 0.0, 0
    stat = float(z @ np.linalg.pinv(v, hermitian=True) @ z)
    return max(stat, 0.0), rank


def k_sample_test(
    groups: Sequence[Cohort], weight: WeightKind = WeightKind.LOGRANK
) -> TestResult:
    """K-sample weighted log-rank test (chi-square, df = rank of the covariance).

    A singular covariance is handled by the Moore-Penrose generalized inverse.
    """
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    pooled_time = np.concatenate([g.time for g in groups])
    pooled_event = np.concatenate([g.event for g in groups])
    if not pooled_event.any():
        raise ValueError("degenerate: no events")
    grid = event_time_grid(pooled_time, pooled_event)
    n_gj = np.empty((len(groups), grid.size), dtype=np.int64)
    d_gj = np.empty_like(n_gj)
    for g, cohort in enumerate(groups):
        n_gj[g], d_gj[g] = counts_on_grid(cohort.time, cohort.event, grid)
    stat, rank = k_sample_statistic_from_counts(n_gj, d_gj, weight)
    df = max(rank, 1)
    return TestResult(statistic=stat, df=df, p_value=chi2_sf(stat, df))
