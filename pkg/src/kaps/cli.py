"""Command-line interface: CSV ingestion, partition fitting and K selection,
Kaplan-Meier curve export, and the batch simulation runner.

Reports go to standard output (or ``--output``); diagnostics go to standard
error. Exit codes: 0 success, 1 I/O or data error, 2 infeasible configuration.
File writes are atomic (temp file + rename). ``KAPS_THREADS`` caps worker
processes in the simulation runner; every run is fully determined by ``--seed``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .selection import (
    Correction,
    KSelectionResult,
    PermutationPlan,
    select_k,
)
from .splitting import InfeasibleSplitError, PairScope, SearchConfig
from .simulation import ModelKind, SimModel, run_experiment, thread_count
from .survival import (
    Cohort,
    KmCurve,
    WeightKind,
    km_fit,
    km_quantile,
    km_survival_at,
)

SIGNIF_LEGEND = "Signif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1"


class CsvError(ValueError):
    """Malformed or unreadable input data."""


def ingest_csv(
    path: str,
    time_col: str = "time",
    status_col: str = "status",
    covariate_col: str = "meta",
) -> Cohort:
    """Read a cohort from a headed CSV file, preserving row order.

    Every malformed row is rejected with its line number; status values must
    be 0 (censored) or 1 (event) and times non-negative numbers.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvError(f"cannot read {path}: {exc.strerror}") from exc
    times: list[float] = []
    events: list[bool] = []
    covariates: list[float] = []
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CsvError(f"{path}: empty file")
        for col in (time_col, status_col, covariate_col):
            if col not in reader.fieldnames:
                raise CsvError(f"{path}: missing column {col!r}")
        for row in reader:
            line = reader.line_num
            raw_time = row.get(time_col)
            raw_status = row.get(status_col)
            raw_cov = row.get(covariate_col)
            if raw_time is None or raw_status is None or raw_cov is None:
                raise CsvError(f"{path}: line {line}: short row")
            try:
                t = float(raw_time)
            except ValueError:
                raise CsvError(
                    f"{path}: line {line}: non-numeric time {raw_time!r}"
                ) from None
            if not math.isfinite(t) or t < 0:
                raise CsvError(f"{path}: line {line}: negative time {raw_time!r}")
            if raw_status.strip() not in ("0", "1"):
                raise CsvError(
                    f"{path}: line {line}: status {raw_status!r} outside {{0,1}}"
                )
            try:
                x = float(raw_cov)
            except ValueError:
                raise CsvError(
                    f"{path}: line {line}: non-numeric covariate {raw_cov!r}"
                ) from None
            if not math.isfinite(x):
                raise CsvError(f"{path}: line {line}: non-finite covariate")
            times.append(t)
            events.append(raw_status.strip() == "1")
            covariates.append(x)
    if not times:
        raise CsvError(f"{path}: empty cohort")
    return Cohort(
        time=np.asarray(times),
        event=np.asarray(events, dtype=bool),
        covariate=np.asarray(covariates),
    )


def _write_output(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt_stat(x: float) -> str:
    return f"{x:.4g}"


def _fmt_p(p: float) -> str:
    return "<.0000" if p < 5e-5 else f"{p:.4f}"


def _stars(p: float) -> str:
    if p <= 0.001:
        return "***"
    if p <= 0.01:
        return "**"
    if p <= 0.05:
        return "*"
    if p <= 0.1:
        return "."
    return ""


def _align_table(rows: list[list[str]], left_cols: set[int]) -> list[str]:
    widths = [
        max(len(row[c]) for row in rows) for c in range(len(rows[0]))
    ]
    out = []
    for row in rows:
        cells = [
            cell.ljust(widths[c]) if c in left_cols else cell.rjust(widths[c])
            for c, cell in enumerate(row)
        ]
        out.append(" ".join(cells).rstrip())
    return out


def _group_labels(cutpoints: Sequence[float], covariate: np.ndarray,
                  name: str) -> list[str]:
    vmin, vmax = covariate.min(), covariate.max()
    edges = [vmin, *cutpoints, vmax]
    labels = [f"{edges[0]:g}<={name}<={edges[1]:g}"]
    for lo, hi in zip(edges[1:-1], edges[2:]):
        labels.append(f"{lo:g}<{name}<={hi:g}")
    return labels


def _parse_k(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ValueError(f"bad K range {text!r}")
        ks = list(range(lo_i, hi_i + 1))
    else:
        ks = [int(text)]
    if any(k < 2 for k in ks):
        raise ValueError("K must be at least 2")
    return ks


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _subgroup_summary(
    cohort: Cohort, cutpoints: Sequence[float], horizons: Sequence[float]
) -> list[dict]:
    groups = np.searchsorted(np.asarray(cutpoints), cohort.covariate,
                             side="left")
    rows = []

    def describe(label: str, sub: Cohort) -> dict:
        curve = km_fit(sub)
        return {
            "group": label,
            "n": sub.n,
            "median": km_quantile(curve, 0.5),
            "survival_at": {
                f"{h:g}": km_survival_at(curve, h) for h in horizons
            },
        }

    rows.append(describe("All", cohort))
    for g in range(len(cutpoints) + 1):
        mask = groups == g
        rows.append(describe(f"Group={g + 1}", cohort.subset(mask)))
    return rows


def _fit_payload(
    cohort: Cohort,
    result: KSelectionResult,
    report_k: int,
    horizons: Sequence[float],
    config_echo: dict,
    seed: int,
) -> dict:
    per_k = []
    for choice in result.per_k:
        best = choice.best
        per_k.append(
            {
                "k": choice.k,
                "cutpoints": list(best.split.cutpoints),
                "overall": {
                    "stat": best.overall.statistic,
                    "df": best.overall.df,
                    "p": best.overall.p_value,
                },
                "min_pairwise": {
                    "stat": best.min_pairwise.statistic,
                    "df": best.min_pairwise.df,
                    "p": best.min_pairwise.p_value,
                    "pair": list(best.worst_pair),
                },
                "perm_p": choice.p_value,
                "perm_p_corrected": choice.p_corrected,
                "exhaustive": best.exhaustive,
            }
        )
    reported = result.choice(report_k).best
    pairwise = [
        {"g": g, "h": h, "p": tr.p_value}
        for (g, h), tr in sorted(reported.pairwise.items())
    ]
    return {
        "selected_k": result.k_hat,
        "per_k": per_k,
        "pairwise": pairwise,
        "summary": _subgroup_summary(cohort, reported.split.cutpoints, horizons),
        "config": config_echo,
        "seed": seed,
    }


def _render_fit_text(
    payload: dict,
    cohort: Cohort,
    covariate_name: str,
    call: str,
) -> str:
    lines = ["Call:", call, "", "\tK-Adaptive Partitioning for Survival Data", ""]
    selected = payload["selected_k"]
    if selected is None:
        lowest = min(entry["k"] for entry in payload["per_k"])
        optimal = f"Optimal K<{lowest}"
    else:
        optimal = f"Optimal K={selected}"
    lines.append(f"Samples= {cohort.n} \t\t\t\t{optimal}")
    lines.append("")
    lines.append("Selecting a set of cut-off points:")
    table = [["", "Xk", "df", "Pr(>|Xk|)", "X1", "df", "Pr(>|X1|)",
              "adj.Pr(|X1|)", "cut-off points", ""]]
    for entry in payload["per_k"]:
        table.append(
            [
                f"K={entry['k']}",
                _fmt_stat(entry["overall"]["stat"]),
                str(entry["overall"]["df"]),
                _fmt_p(entry["overall"]["p"]),
                _fmt_stat(entry["min_pairwise"]["stat"]),
                str(entry["min_pairwise"]["df"]),
                _fmt_p(entry["min_pairwise"]["p"]),
                _fmt_p(entry["perm_p_corrected"]),
                ", ".join(f"{c:g}" for c in entry["cutpoints"]),
                _stars(entry["perm_p_corrected"]),
            ]
        )
    lines.extend(_align_table(table, left_cols={0, 9}))
    lines.append("---")
    lines.append(SIGNIF_LEGEND)
    lines.append("")

    report_k = len(payload["summary"]) - 1
    reported = next(e for e in payload["per_k"] if len(e["cutpoints"]) + 1 == report_k)
    labels = _group_labels(reported["cutpoints"], cohort.covariate,
                           covariate_name)
    pmap = {(cell["g"], cell["h"]): cell["p"] for cell in payload["pairwise"]}
    lines.append("P-values of pairwise comparisons")
    matrix = [[""] + labels[:-1]]
    for h in range(2, report_k + 1):
        row = [labels[h - 1]]
        for g in range(1, report_k):
            row.append(_fmt_p(pmap[(g, h)]) if g < h else "-")
        matrix.append(row)
    lines.extend(_align_table(matrix, left_cols={0}))
    lines.append("")

    lines.append("Subgroup summary")
    horizons = list(payload["summary"][0]["survival_at"])
    table = [["", "N", "Med", *(f"surv.{h}" for h in horizons)]]
    for row in payload["summary"]:
        med = row["median"]
        table.append(
            [
                row["group"],
                str(row["n"]),
                "NA" if med is None else f"{med:g}",
                *(f"{row['survival_at'][h]:.3f}" for h in horizons),
            ]
        )
    lines.extend(_align_table(table, left_cols={0}))
    lines.append("")
    return "\n".join(lines)


def _weight_from_flag(flag: str) -> WeightKind:
    return WeightKind.GEHAN if flag == "gehan" else WeightKind.LOGRANK


def _scope_from_flag(flag: str) -> PairScope:
    return PairScope.ALL_PAIRS if flag == "all" else PairScope.ADJACENT


def _correction_from_flag(flag: str) -> Correction:
    return {
        "paper": Correction.PAPER_DIVIDE,
        "bonferroni": Correction.BONFERRONI_MULTIPLY,
        "none": Correction.NONE,
    }[flag]


def cmd_fit(args: argparse.Namespace) -> int:
    cohort = ingest_csv(args.csv, args.time_col, args.status_col,
                        args.covariate_col)
    ks = _parse_k(args.k)
    min_subgroup = max(1, math.ceil(args.min_frac * cohort.n))
    config = SearchConfig(
        k=ks[0],
        min_subgroup=min_subgroup,
        weight=_weight_from_flag(args.test),
        pair_scope=_scope_from_flag(args.pairs),
    )
    plan = PermutationPlan(
        replications=args.perms,
        seed=args.seed,
        alpha=args.alpha,
        correction=_correction_from_flag(args.correction),
    )
    result = select_k(cohort, ks, plan, config)
    report_k = result.k_hat if result.k_hat is not None else max(
        c.k for c in result.per_k
    )
    horizons = _parse_floats(args.horizons)
    config_echo = {
        "k_values": [c.k for c in result.per_k],
        "min_frac": args.min_frac,
        "min_subgroup": min_subgroup,
        "test": args.test,
        "pairs": args.pairs,
        "perms": args.perms,
        "alpha": args.alpha,
        "correction": args.correction,
        "horizons": horizons,
        "time_col": args.time_col,
        "status_col": args.status_col,
        "covariate_col": args.covariate_col,
    }
    payload = _fit_payload(cohort, result, report_k, horizons, config_echo,
                           args.seed)
    if args.format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        call = "kaps " + " ".join(args.argv_echo)
        text = _render_fit_text(payload, cohort, args.covariate_col, call)
    _write_output(text, args.output)
    return 0


def _curves_rows(
    cohort: Cohort, cutpoints: Sequence[float], covariate_name: str
) -> list[tuple]:
    cuts = np.asarray(cutpoints, dtype=np.float64)
    groups = np.searchsorted(cuts, cohort.covariate, side="left")
    k = cuts.size + 1
    labels = [f"{covariate_name}<={cuts[0]:g}"]
    labels += [
        f"{cuts[i - 1]:g}<{covariate_name}<={cuts[i]:g}" for i in range(1, k - 1)
    ]
    labels.append(f"{covariate_name}>{cuts[-1]:g}")
    rows = []
    for g in range(k):
        mask = groups == g
        if not mask.any():
            raise InfeasibleSplitError(
                f"cutpoints leave subgroup {g + 1} empty"
            )
        sub = cohort.subset(mask)
        curve: KmCurve = km_fit(sub)
        if curve.times.size == 0 or curve.times[0] > 0:
            rows.append((labels[g], 0.0, 1.0, sub.n, 0))
        for t, s, nr, d in zip(curve.times, curve.survival, curve.at_risk,
                               curve.events):
            rows.append((labels[g], float(t), float(s), int(nr), int(d)))
    return rows


def cmd_curves(args: argparse.Namespace) -> int:
    cohort = ingest_csv(args.csv, args.time_col, args.status_col,
                        args.covariate_col)
    if args.cuts:
        cutpoints = _parse_floats(args.cuts)
    elif args.from_fit:
        try:
            with open(args.from_fit, encoding="utf-8") as fh:
                fit = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CsvError(f"cannot read fit JSON {args.from_fit}: {exc}")
        k = fit.get("selected_k") or max(e["k"] for e in fit["per_k"])
        cutpoints = next(e["cutpoints"] for e in fit["per_k"] if e["k"] == k)
    else:
        raise InfeasibleSplitError("either --cuts or --from-fit is required")
    if not cutpoints or sorted(cutpoints) != list(cutpoints):
        raise InfeasibleSplitError("cutpoints must be strictly ascending")
    rows = _curves_rows(cohort, cutpoints, args.covariate_col)
    lines = ["subgroup,time,survival,at_risk,events"]
    for label, t, s, nr, d in rows:
        lines.append(f"{label},{t:g},{s:.10g},{nr},{d}")
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        kind = ModelKind(args.model)
    except ValueError:
        raise InfeasibleSplitError(f"unknown model {args.model!r}") from None
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("kaps", "greedy"):
            raise InfeasibleSplitError(f"unknown method {m!r}")
    k_values = [int(k) for k in args.k_values.split(",")]
    model = SimModel(kind=kind, n=args.n, censoring_rate_target=args.cr,
                     seed=args.seed)
    k_range = _parse_k(args.select_k) if args.select_k else None
    result = run_experiment(
        [model],
        methods=methods,
        reps=args.reps,
        k_values=k_values,
        min_frac=args.min_frac,
        k_range=k_range,
        permutations=args.perms,
        alpha=args.alpha,
        threads=thread_count(),
    )
    if args.out_csv:
        result.to_csv(args.out_csv)
    if args.out_json:
        summary = result.summary_dict()
        summary["config"] = {
            "model": args.model, "n": args.n, "cr": args.cr,
            "reps": args.reps, "methods": methods, "k_values": k_values,
            "min_frac": args.min_frac, "select_k": args.select_k or None,
            "perms": args.perms, "alpha": args.alpha, "seed": args.seed,
        }
        tmp = f"{args.out_json}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, args.out_json)

    lines = [
        f"model={args.model} cr={args.cr:g} n={args.n} reps={args.reps} "
        f"seed={args.seed}"
    ]
    table = [["method", "K", "overall (SE)", "pairwise (SE)", "fail"]]
    for row in result.aggregates():
        if row["mean_overall"] is None:
            cells = ["-", "-"]
        else:
            cells = [
                f"{row['mean_overall']:.2f} ({row['se_overall']:.2f})",
                f"{row['mean_min_pairwise']:.2f} ({row['se_min_pairwise']:.2f})",
            ]
        table.append(
            [row["method"], str(row["k"]), *cells, str(row["n_fail"])]
        )
    lines.extend(_align_table(table, left_cols={0}))
    for model_name, sel in sorted(result.summary_dict()["k_selection"].items()):
        counts = ", ".join(
            f"{k}:{v}" for k, v in sorted(sel["counts"].items())
        )
        lines.append(f"selected K ({model_name}): {counts}")
    _write_output("\n".join(lines) + "\n", None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kaps",
        description="Multi-way partitioning of right-censored survival data "
        "along an ordered prognostic factor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p: argparse.ArgumentParser) -> None:
        p.add_argument("csv", help="input CSV file with a header row")
        p.add_argument("--time-col", default="time")
        p.add_argument("--status-col", default="status")
        p.add_argument("--covariate-col", default="meta")
        p.add_argument("--output", default=None,
                       help="write the report here instead of stdout")

    fit = sub.add_parser("fit", help="find cutpoints and select K")
    add_io(fit)
    fit.add_argument("--k", default="2:4",
                     help="number of subgroups, single ('3') or range ('2:4')")
    fit.add_argument("--min-frac", type=float, default=0.05,
                     help="minimum fraction of records per subgroup")
    fit.add_argument("--test", choices=("logrank", "gehan"), default="logrank")
    fit.add_argument("--pairs", choices=("adjacent", "all"), default="adjacent")
    fit.add_argument("--perms", type=int, default=1000,
                     help="permutation replications per K")
    fit.add_argument("--alpha", type=float, default=0.05)
    fit.add_argument("--correction",
                     choices=("paper", "bonferroni", "none"),
                     default="bonferroni",
                     help="multiplicity correction of the permutation p-value "
                     "('paper' divides by K-1, 'bonferroni' multiplies)")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--horizons", default="1,3,5",
                     help="survival-probability horizons, in input time units")
    fit.add_argument("--format", choices=("text", "json"), default="text")
    fit.set_defaults(func=cmd_fit)

    curves = sub.add_parser("curves", help="export Kaplan-Meier curves per subgroup")
    add_io(curves)
    curves.add_argument("--cuts", default=None,
                        help="comma-separated cutpoints, e.g. '0,10'")
    curves.add_argument("--from-fit", default=None,
                        help="take cutpoints from a fit JSON report")
    curves.set_defaults(func=cmd_curves)

    sim = sub.add_parser("simulate", help="run the train/test simulation study")
    sim.add_argument("--model", default="sm", help="sm or lm")
    sim.add_argument("--n", type=int, default=200)
    sim.add_argument("--cr", type=float, default=0.15,
                     help="target censoring rate")
    sim.add_argument("--reps", type=int, default=100)
    sim.add_argument("--methods", default="kaps,greedy")
    sim.add_argument("--k-values", default="3")
    sim.add_argument("--min-frac", type=float, default=0.10)
    sim.add_argument("--select-k", default=None,
                     help="also run K selection over this range, e.g. '2:6'")
    sim.add_argument("--perms", type=int, default=200,
                     help="permutation replications for K selection")
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out-csv", default=None)
    sim.add_argument("--out-json", default=None)
    sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv_echo = argv
    try:
        return args.func(args)
    except CsvError as exc:
        print(f"kaps: error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleSplitError as exc:
        print(f"kaps: infeasible: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"kaps: invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
