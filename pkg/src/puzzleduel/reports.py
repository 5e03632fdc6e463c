"""Deterministic CSV/Markdown emission of the analysis tables.

Everything here is formatting: fixed column orders, fixed float formats,
models sorted deterministically. Given equal inputs the emitted bytes are
equal, which the pipeline determinism checks rely on.
"""

from __future__ import annotations

import csv
import io
import os
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .analytics import (
    BenchmarkColumn,
    RegradeTable,
    RoleStats,
    TurnRow,
    correlate,
    per_turn_table,
    role_stats,
)
from .engine import DuelLog
from .rating import RatingTable


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}f}"


def _write(path: str, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    return path


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |"]
    lines.append("|" + "|".join(" --- " for _ in header) + "|")
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines)


def rank_descending(values: Mapping[str, float]) -> Dict[str, int]:
    """Display ranks, 1 = highest value; ties broken by model id."""
    ordered = sorted(values, key=lambda m: (-values[m], m))
    return {m: i + 1 for i, m in enumerate(ordered)}


def competition_ranks(values: Mapping[str, float]) -> Dict[str, int]:
    """Display ranks where equal values share the smallest rank (1224 style).

    Used for the rounded percentage columns; elo keeps distinct ranks since
    the unrounded values behind a displayed tie still order the models.
    """
    ordered = sorted(values, key=lambda m: (-values[m], m))
    ranks: Dict[str, int] = {}
    for i, m in enumerate(ordered):
        if i > 0 and values[m] == values[ordered[i - 1]]:
            ranks[m] = ranks[ordered[i - 1]]
        else:
            ranks[m] = i + 1
    return ranks


def ratings_rows(table: RatingTable) -> List[Tuple[str, str]]:
    ordered = sorted(table.ratings, key=lambda m: (-table.ratings[m], m))
    return [(m, _fmt(table.ratings[m], 2)) for m in ordered]


def summary_rows(
    table: RatingTable,
    stats: Sequence[RoleStats],
    benchmarks: Sequence[BenchmarkColumn] = (),
) -> Tuple[List[str], List[List[str]]]:
    """Leaderboard: Elo plus role win percentages, each with a rank column."""
    by_id = {s.model_id: s for s in stats}
    models = sorted(table.ratings, key=lambda m: (-table.ratings[m], m))
    # ranks annotate the displayed one-decimal values, so tie on those
    solv = {m: round(100.0 * by_id[m].solver_win_rate, 1) for m in models if m in by_id}
    prop = {m: round(100.0 * by_id[m].proposer_win_rate, 1) for m in models if m in by_id}
    elo_rank = rank_descending(table.ratings)
    solv_rank = competition_ranks(solv)
    prop_rank = competition_ranks(prop)

    header = ["model", "elo", "rk", "solv_pct", "rk", "prop_pct", "rk"]
    bench_ranks = []
    for bench in benchmarks:
        header += [f"{bench.name}_pct", "rk"]
        covered = {m: round(bench.scores[m], 1) for m in models if m in bench.scores}
        bench_ranks.append((bench, competition_ranks(covered)))

    rows = []
    for m in models:
        row = [
            m,
            _fmt(table.ratings[m], 0),
            str(elo_rank[m]),
            _fmt(solv.get(m, 0.0), 1),
            str(solv_rank.get(m, 0)),
            _fmt(prop.get(m, 0.0), 1),
            str(prop_rank.get(m, 0)),
        ]
        for bench, ranks in bench_ranks:
            if m in bench.scores:
                row += [_fmt(bench.scores[m], 1), str(ranks[m])]
            else:
                row += ["", ""]
        rows.append(row)
    return header, rows


def role_stats_rows(stats: Sequence[RoleStats]) -> Tuple[List[str], List[List[str]]]:
    """Combined-table style: valid-puzzle solver rates, proposer classes."""
    header = [
        "model",
        "solver_solved",
        "solver_failed",
        "solver_valid_pct",
        "solver_trivial_wins",
        "proposer_solved",
        "proposer_unsolved",
        "proposer_penalized",
        "proposer_unsolved_pct",
    ]
    rows = []
    for s in stats:
        solved = s.solver_successes - s.solver_trivial_wins  # valid puzzles only
        faced = solved + s.solver_failures
        rows.append(
            [
                s.model_id,
                str(solved),
                str(s.solver_failures),
                _fmt(100.0 * solved / faced if faced else 0.0, 1),
                str(s.solver_trivial_wins),
                str(s.proposer_solved),
                str(s.proposer_unsolved),
                str(s.proposer_penalized),
                _fmt(100.0 * s.proposer_win_rate, 1),
            ]
        )
    return header, rows


def per_turn_rows(rows: Sequence[TurnRow]) -> Tuple[List[str], List[List[str]]]:
    header = ["turn", "solved", "unsolved", "penalty", "penalty_pct"]
    return header, [
        [str(r.turn), str(r.solved), str(r.unsolved), str(r.penalty), _fmt(r.penalty_pct, 1)]
        for r in rows
    ]


def correlation_rows(
    metrics: Mapping[str, Mapping[str, float]],
    benchmarks: Sequence[BenchmarkColumn],
    exclude: Sequence[str] = (),
) -> Tuple[List[str], List[List[str]]]:
    """Spearman of each metric column against each benchmark column.

    One row per (metric, benchmark, scope); scopes are the full model set and,
    per excluded model, the set without it.
    """
    header = ["metric", "benchmark", "scope", "n", "rho", "p"]
    scopes: List[Tuple[str, Tuple[str, ...]]] = [("all", ())]
    for model in exclude:
        scopes.append((f"excl:{model}", (model,)))
    rows = []
    for metric_name in sorted(metrics):
        metric = metrics[metric_name]
        for bench in benchmarks:
            for scope_name, dropped in scopes:
                rho, p = correlate(metric, bench, exclude=dropped)
                n = len([m for m in metric if m not in set(dropped)])
                rows.append(
                    [metric_name, bench.name, scope_name, str(n), _fmt(rho, 4), _fmt(p, 6)]
                )
    return header, rows


def failure_mode_rows(stats: Sequence[RoleStats]) -> Tuple[List[str], List[List[str]]]:
    """Proposer outcome split per model; chart-ready counts."""
    header = ["model", "solved", "unsolved", "penalized"]
    return header, [
        [s.model_id, str(s.proposer_solved), str(s.proposer_unsolved), str(s.proposer_penalized)]
        for s in stats
    ]


def regrade_rows(table: RegradeTable) -> Tuple[List[str], List[List[str]]]:
    graders = sorted({g for row in table.rows for g in row.solved})
    header = ["proposer", "attempted"] + [f"solved_by_{g}" for g in graders]
    rows = []
    for row in table.rows:
        rows.append(
            [row.proposer_id, str(row.attempted)] + [str(row.solved.get(g, 0)) for g in graders]
        )
    return header, rows


def emit_report(
    out_dir: str,
    logs: Sequence[DuelLog],
    table: RatingTable,
    benchmarks: Sequence[BenchmarkColumn] = (),
    exclude: Sequence[str] = (),
) -> List[str]:
    """Write every table as CSV plus a single combined Markdown report."""
    os.makedirs(out_dir, exist_ok=True)
    stats = role_stats(logs)
    turns = per_turn_table(logs)

    written = []
    sections: List[Tuple[str, List[str], List[List[str]]]] = []

    header = ["model", "elo"]
    rows = [list(r) for r in ratings_rows(table)]
    written.append(_write(os.path.join(out_dir, "ratings.csv"), _csv_text(header, rows)))
    sections.append(("Ratings", header, rows))

    header, rows = summary_rows(table, stats, benchmarks)
    written.append(_write(os.path.join(out_dir, "summary.csv"), _csv_text(header, rows)))
    sections.append(("Leaderboard", header, rows))

    header, rows = role_stats_rows(stats)
    written.append(_write(os.path.join(out_dir, "role_stats.csv"), _csv_text(header, rows)))
    sections.append(("Role outcomes", header, rows))

    header, rows = per_turn_rows(turns)
    written.append(_write(os.path.join(out_dir, "per_turn.csv"), _csv_text(header, rows)))
    sections.append(("Outcomes by turn", header, rows))

    header, rows = failure_mode_rows(stats)
    written.append(_write(os.path.join(out_dir, "failure_modes.csv"), _csv_text(header, rows)))
    sections.append(("Proposer failure modes", header, rows))

    if benchmarks:
        header, rows = correlation_rows(
            {
                "elo": dict(table.ratings),
                "solver_win_pct": {s.model_id: 100.0 * s.solver_win_rate for s in stats},
                "proposer_win_pct": {s.model_id: 100.0 * s.proposer_win_rate for s in stats},
            },
            benchmarks,
            exclude,
        )
        written.append(
            _write(os.path.join(out_dir, "correlations.csv"), _csv_text(header, rows))
        )
        sections.append(("Benchmark correlations", header, rows))

    md = ["# Duel report", ""]
    diag = table.diagnostics
    md.append(
        f"{len(logs)} duels; anchor {table.anchor_id} at {_fmt(table.anchor_value, 0)}; "
        f"fit {'converged' if diag.converged else 'hit iteration cap'} "
        f"after {diag.iterations} iterations (grad norm {diag.grad_norm:.3g})."
    )
    if diag.degenerate:
        md.append("")
        md.append(
            "Degenerate records (only wins or only losses): "
            + ", ".join(diag.degenerate_models)
        )
    for title, header, rows in sections:
        md += ["", f"## {title}", "", _md_table(header, rows)]
    md.append("")
    written.append(_write(os.path.join(out_dir, "report.md"), "\n".join(md)))
    return written
