"""Post-hoc analysis over duel logs.

Role win rates and proposer failure-mode classes, per-turn outcome tables,
rank correlation of harness metrics against external benchmark columns, and
the puzzle mining / regrading pipeline.

The Spearman implementation is deliberately hand-rolled: ranks are small
exact floats (integers and halves), so perfect orderings come out at exactly
+-1.0 instead of 1 - 1e-16, and tie handling (average ranks) is explicit.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from scipy import stats as _scipy_stats

from . import prompts
from .agents import Agent, AgentError
from .engine import DuelLog, RoundOutcome, RoundRecord
from .sandbox import ExecLimits, Verdict

logger = logging.getLogger(__name__)


class ConstantInput(ValueError):
    """Correlation is undefined when one vector has a single distinct value."""


class DegenerateX(ValueError):
    """Trend is undefined when all x coincide."""


# ---------------------------------------------------------------------------
# role statistics

class ProposerClass(str, Enum):
    SOLVED = "solved"
    UNSOLVED = "unsolved"
    PENALTY = "penalty"


@dataclass
class RoleStats:
    model_id: str
    solver_successes: int = 0  # includes trivial wins from failed samples
    solver_failures: int = 0  # only possible on valid puzzles
    solver_trivial_wins: int = 0  # subset of successes: opponent sample failed
    proposer_solved: int = 0
    proposer_unsolved: int = 0
    proposer_penalized: int = 0

    @property
    def solver_rounds(self) -> int:
        return self.solver_successes + self.solver_failures

    @property
    def proposer_rounds(self) -> int:
        return self.proposer_solved + self.proposer_unsolved + self.proposer_penalized

    @property
    def solver_win_rate(self) -> float:
        return self.solver_successes / self.solver_rounds if self.solver_rounds else 0.0

    @property
    def proposer_win_rate(self) -> float:
        return self.proposer_unsolved / self.proposer_rounds if self.proposer_rounds else 0.0


def classify_proposer_round(record: RoundRecord) -> ProposerClass:
    if not record.sample_verdict.is_true:
        return ProposerClass.PENALTY
    if record.outcome is RoundOutcome.PROPOSER_POINT:
        return ProposerClass.UNSOLVED
    return ProposerClass.SOLVED


def role_stats(logs: Iterable[DuelLog]) -> List[RoleStats]:
    """Per-model round counts over all duels, sorted by model id."""
    table: Dict[str, RoleStats] = {}

    def entry(model_id: str) -> RoleStats:
        if model_id not in table:
            table[model_id] = RoleStats(model_id)
        return table[model_id]

    for log in logs:
        for r in log.rounds:
            proposer = entry(r.proposer_id)
            solver = entry(r.solver_id)
            cls = classify_proposer_round(r)
            if cls is ProposerClass.PENALTY:
                proposer.proposer_penalized += 1
                solver.solver_successes += 1  # trivial victory
                solver.solver_trivial_wins += 1
            elif cls is ProposerClass.SOLVED:
                proposer.proposer_solved += 1
                solver.solver_successes += 1
            else:
                proposer.proposer_unsolved += 1
                solver.solver_failures += 1
    return [table[m] for m in sorted(table)]


# ---------------------------------------------------------------------------
# per-turn outcomes and trends

@dataclass(frozen=True)
class TurnRow:
    turn: int
    solved: int
    unsolved: int
    penalty: int

    @property
    def total(self) -> int:
        return self.solved + self.unsolved + self.penalty

    @property
    def penalty_pct(self) -> float:
        return 100.0 * self.penalty / self.total if self.total else 0.0


def per_turn_table(logs: Iterable[DuelLog]) -> List[TurnRow]:
    counts: Dict[int, List[int]] = {}
    for log in logs:
        for r in log.rounds:
            row = counts.setdefault(r.index, [0, 0, 0])
            cls = classify_proposer_round(r)
            if cls is ProposerClass.SOLVED:
                row[0] += 1
            elif cls is ProposerClass.UNSOLVED:
                row[1] += 1
            else:
                row[2] += 1
    return [TurnRow(turn, *counts[turn]) for turn in sorted(counts)]


def linear_trend(points: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    """Ordinary least squares (slope, intercept), exact on clean inputs."""
    if len(points) < 2:
        raise DegenerateX("need at least two points")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0.0:
        raise DegenerateX("all x values coincide")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x


# ---------------------------------------------------------------------------
# rank correlation

def average_ranks(values: Sequence[float]) -> List[float]:
    """1-based ranks; ties share the average of their positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _pearson_on_ranks(rx: Sequence[float], ry: Sequence[float]) -> float:
    n = len(rx)
    mean_x = sum(rx) / n
    mean_y = sum(ry) / n
    dx = [x - mean_x for x in rx]
    dy = [y - mean_y for y in ry]
    sxx = sum(d * d for d in dx)
    syy = sum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("constant input vector")
    # single sqrt of the product keeps perfect orderings at exactly +-1.0
    return sum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)


def spearman(
    xs: Sequence[float], ys: Sequence[float], method: str = "t-approx"
) -> Tuple[float, float]:
    """Tie-aware Spearman rho with a two-sided p-value.

    method: "t-approx" (default) or "permutation" (exact, n <= 8 only).
    """
    if len(xs) != len(ys):
        raise ValueError("input vectors differ in length")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least three observations")
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    rho = _pearson_on_ranks(rx, ry)

    if method == "permutation":
        if n > 8:
            raise ValueError("exact permutation p only supported for n <= 8")
        from itertools import permutations

        hits = 0
        total = 0
        target = abs(rho) - 1e-12
        for perm in permutations(ry):
            total += 1
            if abs(_pearson_on_ranks(rx, perm)) >= target:
                hits += 1
        return rho, hits / total
    if method != "t-approx":
        raise ValueError(f"unknown p-value method {method!r}")

    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 2))
    return rho, min(p, 1.0)


@dataclass(frozen=True)
class BenchmarkColumn:
    name: str
    scores: Mapping[str, float]


def load_benchmark_csv(path, name: Optional[str] = None) -> BenchmarkColumn:
    """Read a model_id,score CSV; '#' lines are provenance comments."""
    scores: Dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        rows = csv.reader(line for line in handle if not line.lstrip().startswith("#"))
        for row in rows:
            if not row or (row[0].strip(), *(c.strip() for c in row[1:])) == ("model_id", "score"):
                continue
            scores[row[0].strip()] = float(row[1])
    if name is None:
        import os

        name = os.path.splitext(os.path.basename(str(path)))[0]
    return BenchmarkColumn(name, scores)


def correlate(
    metric: Mapping[str, float],
    benchmark: BenchmarkColumn,
    exclude: Sequence[str] = (),
    method: str = "t-approx",
) -> Tuple[float, float]:
    """Spearman of a per-model metric against a benchmark column."""
    models = sorted(m for m in metric if m not in set(exclude))
    missing = [m for m in models if m not in benchmark.scores]
    if missing:
        raise KeyError(f"benchmark {benchmark.name} lacks scores for: {', '.join(missing)}")
    xs = [metric[m] for m in models]
    ys = [benchmark.scores[m] for m in models]
    return spearman(xs, ys, method=method)


# ---------------------------------------------------------------------------
# puzzle mining and regrading

@dataclass(frozen=True)
class MinedPuzzle:
    puzzle_source: str
    duel_id: str
    turn: int
    proposer_id: str
    sample_literal: str
    sample_verdict: Verdict
    tags: Tuple[str, ...] = ()

    @property
    def is_valid(self) -> bool:
        return self.sample_verdict.is_true


def mine_puzzles(
    logs: Sequence[DuelLog], duel_ids: Optional[Sequence[str]] = None
) -> List[MinedPuzzle]:
    """Every proposed puzzle, deduplicated byte-identically within a duel.

    Rounds whose proposal never parsed carry no puzzle and are skipped.
    """
    if duel_ids is not None and len(duel_ids) != len(logs):
        raise ValueError("duel_ids must parallel logs")
    mined: List[MinedPuzzle] = []
    for i, log in enumerate(logs):
        duel_id = duel_ids[i] if duel_ids is not None else f"{log.model_a}__{log.model_b}"
        seen: set = set()
        for r in log.rounds:
            if not r.puzzle_source or r.puzzle_source in seen:
                continue
            seen.add(r.puzzle_source)
            mined.append(
                MinedPuzzle(
                    puzzle_source=r.puzzle_source,
                    duel_id=duel_id,
                    turn=r.index,
                    proposer_id=r.proposer_id,
                    sample_literal=r.sample_literal,
                    sample_verdict=r.sample_verdict,
                )
            )
    return mined


def valid_corpus(mined: Iterable[MinedPuzzle]) -> List[MinedPuzzle]:
    return [p for p in mined if p.is_valid]


@dataclass
class RegradeRow:
    proposer_id: str
    attempted: int = 0
    solved: Dict[str, int] = field(default_factory=dict)  # grader id -> count


@dataclass(frozen=True)
class RegradeTable:
    rows: Tuple[RegradeRow, ...]
    notes: Tuple[str, ...] = ()  # transport failures, recorded not raised


def regrade(
    corpus: Sequence[MinedPuzzle],
    graders: Sequence[Agent],
    limits: ExecLimits,
    verifier,
) -> RegradeTable:
    """Each grader gets each valid puzzle as a bare solver prompt.

    No history, no duel context; solved means the sandbox verdict is True.
    """
    invalid = [p for p in corpus if not p.is_valid]
    if invalid:
        raise ValueError(f"corpus contains {len(invalid)} invalid puzzles; regrade valid only")

    rows: Dict[str, RegradeRow] = {}
    notes: List[str] = []
    for puzzle in corpus:
        row = rows.setdefault(puzzle.proposer_id, RegradeRow(puzzle.proposer_id))
        row.attempted += 1
        prompt = prompts.render_solver_prompt(puzzle.puzzle_source)
        for grader in graders:
            row.solved.setdefault(grader.model_id, 0)
            try:
                raw = grader.complete(prompt)
            except AgentError as exc:
                notes.append(
                    f"{grader.model_id} on {puzzle.duel_id} turn {puzzle.turn}: {exc}"
                )
                continue
            try:
                literal = prompts.parse_solution(raw)
            except prompts.ResponseFormatError:
                continue
            if verifier.verify(puzzle.puzzle_source, literal, limits).is_true:
                row.solved[grader.model_id] += 1
    ordered = tuple(rows[p] for p in sorted(rows))
    return RegradeTable(ordered, tuple(notes))
