"""Bradley-Terry ratings on the Elo scale, fitted from duel outcomes.

Model: P(A beats B) = 1 / (1 + 10^((E_B - E_A)/sigma)) with sigma = 400.
Draws count as half a win for each side. The fit minimizes the negative
log-likelihood of duel-level outcomes by plain full-batch gradient descent
with one pinned anchor rating (the additive gauge freedom has to go
somewhere; the lexicographically smallest model id sits at exactly 1000).

Pure MLE, no regularization: a model with only wins or only losses has an
unbounded maximizer, which is reported via the DegenerateData flag rather
than papered over with a prior.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .engine import DuelLog, DuelResult

logger = logging.getLogger(__name__)

SIGMA = 400.0
ANCHOR_VALUE = 1000.0

MAX_ITERATIONS = 50000
GRAD_TOLERANCE = 1e-8
INITIAL_LEARNING_RATE = 1.0  # Elo points per unit gradient


@dataclass(frozen=True)
class MatchAggregate:
    """Win/loss/draw counts for one unordered pair (a is the smaller id)."""

    model_a: str
    model_b: str
    wins_ab: int  # duels model_a won
    losses_ab: int  # duels model_b won
    draws_ab: int

    def __post_init__(self):
        if self.model_a >= self.model_b:
            raise ValueError("pair must be ordered with model_a < model_b")
        if min(self.wins_ab, self.losses_ab, self.draws_ab) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def effective_wins(self) -> float:
        return self.wins_ab + self.draws_ab / 2.0

    @property
    def effective_losses(self) -> float:
        return self.losses_ab + self.draws_ab / 2.0

    @property
    def total(self) -> int:
        return self.wins_ab + self.losses_ab + self.draws_ab


@dataclass(frozen=True)
class FitDiagnostics:
    iterations: int
    grad_norm: float
    converged: bool
    degenerate: bool
    degenerate_models: Tuple[str, ...] = ()


@dataclass(frozen=True)
class RatingTable:
    ratings: Dict[str, float]
    sigma: float
    anchor_id: str
    anchor_value: float
    diagnostics: FitDiagnostics


def win_prob(e_a: float, e_b: float, sigma: float = SIGMA) -> float:
    """Logistic closed form, base 10; exactly 0.5 at equal ratings."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 1.0 / (1.0 + 10.0 ** ((e_b - e_a) / sigma))


def aggregate_duels(logs: Iterable[DuelLog]) -> List[MatchAggregate]:
    """Collapse duel logs to per-unordered-pair counts (both orderings merged)."""
    counts: Dict[Tuple[str, str], List[int]] = {}
    for log in logs:
        lo, hi = sorted((log.model_a, log.model_b))
        row = counts.setdefault((lo, hi), [0, 0, 0])
        if log.result is DuelResult.DRAW:
            row[2] += 1
        else:
            winner = log.model_a if log.result is DuelResult.A_WINS else log.model_b
            row[0 if winner == lo else 1] += 1
    return [
        MatchAggregate(a, b, w, l, d) for (a, b), (w, l, d) in sorted(counts.items())
    ]


def _model_index(aggregates: Sequence[MatchAggregate]) -> Dict[str, int]:
    models = sorted({m for agg in aggregates for m in (agg.model_a, agg.model_b)})
    return {m: i for i, m in enumerate(models)}


def _pack(aggregates, index):
    ia = np.array([index[a.model_a] for a in aggregates], dtype=np.intp)
    ib = np.array([index[a.model_b] for a in aggregates], dtype=np.intp)
    wins = np.array([a.effective_wins for a in aggregates], dtype=np.float64)
    losses = np.array([a.effective_losses for a in aggregates], dtype=np.float64)
    return ia, ib, wins, losses


def _nll_vec(e, ia, ib, wins, losses, k):
    c = k * (e[ia] - e[ib])  # log-odds of a beating b
    return float(np.sum(wins * np.logaddexp(0.0, -c) + losses * np.logaddexp(0.0, c)))


def _grad_vec(e, ia, ib, wins, losses, k):
    c = k * (e[ia] - e[ib])
    p = expit(c)
    per_pair = k * (p * (wins + losses) - wins)
    g = np.zeros_like(e)
    np.add.at(g, ia, per_pair)
    np.add.at(g, ib, -per_pair)
    return g


def nll(ratings: Mapping[str, float], aggregates: Sequence[MatchAggregate], sigma: float = SIGMA) -> float:
    if not aggregates:
        return 0.0
    index = _model_index(aggregates)
    e = np.array([ratings[m] for m in index], dtype=np.float64)
    return _nll_vec(e, *_pack(aggregates, index), math.log(10.0) / sigma)


def nll_gradient(
    ratings: Mapping[str, float], aggregates: Sequence[MatchAggregate], sigma: float = SIGMA
) -> Dict[str, float]:
    """Analytic d nll / d rating per model (checked against finite differences)."""
    index = _model_index(aggregates)
    e = np.array([ratings[m] for m in index], dtype=np.float64)
    g = _grad_vec(e, *_pack(aggregates, index), math.log(10.0) / sigma)
    return {m: float(g[i]) for m, i in index.items()}


def degenerate_models(aggregates: Sequence[MatchAggregate]) -> Tuple[str, ...]:
    """Models whose MLE is unbounded: zero effective wins or losses overall."""
    wins: Dict[str, float] = {}
    losses: Dict[str, float] = {}
    for agg in aggregates:
        wins[agg.model_a] = wins.get(agg.model_a, 0.0) + agg.effective_wins
        losses[agg.model_a] = losses.get(agg.model_a, 0.0) + agg.effective_losses
        wins[agg.model_b] = wins.get(agg.model_b, 0.0) + agg.effective_losses
        losses[agg.model_b] = losses.get(agg.model_b, 0.0) + agg.effective_wins
    return tuple(sorted(m for m in wins if wins[m] == 0.0 or losses[m] == 0.0))


def fit(
    aggregates: Sequence[MatchAggregate],
    sigma: float = SIGMA,
    max_iterations: int = MAX_ITERATIONS,
    tolerance: float = GRAD_TOLERANCE,
    learning_rate: float = INITIAL_LEARNING_RATE,
) -> RatingTable:
    """Full-batch gradient descent; deterministic for identical aggregates."""
    index = _model_index(aggregates)
    if len(index) < 2:
        raise ValueError("fit needs aggregates referencing at least two models")
    models = list(index)
    anchor = models[0]  # sorted, so lexicographically smallest
    anchor_i = index[anchor]

    bad = degenerate_models(aggregates)
    if bad:
        logger.warning("degenerate aggregates (one-sided records): %s", ", ".join(bad))

    k = math.log(10.0) / sigma
    packed = _pack(aggregates, index)
    e = np.full(len(models), ANCHOR_VALUE, dtype=np.float64)
    current = _nll_vec(e, *packed, k)
    lr = learning_rate
    grad_norm = math.inf
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        g = _grad_vec(e, *packed, k)
        g[anchor_i] = 0.0  # anchor is pinned, not optimized
        grad_norm = float(np.max(np.abs(g))) if len(g) else 0.0
        if grad_norm < tolerance:
            converged = True
            iterations -= 1  # this pass took no step
            break
        candidate = e - lr * g
        value = _nll_vec(candidate, *packed, k)
        if value > current:
            lr *= 0.5  # step rejected
            continue
        e = candidate
        current = value

    ratings = {m: float(e[index[m]]) for m in models}
    ratings[anchor] = ANCHOR_VALUE  # exact by construction; assert the gauge
    diagnostics = FitDiagnostics(
        iterations=iterations,
        grad_norm=grad_norm,
        converged=converged,
        degenerate=bool(bad),
        degenerate_models=bad,
    )
    if not converged:
        logger.info(
            "fit stopped at %d iterations, grad inf-norm %.3g", iterations, grad_norm
        )
    return RatingTable(ratings, sigma, anchor, ANCHOR_VALUE, diagnostics)
