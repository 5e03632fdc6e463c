"""Duel engine: round loop, role alternation, scoring, history visibility.

A duel between two models runs 2R rounds. The first-listed model proposes on
odd turns, the other on even turns, so each proposes exactly R times. Per
round: the proposer is prompted with its history view and must return a
puzzle plus a sample solution; a failed sample (or an unparseable proposal)
forfeits the round to the solver without the solver ever being consulted.
Otherwise the solver sees the puzzle alone; a strict-True verdict draws the
round, anything else scores for the proposer.

Every round enters both players' histories, penalized ones included.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

from . import prompts
from .agents import Agent, AgentError
from .sandbox import ErrorKind, ExecLimits, SandboxVerifier, Verdict, VerdictKind

logger = logging.getLogger(__name__)


class RoundOutcome(str, Enum):
    PROPOSER_POINT = "proposer_point"
    SOLVER_POINT = "solver_point"
    DRAW = "draw"


class DuelResult(str, Enum):
    A_WINS = "a_wins"
    B_WINS = "b_wins"
    DRAW = "draw"


@dataclass(frozen=True)
class RoundRecord:
    index: int  # 1-based turn number
    proposer_id: str
    solver_id: str
    puzzle_source: str
    sample_literal: str
    sample_verdict: Verdict
    solver_literal: Optional[str]
    solver_verdict: Optional[Verdict]
    outcome: RoundOutcome
    proposer_private_text: str

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("round index is 1-based")
        if not self.sample_verdict.is_true:
            ok = (
                self.outcome is RoundOutcome.SOLVER_POINT
                and self.solver_literal is None
                and self.solver_verdict is None
            )
            if not ok:
                raise ValueError("failed sample must forfeit to the solver unconsulted")
        else:
            if self.solver_verdict is None:
                raise ValueError("valid sample requires a solver verdict")
            expected = (
                RoundOutcome.DRAW if self.solver_verdict.is_true else RoundOutcome.PROPOSER_POINT
            )
            if self.outcome is not expected:
                raise ValueError(f"outcome {self.outcome} inconsistent with verdicts")


@dataclass
class DuelLog:
    model_a: str  # proposes round 1
    model_b: str
    rounds_per_side: int
    rounds: List[RoundRecord] = field(default_factory=list)
    score_a: int = 0
    score_b: int = 0
    result: DuelResult = DuelResult.DRAW


@dataclass(frozen=True)
class TournamentPlan:
    models: Tuple[str, ...]
    rounds_per_side: int
    pairings: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        if len(set(self.models)) != len(self.models):
            raise ValueError("duplicate model ids in plan")
        if self.rounds_per_side < 1:
            raise ValueError("rounds_per_side must be at least 1")
        if not self.pairings:
            pairs = tuple(sorted(permutations(self.models, 2)))
            object.__setattr__(self, "pairings", pairs)


def outcome_word(outcome: RoundOutcome) -> str:
    return {
        RoundOutcome.DRAW: prompts.OUTCOME_SOLVED,
        RoundOutcome.PROPOSER_POINT: prompts.OUTCOME_UNSOLVED,
        RoundOutcome.SOLVER_POINT: prompts.OUTCOME_PENALIZED,
    }[outcome]


def build_history_view(viewer_id: str, rounds: Sequence[RoundRecord]) -> prompts.HistoryView:
    """What viewer_id may see of past rounds: never the opponent's sample or
    private text."""
    entries = []
    for r in rounds:
        if r.proposer_id == viewer_id:
            entries.append(
                prompts.HistoryEntry(
                    turn=r.index,
                    viewer_role=prompts.PROPOSER,
                    puzzle_source=r.puzzle_source,
                    own_attempt=r.sample_literal,
                    own_private_text=r.proposer_private_text,
                    outcome=outcome_word(r.outcome),
                )
            )
        else:
            entries.append(
                prompts.HistoryEntry(
                    turn=r.index,
                    viewer_role=prompts.SOLVER,
                    puzzle_source=r.puzzle_source,
                    own_attempt=r.solver_literal,
                    own_private_text=None,
                    outcome=outcome_word(r.outcome),
                )
            )
    return prompts.HistoryView(viewer=viewer_id, entries=tuple(entries))


def _forfeit_verdict(exc: prompts.ResponseFormatError) -> Verdict:
    kind = (
        ErrorKind.VALUE_PARSE
        if isinstance(exc, prompts.NoSolutionLine)
        else ErrorKind.PUZZLE_SYNTAX
    )
    return Verdict(VerdictKind.ERROR, kind, 0, f"{type(exc).__name__}: {exc}")


def _ask(agent: Agent, prompt: str, side: str, turn: int) -> str:
    try:
        return agent.complete(prompt)
    except AgentError as exc:
        logger.warning("turn %d: %s %s failed transport: %s", turn, side, agent.model_id, exc)
        return ""


def play_round(
    index: int,
    proposer: Agent,
    solver: Agent,
    history: Sequence[RoundRecord],
    limits: ExecLimits,
    verifier=None,
) -> RoundRecord:
    verifier = verifier if verifier is not None else _default_verifier()

    view = build_history_view(proposer.model_id, history)
    raw_proposal = _ask(proposer, prompts.render_proposer_prompt(view), "proposer", index)
    try:
        proposal = prompts.parse_proposal(raw_proposal)
    except prompts.ResponseFormatError as exc:
        logger.info("turn %d: %s proposal rejected: %s", index, proposer.model_id, exc)
        return RoundRecord(
            index=index,
            proposer_id=proposer.model_id,
            solver_id=solver.model_id,
            puzzle_source="",
            sample_literal="",
            sample_verdict=_forfeit_verdict(exc),
            solver_literal=None,
            solver_verdict=None,
            outcome=RoundOutcome.SOLVER_POINT,
            proposer_private_text=raw_proposal,
        )

    if any(r.puzzle_source == proposal.puzzle_source for r in history):
        # the prompt forbids repeats but defines no penalty; log only
        logger.info("turn %d: %s repeated a byte-identical puzzle", index, proposer.model_id)

    sample_verdict = verifier.verify_sample(proposal, limits)
    if not sample_verdict.is_true:
        return RoundRecord(
            index=index,
            proposer_id=proposer.model_id,
            solver_id=solver.model_id,
            puzzle_source=proposal.puzzle_source,
            sample_literal=proposal.sample_literal,
            sample_verdict=sample_verdict,
            solver_literal=None,
            solver_verdict=None,
            outcome=RoundOutcome.SOLVER_POINT,
            proposer_private_text=proposal.private_text,
        )

    raw_solution = _ask(solver, prompts.render_solver_prompt(proposal.puzzle_source), "solver", index)
    solver_literal: Optional[str]
    try:
        solver_literal = prompts.parse_solution(raw_solution)
        solver_verdict = verifier.verify(proposal.puzzle_source, solver_literal, limits)
    except prompts.ResponseFormatError as exc:
        logger.info("turn %d: %s solution rejected: %s", index, solver.model_id, exc)
        solver_literal = None
        solver_verdict = Verdict(
            VerdictKind.ERROR, ErrorKind.VALUE_PARSE, 0, f"{type(exc).__name__}: {exc}"
        )

    outcome = RoundOutcome.DRAW if solver_verdict.is_true else RoundOutcome.PROPOSER_POINT
    return RoundRecord(
        index=index,
        proposer_id=proposer.model_id,
        solver_id=solver.model_id,
        puzzle_source=proposal.puzzle_source,
        sample_literal=proposal.sample_literal,
        sample_verdict=sample_verdict,
        solver_literal=solver_literal,
        solver_verdict=solver_verdict,
        outcome=outcome,
        proposer_private_text=proposal.private_text,
    )


def play_duel(
    agent_a: Agent,
    agent_b: Agent,
    rounds_per_side: int,
    limits: ExecLimits,
    verifier=None,
) -> DuelLog:
    if rounds_per_side < 1:
        raise ValueError("rounds_per_side must be at least 1")
    log = DuelLog(agent_a.model_id, agent_b.model_id, rounds_per_side)
    for index in range(1, 2 * rounds_per_side + 1):
        # first-listed model proposes on odd turns
        proposer, solver = (agent_a, agent_b) if index % 2 == 1 else (agent_b, agent_a)
        record = play_round(index, proposer, solver, log.rounds, limits, verifier=verifier)
        log.rounds.append(record)
        if record.outcome is RoundOutcome.DRAW:
            continue
        winner_id = (
            record.proposer_id
            if record.outcome is RoundOutcome.PROPOSER_POINT
            else record.solver_id
        )
        if winner_id == log.model_a:
            log.score_a += 1
        else:
            log.score_b += 1
    if log.score_a > log.score_b:
        log.result = DuelResult.A_WINS
    elif log.score_b > log.score_a:
        log.result = DuelResult.B_WINS
    else:
        log.result = DuelResult.DRAW
    return log


def run_tournament(
    plan: TournamentPlan,
    agents: Dict[str, Agent],
    limits: ExecLimits,
    verifier=None,
    duel_runner=None,
    max_parallel: int = 1,
    skipped: Optional[List[Tuple[str, str, str]]] = None,
) -> List[DuelLog]:
    """One duel per ordered pair, output in pair-lexicographic order.

    duel_runner(agent_a, agent_b) -> DuelLog may be supplied to wrap duels
    (recording, persistence); defaults to play_duel. Parallelism only makes
    sense for stateless (remote) agents; scripted agents carry call counters,
    so keep max_parallel at 1 for reproducible scripted tournaments.
    """
    runner = duel_runner or (
        lambda a, b: play_duel(a, b, plan.rounds_per_side, limits, verifier=verifier)
    )

    runnable = []
    for first, second in plan.pairings:
        missing = [m for m in (first, second) if m not in agents]
        if missing:
            reason = f"no agent for {', '.join(missing)}"
            logger.warning("skipping duel %s vs %s: %s", first, second, reason)
            if skipped is not None:
                skipped.append((first, second, reason))
            continue
        runnable.append((first, second))

    if max_parallel > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            futures = [pool.submit(runner, agents[a], agents[b]) for a, b in runnable]
            return [f.result() for f in futures]
    return [runner(agents[a], agents[b]) for a, b in runnable]


_shared_verifier: Optional[SandboxVerifier] = None


def _default_verifier() -> SandboxVerifier:
    global _shared_verifier
    if _shared_verifier is None:
        _shared_verifier = SandboxVerifier()
    return _shared_verifier
