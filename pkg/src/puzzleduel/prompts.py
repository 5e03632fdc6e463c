"""Prompt templates, history rendering, and response parsing.

The two prompt bodies are protocol constants shipped as text assets
(assets/proposer_prompt.txt, assets/solver_prompt.txt). They are not prose
to copyedit; wording, line breaks and trailing spaces are load-bearing for
reproducibility, so they live outside this file and are substituted with
str.replace. str.format is never used here: puzzle sources and histories
routinely contain braces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

PROPOSER = "proposer"
SOLVER = "solver"

# outcome words shown to agents in the history section
OUTCOME_SOLVED = "solved"
OUTCOME_UNSOLVED = "unsolved"
OUTCOME_PENALIZED = "penalized"

EMPTY_HISTORY = "(no previous rounds)"

_PAST_MARKER = "{past}"
_PUZZLE_MARKER = "{puzzle}"

# first fenced block, any info string; closing fence may be at end of text
_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
# prefix semantics within the line, case sensitive; last match wins
_SOLUTION_RE = re.compile(r"^\s*SOLUTION:(.*)$", re.MULTILINE)
_MYSTERY_RE = re.compile(r"^\s*(?:async\s+)?def\s+mystery\s*\(", re.MULTILINE)


class ResponseFormatError(ValueError):
    """Raw agent response does not follow the required format."""


class NoCodeBlock(ResponseFormatError):
    """Proposal contains no fenced code block."""


class NoSolutionLine(ResponseFormatError):
    """Response contains no usable `SOLUTION: <literal>` line."""


class NoMysteryFunction(ResponseFormatError):
    """Proposed code block does not define a `mystery` function."""


@dataclass(frozen=True)
class PromptTemplate:
    """A raw prompt body with its unfilled placeholder."""

    role: str  # PROPOSER or SOLVER
    body: str


@dataclass(frozen=True)
class ParsedProposal:
    """Proposer response split into its three parts."""

    puzzle_source: str
    sample_literal: str
    private_text: str  # the full raw response; only the puzzle ever reaches the opponent


@dataclass(frozen=True)
class HistoryEntry:
    """One past round as seen by one participant."""

    turn: int
    viewer_role: str  # role the viewer played that round
    puzzle_source: str
    own_attempt: str | None  # sample literal or solution literal, if any
    own_private_text: str | None  # only populated for the viewer's own proposals
    outcome: str  # OUTCOME_SOLVED / OUTCOME_UNSOLVED / OUTCOME_PENALIZED


@dataclass(frozen=True)
class HistoryView:
    """Everything one participant may be shown about past rounds."""

    viewer: str
    entries: tuple[HistoryEntry, ...]


def _load_asset(name: str) -> str:
    text = resources.files(__package__).joinpath("assets", name).read_text("utf-8")
    # asset files end with one newline; the template body itself does not
    return text[:-1] if text.endswith("\n") else text


@lru_cache(maxsize=None)
def proposer_template() -> PromptTemplate:
    return PromptTemplate(PROPOSER, _load_asset("proposer_prompt.txt"))


@lru_cache(maxsize=None)
def solver_template() -> PromptTemplate:
    return PromptTemplate(SOLVER, _load_asset("solver_prompt.txt"))


def serialize_history(view: HistoryView) -> str:
    """Render the {past} section. Pure: same view, same bytes."""
    if not view.entries:
        return EMPTY_HISTORY
    parts = []
    for e in view.entries:
        lines = [f"Turn {e.turn} - you were {e.viewer_role}"]
        lines.append("```python")
        lines.append(e.puzzle_source)
        lines.append("```")
        if e.own_attempt is not None:
            lines.append(f"Your attempt: {e.own_attempt}")
        if e.own_private_text:
            lines.append(f"Your notes: {e.own_private_text}")
        lines.append(f"Outcome: {e.outcome}")
        parts.append("\n".join(lines))
    return "\n\n".join(parts)


def render_proposer_prompt(view: HistoryView) -> str:
    return proposer_template().body.replace(_PAST_MARKER, serialize_history(view))


def render_solver_prompt(puzzle_source: str) -> str:
    return solver_template().body.replace(_PUZZLE_MARKER, puzzle_source)


def parse_proposal(raw: str) -> ParsedProposal:
    """Split a proposer response into puzzle, sample literal and private text.

    First fenced block wins; the block must define `mystery`; the last line
    matching ^\\s*SOLUTION: carries the sample literal.
    """
    m = _FENCE_RE.search(raw)
    if m is None:
        raise NoCodeBlock("no fenced code block in proposal")
    puzzle_source = m.group(1)
    if puzzle_source.endswith("\n"):
        puzzle_source = puzzle_source[:-1]
    if _MYSTERY_RE.search(puzzle_source) is None:
        raise NoMysteryFunction("code block does not define mystery()")
    sample_literal = _last_solution_payload(raw)
    # the whole response is proposer-private; the solver sees the puzzle only
    return ParsedProposal(puzzle_source, sample_literal, raw)


def parse_solution(raw: str) -> str:
    """Extract the solver's literal: last SOLUTION: line, payload stripped."""
    return _last_solution_payload(raw)


def _last_solution_payload(raw: str) -> str:
    matches = _SOLUTION_RE.findall(raw)
    if not matches:
        raise NoSolutionLine("no SOLUTION: line in response")
    payload = matches[-1].strip()
    if not payload:
        raise NoSolutionLine("empty payload after SOLUTION:")
    return payload
