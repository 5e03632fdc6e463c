"""Self-play code-puzzle duels with verifiable outcomes and Elo ratings."""

from .agents import (
    Agent,
    AgentError,
    AgentProfile,
    RecordingAgent,
    RemoteAgent,
    ReplayAgent,
    ReplayMismatch,
    ScriptedAgent,
    build_agent,
    scripted_preset,
    validate_roster,
)
from .engine import (
    DuelLog,
    DuelResult,
    RoundOutcome,
    RoundRecord,
    TournamentPlan,
    play_duel,
    play_round,
    run_tournament,
)
from .prompts import (
    HistoryEntry,
    HistoryView,
    NoCodeBlock,
    NoMysteryFunction,
    NoSolutionLine,
    ParsedProposal,
    ResponseFormatError,
    parse_proposal,
    parse_solution,
    render_proposer_prompt,
    render_solver_prompt,
    serialize_history,
)
from .rating import (
    MatchAggregate,
    RatingTable,
    aggregate_duels,
    fit,
    nll,
    nll_gradient,
    win_prob,
)
from .sandbox import (
    DEFAULT_ALLOWLIST,
    ErrorKind,
    ExecLimits,
    SandboxVerifier,
    Verdict,
    VerdictKind,
)
from .store import (
    ConfigError,
    StoredDuel,
    TournamentConfig,
    load_config,
    load_duels,
    normalized_duel_log,
    replay_duel,
    run_and_store_duel,
    save_duel,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentError",
    "AgentProfile",
    "ConfigError",
    "DEFAULT_ALLOWLIST",
    "DuelLog",
    "DuelResult",
    "ErrorKind",
    "ExecLimits",
    "HistoryEntry",
    "HistoryView",
    "MatchAggregate",
    "NoCodeBlock",
    "NoMysteryFunction",
    "NoSolutionLine",
    "ParsedProposal",
    "RatingTable",
    "RecordingAgent",
    "RemoteAgent",
    "ReplayAgent",
    "ReplayMismatch",
    "ResponseFormatError",
    "RoundOutcome",
    "RoundRecord",
    "SandboxVerifier",
    "ScriptedAgent",
    "StoredDuel",
    "TournamentConfig",
    "TournamentPlan",
    "Verdict",
    "VerdictKind",
    "aggregate_duels",
    "build_agent",
    "fit",
    "load_config",
    "load_duels",
    "nll",
    "nll_gradient",
    "normalized_duel_log",
    "parse_proposal",
    "parse_solution",
    "play_duel",
    "play_round",
    "render_proposer_prompt",
    "render_solver_prompt",
    "replay_duel",
    "run_and_store_duel",
    "run_tournament",
    "save_duel",
    "scripted_preset",
    "serialize_history",
    "validate_roster",
    "win_prob",
]
