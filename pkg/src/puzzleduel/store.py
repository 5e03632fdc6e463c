"""Configuration and persistence: TOML config, JSON duel logs, replay.

One JSON document per duel in a flat directory, plus an index file listing
duel ids. The stored record keeps every raw agent response in call order
(tagged proposer/solver) so a duel can be replayed through ReplayAgents and
reproduce the identical DuelLog, timing fields aside. Raw responses include
the proposer's private reasoning; a per-response redaction flag supports
publishing logs without it.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

try:
    import tomllib  # py311+
except ModuleNotFoundError:
    import tomli as tomllib

from .agents import Agent, AgentProfile, RecordingAgent, ReplayAgent
from .engine import DuelLog, DuelResult, RoundOutcome, RoundRecord, play_duel
from .sandbox import DEFAULT_ALLOWLIST, ExecLimits, Verdict

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
INDEX_FILENAME = "index.json"


class ConfigError(ValueError):
    """Configuration file is missing, unparseable, or inconsistent."""


class SchemaMismatch(ValueError):
    """Stored record was written by an incompatible schema version."""


class CorruptRecord(ValueError):
    """Stored record cannot be decoded into a StoredDuel."""


@dataclass(frozen=True)
class TournamentConfig:
    roster: Tuple[AgentProfile, ...]
    rounds_per_side: int = 5
    limits: ExecLimits = field(default_factory=ExecLimits)
    max_parallel_duels: int = 1
    max_workers: int = 4
    out_dir: str = "duel_logs"
    seed: int = 0  # consumed by scripted agents only

    def __post_init__(self):
        if self.rounds_per_side < 1:
            raise ConfigError("rounds_per_side must be at least 1")
        ids = [p.id for p in self.roster]
        if len(set(ids)) != len(ids):
            raise ConfigError("roster ids must be unique")

    def snapshot(self) -> dict:
        """Plain-dict form embedded in every StoredDuel."""
        return {
            "rounds_per_side": self.rounds_per_side,
            "limits": {
                "time_limit_ms": self.limits.time_limit_ms,
                "memory_limit_mb": self.limits.memory_limit_mb,
                "module_allowlist": list(self.limits.module_allowlist),
            },
            "max_parallel_duels": self.max_parallel_duels,
            "max_workers": self.max_workers,
            "out_dir": self.out_dir,
            "seed": self.seed,
            "roster": [
                {
                    "id": p.id,
                    "kind": p.kind,
                    "endpoint": p.endpoint,
                    "model_name": p.model_name,
                    "auth_env_var": p.auth_env_var,
                    "script": p.script,
                }
                for p in self.roster
            ],
        }


def load_config(path) -> TournamentConfig:
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc

    limits_data = data.get("limits", {})
    limits = ExecLimits(
        time_limit_ms=limits_data.get("time_limit_ms", 10000),
        memory_limit_mb=limits_data.get("memory_limit_mb", 512),
        module_allowlist=tuple(limits_data.get("module_allowlist", DEFAULT_ALLOWLIST)),
    )
    concurrency = data.get("concurrency", {})
    try:
        roster = tuple(
            AgentProfile(
                id=entry["id"],
                kind=entry.get("kind", "remote"),
                endpoint=entry.get("endpoint"),
                model_name=entry.get("model_name"),
                auth_env_var=entry.get("auth_env_var"),
                request_timeout_s=entry.get("request_timeout_s", 60.0),
                max_retries=entry.get("max_retries", 3),
                requests_per_minute=entry.get("requests_per_minute"),
                script=entry.get("script", ""),
                extra_headers=dict(entry.get("extra_headers", {})),
                extra_body=dict(entry.get("extra_body", {})),
            )
            for entry in data.get("roster", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad roster entry: {exc}") from exc
    if not roster:
        raise ConfigError("config defines no roster")
    try:
        return TournamentConfig(
            roster=roster,
            rounds_per_side=data.get("rounds_per_side", 5),
            limits=limits,
            max_parallel_duels=concurrency.get("max_parallel_duels", 1),
            max_workers=concurrency.get("max_workers", 4),
            out_dir=data.get("out_dir", "duel_logs"),
            seed=data.get("seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# stored duels

@dataclass(frozen=True)
class ResponseRecord:
    role: str  # proposer | solver
    text: str
    redacted: bool = False


@dataclass(frozen=True)
class StoredDuel:
    schema_version: int
    duel_id: str
    config: dict
    duel: DuelLog
    responses: Dict[str, Tuple[ResponseRecord, ...]]
    started_at: str
    finished_at: str


def duel_id_for(model_a: str, model_b: str) -> str:
    return f"{model_a}__vs__{model_b}"


def _verdict_to_dict(v: Optional[Verdict]) -> Optional[dict]:
    return None if v is None else v.to_dict()


def _verdict_from_dict(data: Optional[dict]) -> Optional[Verdict]:
    return None if data is None else Verdict.from_dict(data)


def _round_to_dict(r: RoundRecord) -> dict:
    return {
        "index": r.index,
        "proposer_id": r.proposer_id,
        "solver_id": r.solver_id,
        "puzzle_source": r.puzzle_source,
        "sample_literal": r.sample_literal,
        "sample_verdict": _verdict_to_dict(r.sample_verdict),
        "solver_literal": r.solver_literal,
        "solver_verdict": _verdict_to_dict(r.solver_verdict),
        "outcome": r.outcome.value,
        "proposer_private_text": r.proposer_private_text,
    }


def _round_from_dict(data: dict) -> RoundRecord:
    return RoundRecord(
        index=data["index"],
        proposer_id=data["proposer_id"],
        solver_id=data["solver_id"],
        puzzle_source=data["puzzle_source"],
        sample_literal=data["sample_literal"],
        sample_verdict=_verdict_from_dict(data["sample_verdict"]),
        solver_literal=data["solver_literal"],
        solver_verdict=_verdict_from_dict(data["solver_verdict"]),
        outcome=RoundOutcome(data["outcome"]),
        proposer_private_text=data["proposer_private_text"],
    )


def duel_log_to_dict(log: DuelLog) -> dict:
    return {
        "model_a": log.model_a,
        "model_b": log.model_b,
        "rounds_per_side": log.rounds_per_side,
        "rounds": [_round_to_dict(r) for r in log.rounds],
        "score_a": log.score_a,
        "score_b": log.score_b,
        "result": log.result.value,
    }


def duel_log_from_dict(data: dict) -> DuelLog:
    return DuelLog(
        model_a=data["model_a"],
        model_b=data["model_b"],
        rounds_per_side=data["rounds_per_side"],
        rounds=[_round_from_dict(r) for r in data["rounds"]],
        score_a=data["score_a"],
        score_b=data["score_b"],
        result=DuelResult(data["result"]),
    )


def stored_duel_to_dict(sd: StoredDuel) -> dict:
    return {
        "schema_version": sd.schema_version,
        "duel_id": sd.duel_id,
        "config": sd.config,
        "duel": duel_log_to_dict(sd.duel),
        "responses": {
            model: [
                {"role": r.role, "text": r.text, "redacted": r.redacted} for r in records
            ]
            for model, records in sd.responses.items()
        },
        "started_at": sd.started_at,
        "finished_at": sd.finished_at,
    }


def stored_duel_from_dict(data: dict) -> StoredDuel:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"schema_version {version!r}, expected {SCHEMA_VERSION}")
    try:
        return StoredDuel(
            schema_version=version,
            duel_id=data["duel_id"],
            config=data["config"],
            duel=duel_log_from_dict(data["duel"]),
            responses={
                model: tuple(
                    ResponseRecord(r["role"], r["text"], r.get("redacted", False))
                    for r in records
                )
                for model, records in data["responses"].items()
            },
            started_at=data["started_at"],
            finished_at=data["finished_at"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptRecord(f"malformed stored duel: {exc}") from exc


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def save_duel(sd: StoredDuel, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_dump_json(stored_duel_to_dict(sd)))


def load_duel(path) -> StoredDuel:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (ValueError, OSError) as exc:
        raise CorruptRecord(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise CorruptRecord(f"{path}: not a JSON object")
    return stored_duel_from_dict(data)


def write_index(
    directory, duel_ids: Sequence[str], skipped: Sequence[Tuple[str, str, str]] = ()
) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "duels": sorted(duel_ids),
        "skipped": [
            {"first": a, "second": b, "reason": reason} for a, b, reason in skipped
        ],
    }
    with open(os.path.join(directory, INDEX_FILENAME), "w", encoding="utf-8") as handle:
        handle.write(_dump_json(doc))


def load_duels(directory) -> List[StoredDuel]:
    """All duels in a log directory, ordered by duel id.

    Duel files are named <a>__vs__<b>.json; other json in the directory
    (index, ratings, corpus) is left alone.
    """
    names = sorted(
        n for n in os.listdir(directory) if n.endswith(".json") and "__vs__" in n
    )
    return [load_duel(os.path.join(directory, n)) for n in names]


def redact_responses(sd: StoredDuel, roles: Sequence[str] = ("proposer",)) -> StoredDuel:
    """Blank the text of matching responses for publishing; flags preserved."""
    wanted = set(roles)
    redacted = {
        model: tuple(
            ResponseRecord(r.role, "" if r.role in wanted else r.text, r.role in wanted or r.redacted)
            for r in records
        )
        for model, records in sd.responses.items()
    }
    return replace(sd, responses=redacted)


def save_corpus(corpus, path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "puzzles": [
            {
                "puzzle_source": p.puzzle_source,
                "duel_id": p.duel_id,
                "turn": p.turn,
                "proposer_id": p.proposer_id,
                "sample_literal": p.sample_literal,
                "sample_verdict": p.sample_verdict.to_dict(),
                "tags": list(p.tags),
            }
            for p in corpus
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(_dump_json(doc))


def load_corpus(path):
    from .analytics import MinedPuzzle

    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(f"corpus schema_version {doc.get('schema_version')!r}")
        return [
            MinedPuzzle(
                puzzle_source=p["puzzle_source"],
                duel_id=p["duel_id"],
                turn=p["turn"],
                proposer_id=p["proposer_id"],
                sample_literal=p["sample_literal"],
                sample_verdict=Verdict.from_dict(p["sample_verdict"]),
                tags=tuple(p.get("tags", ())),
            )
            for p in doc["puzzles"]
        ]
    except SchemaMismatch:
        raise
    except (ValueError, OSError, KeyError, TypeError) as exc:
        raise CorruptRecord(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# record and replay

def _utc_stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def run_and_store_duel(
    agent_a: Agent,
    agent_b: Agent,
    config: TournamentConfig,
    verifier=None,
) -> StoredDuel:
    recorder_a = RecordingAgent(agent_a)
    recorder_b = RecordingAgent(agent_b)
    started = _utc_stamp()
    log = play_duel(
        recorder_a, recorder_b, config.rounds_per_side, config.limits, verifier=verifier
    )
    return StoredDuel(
        schema_version=SCHEMA_VERSION,
        duel_id=duel_id_for(log.model_a, log.model_b),
        config=config.snapshot(),
        duel=log,
        responses={
            recorder_a.model_id: tuple(ResponseRecord(role, text) for role, text in recorder_a.exchanges),
            recorder_b.model_id: tuple(ResponseRecord(role, text) for role, text in recorder_b.exchanges),
        },
        started_at=started,
        finished_at=_utc_stamp(),
    )


def replay_duel(sd: StoredDuel, verifier=None) -> DuelLog:
    """Re-run the duel from stored responses through the real engine."""
    limits_data = sd.config.get("limits", {})
    limits = ExecLimits(
        time_limit_ms=limits_data.get("time_limit_ms", 10000),
        memory_limit_mb=limits_data.get("memory_limit_mb", 512),
        module_allowlist=tuple(limits_data.get("module_allowlist", DEFAULT_ALLOWLIST)),
    )
    agents = {}
    for model, records in sd.responses.items():
        agents[model] = ReplayAgent(model, [(r.role, r.text) for r in records])
    return play_duel(
        agents[sd.duel.model_a],
        agents[sd.duel.model_b],
        sd.duel.rounds_per_side,
        limits,
        verifier=verifier,
    )


def normalized_duel_log(log: DuelLog) -> dict:
    """Duel log as a dict with timing stripped, for replay/determinism checks."""
    doc = duel_log_to_dict(log)
    for round_doc in doc["rounds"]:
        for key in ("sample_verdict", "solver_verdict"):
            if round_doc[key] is not None:
                round_doc[key]["wall_ms"] = 0
    return doc
