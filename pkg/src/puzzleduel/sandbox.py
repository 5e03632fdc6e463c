"""Supervisor for isolated puzzle evaluation.

Delegates every evaluation to a fresh `puzzle_worker` child process over the
JSON wire protocol (one request on stdin, one response on stdout) and maps
worker statuses onto scoring verdicts. Nothing from the puzzle or candidate
is ever executed in this process.
"""

from __future__ import annotations

import json
import logging
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .prompts import ParsedProposal

logger = logging.getLogger(__name__)

# imports appearing in known puzzle corpora; excludes anything that can touch
# filesystem, network or processes
DEFAULT_ALLOWLIST = (
    "collections",
    "functools",
    "hashlib",
    "itertools",
    "math",
    "re",
    "string",
    "unicodedata",
    "zlib",
)

GRACE_MS = 750  # supervisor-side hard-kill margin past the cooperative limit


class VerdictKind(str, Enum):
    TRUE = "true"
    FALSE = "false"
    ERROR = "error"
    TIMEOUT = "timeout"


class ErrorKind(str, Enum):
    VALUE_PARSE = "value_parse"
    PUZZLE_SYNTAX = "puzzle_syntax"
    RUNTIME_EXCEPTION = "runtime_exception"
    MEMORY_LIMIT = "memory_limit"
    WORKER_CRASH = "worker_crash"


@dataclass(frozen=True)
class Verdict:
    """Outcome of evaluating mystery(candidate) for scoring purposes."""

    kind: VerdictKind
    error_kind: Optional[ErrorKind] = None
    wall_ms: int = 0
    detail: str = ""

    def __post_init__(self):
        if self.kind is VerdictKind.ERROR:
            if self.error_kind is None:
                raise ValueError("error verdict requires an error_kind")
        elif self.error_kind is not None:
            raise ValueError(f"{self.kind.value} verdict cannot carry an error_kind")
        if self.kind in (VerdictKind.TRUE, VerdictKind.FALSE) and self.detail:
            raise ValueError("true/false verdicts carry no detail")
        if self.wall_ms < 0:
            raise ValueError("wall_ms must be nonnegative")

    @property
    def is_true(self) -> bool:
        return self.kind is VerdictKind.TRUE

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "error_kind": self.error_kind.value if self.error_kind else None,
            "wall_ms": self.wall_ms,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        return cls(
            kind=VerdictKind(data["kind"]),
            error_kind=ErrorKind(data["error_kind"]) if data.get("error_kind") else None,
            wall_ms=int(data.get("wall_ms", 0)),
            detail=data.get("detail", ""),
        )


@dataclass(frozen=True)
class ExecLimits:
    time_limit_ms: int = 10000
    memory_limit_mb: int = 512
    module_allowlist: Sequence[str] = DEFAULT_ALLOWLIST

    def __post_init__(self):
        if self.time_limit_ms <= 0:
            raise ValueError("time_limit_ms must be positive")
        if self.memory_limit_mb <= 0:
            raise ValueError("memory_limit_mb must be positive")


_STATUS_MAP = {
    "returned_true": (VerdictKind.TRUE, None),
    "returned_other": (VerdictKind.FALSE, None),
    "parse_error": (VerdictKind.ERROR, ErrorKind.VALUE_PARSE),
    "puzzle_error": (VerdictKind.ERROR, ErrorKind.PUZZLE_SYNTAX),
    "runtime_error": (VerdictKind.ERROR, ErrorKind.RUNTIME_EXCEPTION),
    "timeout": (VerdictKind.TIMEOUT, None),
    "memory": (VerdictKind.ERROR, ErrorKind.MEMORY_LIMIT),
}


def default_worker_command() -> tuple[str, ...]:
    return (sys.executable, "-m", "puzzle_worker")


class SandboxVerifier:
    """Spawns one worker process per evaluation, bounded by max_workers."""

    def __init__(
        self,
        worker_command: Optional[Sequence[str]] = None,
        grace_ms: int = GRACE_MS,
        max_workers: int = 4,
    ):
        self.worker_command = tuple(worker_command or default_worker_command())
        self.grace_ms = grace_ms
        self._slots = threading.BoundedSemaphore(max_workers)

    def verify(self, puzzle_source: str, candidate_literal: str, limits: ExecLimits) -> Verdict:
        request = {
            "puzzle_source": puzzle_source,
            "candidate_expr": candidate_literal,
            "time_limit_ms": limits.time_limit_ms,
            "memory_limit_mb": limits.memory_limit_mb,
            "module_allowlist": list(limits.module_allowlist),
        }
        budget_ms = limits.time_limit_ms + self.grace_ms
        with self._slots:
            started = time.monotonic()
            try:
                proc = subprocess.Popen(
                    self.worker_command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                )
            except OSError as exc:
                return _crash_verdict(f"worker failed to start: {exc}", 0)
            try:
                out, err = proc.communicate(
                    json.dumps(request).encode("utf-8"), timeout=budget_ms / 1000.0
                )
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.communicate()
                return Verdict(
                    VerdictKind.TIMEOUT,
                    wall_ms=budget_ms,
                    detail="worker hard-killed past time limit plus grace",
                )
            elapsed_ms = int((time.monotonic() - started) * 1000)
        return self._interpret(out, err, proc.returncode, elapsed_ms, budget_ms)

    def verify_sample(self, proposal: ParsedProposal, limits: ExecLimits) -> Verdict:
        verdict = self.verify(proposal.puzzle_source, proposal.sample_literal, limits)
        logger.debug(
            "proposer self-check: sample %r -> %s", proposal.sample_literal, verdict.kind.value
        )
        return verdict

    def _interpret(
        self, out: bytes, err: bytes, returncode: int, elapsed_ms: int, budget_ms: int
    ) -> Verdict:
        try:
            response = json.loads(out.decode("utf-8"))
            status = response["status"]
            kind, error_kind = _STATUS_MAP[status]
        except (ValueError, KeyError, UnicodeDecodeError):
            stderr_tail = err.decode("utf-8", errors="replace")[-300:].strip()
            detail = f"worker exited {returncode} without a usable response"
            if stderr_tail:
                detail = f"{detail}: {stderr_tail}"
            return _crash_verdict(detail, min(elapsed_ms, budget_ms))
        wall_ms = response.get("wall_ms", elapsed_ms)
        if not isinstance(wall_ms, int) or wall_ms < 0:
            wall_ms = elapsed_ms
        wall_ms = min(wall_ms, budget_ms)
        if kind in (VerdictKind.TRUE, VerdictKind.FALSE):
            detail = ""  # invariant: no detail on clean results
        else:
            detail = str(response.get("detail", ""))[:1024]
        return Verdict(kind, error_kind, wall_ms, detail)


def _crash_verdict(detail: str, wall_ms: int) -> Verdict:
    return Verdict(VerdictKind.ERROR, ErrorKind.WORKER_CRASH, wall_ms, detail[:1024])
