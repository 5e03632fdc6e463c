"""Agent abstraction: remote chat models, scripted doubles, replay.

The engine only ever calls `agent.complete(prompt)`; everything else here is
construction and validation plumbing. Scripted and replay agents tell the two
prompt kinds apart by the fixed opening line of the proposer template, which
keeps them behind the exact same interface as live models.
"""

from __future__ import annotations

import hashlib
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import requests

from . import prompts

logger = logging.getLogger(__name__)

KIND_REMOTE = "remote"
KIND_SCRIPTED = "scripted"
KIND_REPLAY = "replay"

_PROPOSER_OPENING = "Let's play a game."


class AgentError(Exception):
    """Base for agent-side failures the engine may absorb."""


class TransportError(AgentError):
    """Request could not be completed after the retry budget."""


class AuthError(AgentError):
    """Credential missing or rejected; fail fast, do not retry."""


class ReplayMismatch(RuntimeError):
    # deliberately not an AgentError: a desynchronized replay is a bug in the
    # caller, not an agent failure to absorb
    pass


@dataclass(frozen=True)
class AgentProfile:
    id: str
    kind: str  # remote | scripted | replay
    endpoint: Optional[str] = None
    model_name: Optional[str] = None
    auth_env_var: Optional[str] = None
    request_timeout_s: float = 60.0
    max_retries: int = 3
    requests_per_minute: Optional[float] = None
    script: str = ""  # scripted agents: preset name
    extra_headers: Dict[str, str] = field(default_factory=dict)
    extra_body: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (KIND_REMOTE, KIND_SCRIPTED, KIND_REPLAY):
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if self.kind == KIND_REMOTE:
            missing = [
                name
                for name, value in (
                    ("endpoint", self.endpoint),
                    ("model_name", self.model_name),
                    ("auth_env_var", self.auth_env_var),
                )
                if not value
            ]
            if missing:
                raise ValueError(f"remote profile {self.id!r} missing {', '.join(missing)}")


def _is_proposer_prompt(prompt: str) -> bool:
    return prompt.startswith(_PROPOSER_OPENING)


class Agent:
    """Interface: a model id plus complete()."""

    model_id: str

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# scripted agents

@dataclass(frozen=True)
class ProposeValid:
    puzzle: str
    sample: str


@dataclass(frozen=True)
class ProposeBroken:
    puzzle: str
    bad_sample: str


@dataclass(frozen=True)
class ProposeGarbage:
    text: str


@dataclass(frozen=True)
class SolveWith:
    literal: str


@dataclass(frozen=True)
class SolveGarbage:
    text: str


ProposeDirective = Union[ProposeValid, ProposeBroken, ProposeGarbage]
SolveDirective = Union[SolveWith, SolveGarbage]


@dataclass(frozen=True)
class ScriptedBehavior:
    """Directive sources indexed by the agent's own 1-based call counts."""

    propose_at: Callable[[int], ProposeDirective]
    solve_at: Callable[[int], SolveDirective]

    @classmethod
    def from_lists(
        cls, proposals: Sequence[ProposeDirective], solutions: Sequence[SolveDirective]
    ) -> "ScriptedBehavior":
        def propose_at(i: int) -> ProposeDirective:
            if i > len(proposals):
                raise AgentError(f"scripted proposals exhausted at call {i}")
            return proposals[i - 1]

        def solve_at(i: int) -> SolveDirective:
            if i > len(solutions):
                raise AgentError(f"scripted solutions exhausted at call {i}")
            return solutions[i - 1]

        return cls(propose_at, solve_at)


def render_propose_directive(d: ProposeDirective) -> str:
    if isinstance(d, ProposeGarbage):
        return d.text
    sample = d.sample if isinstance(d, ProposeValid) else d.bad_sample
    return (
        "```python\n"
        f"{d.puzzle}\n"
        "```\n"
        "This puzzle checks a hidden condition on x.\n"
        f"SOLUTION: {sample}"
    )


def render_solve_directive(d: SolveDirective) -> str:
    if isinstance(d, SolveGarbage):
        return d.text
    return f"Working through the condition.\nSOLUTION: {d.literal}"


class ScriptedAgent(Agent):
    """Deterministic double: same call index, same response, any prompt."""

    def __init__(self, model_id: str, behavior: ScriptedBehavior):
        self.model_id = model_id
        self.behavior = behavior
        self._proposals_made = 0
        self._solutions_made = 0

    def complete(self, prompt: str) -> str:
        if _is_proposer_prompt(prompt):
            self._proposals_made += 1
            return render_propose_directive(self.behavior.propose_at(self._proposals_made))
        self._solutions_made += 1
        return render_solve_directive(self.behavior.solve_at(self._solutions_made))


def _key_puzzle(key: str) -> str:
    return f'def mystery(x):\n    return x == "{key}"'


def scripted_preset(name: str, agent_id: str, seed: int = 0) -> ScriptedBehavior:
    """Built-in behaviors for config-driven tournaments.

    cooperative: valid shared-key puzzles, correct solves (all draws against
    itself). stumper: unguessable keys, garbage solves. clumsy: broken samples,
    garbage solves. random: seeded mix of all directives.
    """
    if name == "cooperative":
        return ScriptedBehavior(
            propose_at=lambda i: ProposeValid(_key_puzzle(f"k{i}"), f'"k{i}"'),
            solve_at=lambda i: SolveWith(f'"k{i}"'),
        )
    if name == "stumper":
        return ScriptedBehavior(
            propose_at=lambda i: ProposeValid(
                _key_puzzle(f"{agent_id}-secret-{i}"), f'"{agent_id}-secret-{i}"'
            ),
            solve_at=lambda i: SolveGarbage("I cannot work this one out."),
        )
    if name == "clumsy":
        return ScriptedBehavior(
            propose_at=lambda i: ProposeBroken(_key_puzzle(f"k{i}"), '"not-the-key"'),
            solve_at=lambda i: SolveGarbage("no attempt"),
        )
    if name == "random":
        digest = hashlib.sha256(f"{seed}:{agent_id}".encode("utf-8")).hexdigest()
        rng_seed = int(digest[:16], 16)

        def propose_at(i: int) -> ProposeDirective:
            # str seeds hash deterministically across processes; tuples do not
            rng = random.Random(f"{rng_seed}:propose:{i}")
            roll = rng.random()
            if roll < 0.5:
                return ProposeValid(_key_puzzle(f"k{i}"), f'"k{i}"')
            if roll < 0.8:
                return ProposeBroken(_key_puzzle(f"k{i}"), '"miss"')
            return ProposeGarbage("thinking about a puzzle but not committing to one")

        def solve_at(i: int) -> SolveDirective:
            rng = random.Random(f"{rng_seed}:solve:{i}")
            roll = rng.random()
            if roll < 0.5:
                return SolveWith(f'"k{i}"')
            if roll < 0.8:
                return SolveWith('"wrong-guess"')
            return SolveGarbage("passing on this round")

        return ScriptedBehavior(propose_at, solve_at)
    raise ValueError(f"unknown scripted preset {name!r}")


# ---------------------------------------------------------------------------
# recording / replay

ROLE_PROPOSER = prompts.PROPOSER
ROLE_SOLVER = prompts.SOLVER


class RecordingAgent(Agent):
    """Wraps a live agent and captures (role, response) in call order.

    Transport failures are recorded as empty responses so a later replay walks
    the exact same scoring path the live duel took.
    """

    def __init__(self, inner: Agent):
        self.inner = inner
        self.model_id = inner.model_id
        self.exchanges: List[Tuple[str, str]] = []

    def complete(self, prompt: str) -> str:
        role = ROLE_PROPOSER if _is_proposer_prompt(prompt) else ROLE_SOLVER
        try:
            response = self.inner.complete(prompt)
        except AgentError:
            self.exchanges.append((role, ""))
            raise
        self.exchanges.append((role, response))
        return response


class ReplayAgent(Agent):
    """Feeds stored responses back in call order, checking the role tag."""

    def __init__(self, model_id: str, exchanges: Sequence[Tuple[str, str]]):
        self.model_id = model_id
        self._exchanges = list(exchanges)
        self._cursor = 0

    def complete(self, prompt: str) -> str:
        expected = ROLE_PROPOSER if _is_proposer_prompt(prompt) else ROLE_SOLVER
        if self._cursor >= len(self._exchanges):
            raise ReplayMismatch(f"{self.model_id}: replay exhausted at call {self._cursor + 1}")
        role, response = self._exchanges[self._cursor]
        if role != expected:
            raise ReplayMismatch(
                f"{self.model_id}: call {self._cursor + 1} expected {expected}, stored {role}"
            )
        self._cursor += 1
        return response


# ---------------------------------------------------------------------------
# remote agents

class _TokenBucket:
    """Blocking per-endpoint rate limiter (requests per minute)."""

    def __init__(self, per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.capacity = max(per_minute, 1.0)
        self.rate = self.capacity / 60.0
        self.tokens = self.capacity
        self.updated = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self._sleep(wait)


_buckets: Dict[Tuple[str, float], _TokenBucket] = {}
_buckets_lock = threading.Lock()


def _bucket_for(endpoint: str, per_minute: float) -> _TokenBucket:
    key = (endpoint, per_minute)
    with _buckets_lock:
        bucket = _buckets.get(key)
        if bucket is None:
            bucket = _buckets[key] = _TokenBucket(per_minute)
        return bucket


class RemoteAgent(Agent):
    """OpenAI-style chat-completions client: one user message, no system."""

    def __init__(self, profile: AgentProfile, session: Optional[requests.Session] = None):
        if profile.kind != KIND_REMOTE:
            raise ValueError(f"profile {profile.id!r} is not remote")
        self.profile = profile
        self.model_id = profile.id
        self._session = session or requests.Session()
        self._bucket = (
            _bucket_for(profile.endpoint, profile.requests_per_minute)
            if profile.requests_per_minute
            else None
        )

    def _api_key(self) -> str:
        key = os.environ.get(self.profile.auth_env_var or "", "")
        if not key:
            raise AuthError(f"{self.profile.id}: env var {self.profile.auth_env_var} is not set")
        return key

    def complete(self, prompt: str) -> str:
        profile = self.profile
        payload = {
            "model": profile.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        payload.update(profile.extra_body)
        headers = {"Authorization": f"Bearer {self._api_key()}"}
        headers.update(profile.extra_headers)

        last_error: Optional[str] = None
        for attempt in range(profile.max_retries + 1):
            if attempt:
                delay = 0.5 * (2 ** (attempt - 1))
                logger.debug("%s: retry %d in %.1fs (%s)", profile.id, attempt, delay, last_error)
                time.sleep(delay)
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                resp = self._session.post(
                    profile.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=profile.request_timeout_s,
                )
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"{profile.id}: endpoint rejected credentials ({resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise TransportError(f"{profile.id}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                last_error = f"malformed response body: {exc}"
                continue
        raise TransportError(f"{profile.id}: gave up after {profile.max_retries} retries ({last_error})")


# ---------------------------------------------------------------------------
# roster construction and validation

def build_agent(profile: AgentProfile, seed: int = 0) -> Agent:
    if profile.kind == KIND_REMOTE:
        return RemoteAgent(profile)
    if profile.kind == KIND_SCRIPTED:
        return ScriptedAgent(profile.id, scripted_preset(profile.script, profile.id, seed))
    raise ValueError(f"cannot build agent of kind {profile.kind!r} without a stored duel")


@dataclass(frozen=True)
class AgentReadiness:
    id: str
    ready: bool
    problems: Tuple[str, ...] = ()


def validate_roster(
    profiles: Sequence[AgentProfile], check_endpoints: bool = False
) -> List[AgentReadiness]:
    """Report-only readiness check: id uniqueness, credentials, reachability."""
    counts: Dict[str, int] = {}
    for p in profiles:
        counts[p.id] = counts.get(p.id, 0) + 1

    report = []
    for p in profiles:
        problems: List[str] = []
        if counts[p.id] > 1:
            problems.append(f"duplicate id {p.id!r}")
        if p.kind == KIND_REMOTE:
            if not os.environ.get(p.auth_env_var or "", ""):
                problems.append(f"credential env var {p.auth_env_var} not set")
            if check_endpoints and p.endpoint:
                try:
                    requests.head(p.endpoint, timeout=5)
                except requests.RequestException as exc:
                    problems.append(f"endpoint unreachable: {exc}")
        if p.kind == KIND_SCRIPTED:
            try:
                scripted_preset(p.script, p.id)
            except ValueError as exc:
                problems.append(str(exc))
        report.append(AgentReadiness(p.id, not problems, tuple(problems)))
    return report
