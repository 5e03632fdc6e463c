"""Shared test doubles.

InProcessVerifier mirrors the worker's decision table without process
isolation so engine/tournament tests stay fast; it must only ever see the
benign sources the scripted presets emit.
"""

from __future__ import annotations

import pytest

from puzzleduel.prompts import ParsedProposal
from puzzleduel.sandbox import ErrorKind, ExecLimits, Verdict, VerdictKind


class InProcessVerifier:
    def __init__(self):
        self.calls = 0

    def verify(self, puzzle_source: str, candidate_literal: str, limits: ExecLimits) -> Verdict:
        self.calls += 1
        namespace: dict = {}
        try:
            exec(compile(puzzle_source, "<puzzle>", "exec"), namespace)
        except SyntaxError as exc:
            return Verdict(
                VerdictKind.ERROR, ErrorKind.PUZZLE_SYNTAX, 0, f"{type(exc).__name__}: {exc}"
            )
        except Exception as exc:
            return Verdict(
                VerdictKind.ERROR, ErrorKind.RUNTIME_EXCEPTION, 0, f"{type(exc).__name__}: {exc}"
            )
        mystery = namespace.get("mystery")
        if not callable(mystery):
            return Verdict(
                VerdictKind.ERROR, ErrorKind.PUZZLE_SYNTAX, 0, "no callable mystery()"
            )
        try:
            code = compile(candidate_literal, "<candidate>", "eval")
        except (SyntaxError, ValueError) as exc:
            return Verdict(
                VerdictKind.ERROR, ErrorKind.VALUE_PARSE, 0, f"{type(exc).__name__}: {exc}"
            )
        try:
            result = mystery(eval(code, namespace))
        except Exception as exc:
            return Verdict(
                VerdictKind.ERROR, ErrorKind.RUNTIME_EXCEPTION, 0, f"{type(exc).__name__}: {exc}"
            )
        if result is True:
            return Verdict(VerdictKind.TRUE)
        return Verdict(VerdictKind.FALSE)

    def verify_sample(self, proposal: ParsedProposal, limits: ExecLimits) -> Verdict:
        return self.verify(proposal.puzzle_source, proposal.sample_literal, limits)


@pytest.fixture
def fake_verifier() -> InProcessVerifier:
    return InProcessVerifier()


@pytest.fixture
def fast_limits() -> ExecLimits:
    return ExecLimits(time_limit_ms=3000, memory_limit_mb=256)
