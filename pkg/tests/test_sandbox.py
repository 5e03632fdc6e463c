"""Verdict/limit types plus the supervisor against the real worker process."""

import sys
from concurrent.futures import ThreadPoolExecutor

import pytest

from puzzleduel.prompts import ParsedProposal
from puzzleduel.sandbox import (
    DEFAULT_ALLOWLIST,
    ErrorKind,
    ExecLimits,
    SandboxVerifier,
    Verdict,
    VerdictKind,
    default_worker_command,
)

LIMITS = ExecLimits(time_limit_ms=3000, memory_limit_mb=256)
TRUE_IS_ONE = "def mystery(x):\n    return x == 1"


@pytest.fixture(scope="module")
def verifier():
    return SandboxVerifier()


# ---------------------------------------------------------------------------
# verdict type

def test_verdict_error_requires_error_kind():
    with pytest.raises(ValueError):
        Verdict(VerdictKind.ERROR)


def test_verdict_clean_kinds_forbid_error_kind():
    with pytest.raises(ValueError):
        Verdict(VerdictKind.TRUE, ErrorKind.VALUE_PARSE)
    with pytest.raises(ValueError):
        Verdict(VerdictKind.FALSE, ErrorKind.WORKER_CRASH)


def test_verdict_clean_kinds_forbid_detail():
    with pytest.raises(ValueError):
        Verdict(VerdictKind.TRUE, detail="x")


def test_verdict_negative_wall_rejected():
    with pytest.raises(ValueError):
        Verdict(VerdictKind.TRUE, wall_ms=-1)


def test_verdict_dict_round_trip():
    for v in (
        Verdict(VerdictKind.TRUE, wall_ms=12),
        Verdict(VerdictKind.FALSE),
        Verdict(VerdictKind.ERROR, ErrorKind.RUNTIME_EXCEPTION, 5, "ZeroDivisionError: x"),
        Verdict(VerdictKind.TIMEOUT, wall_ms=1000, detail="evaluation exceeded 1000 ms"),
    ):
        assert Verdict.from_dict(v.to_dict()) == v


def test_is_true_only_for_true():
    assert Verdict(VerdictKind.TRUE).is_true
    assert not Verdict(VerdictKind.FALSE).is_true
    assert not Verdict(VerdictKind.TIMEOUT).is_true


def test_exec_limits_validation():
    with pytest.raises(ValueError):
        ExecLimits(time_limit_ms=0)
    with pytest.raises(ValueError):
        ExecLimits(memory_limit_mb=0)


def test_default_allowlist_is_benign():
    assert set(DEFAULT_ALLOWLIST) == {
        "collections", "functools", "hashlib", "itertools", "math",
        "re", "string", "unicodedata", "zlib",
    }
    for forbidden in ("os", "sys", "subprocess", "socket", "pathlib"):
        assert forbidden not in DEFAULT_ALLOWLIST


# ---------------------------------------------------------------------------
# verdict mapping through the real worker

def test_true_result(verifier):
    v = verifier.verify(TRUE_IS_ONE, "1", LIMITS)
    assert v.kind is VerdictKind.TRUE
    assert v.error_kind is None
    assert v.detail == ""


def test_truthy_but_not_true_is_false(verifier):
    # strict `is True`: returning 1 from mystery must not count as solved
    v = verifier.verify("def mystery(x):\n    return 1", "0", LIMITS)
    assert v.kind is VerdictKind.FALSE
    assert v.detail == ""


def test_wrong_value_is_false(verifier):
    assert verifier.verify(TRUE_IS_ONE, "2", LIMITS).kind is VerdictKind.FALSE


def test_candidate_syntax_error_maps_to_value_parse(verifier):
    v = verifier.verify(TRUE_IS_ONE, "[1, 2", LIMITS)
    assert v.kind is VerdictKind.ERROR
    assert v.error_kind is ErrorKind.VALUE_PARSE
    assert v.detail


def test_puzzle_syntax_error_maps_to_puzzle_syntax(verifier):
    v = verifier.verify("def mystery(x:\n    return True", "1", LIMITS)
    assert v.error_kind is ErrorKind.PUZZLE_SYNTAX


def test_missing_mystery_maps_to_puzzle_syntax(verifier):
    v = verifier.verify("def other(x):\n    return True", "1", LIMITS)
    assert v.error_kind is ErrorKind.PUZZLE_SYNTAX


def test_raising_puzzle_maps_to_runtime_exception(verifier):
    v = verifier.verify("def mystery(x):\n    return 1 // x", "0", LIMITS)
    assert v.error_kind is ErrorKind.RUNTIME_EXCEPTION
    assert "ZeroDivisionError" in v.detail


def test_disallowed_import_maps_to_runtime_exception(verifier):
    v = verifier.verify("import os\ndef mystery(x):\n    return True", "1", LIMITS)
    assert v.error_kind is ErrorKind.RUNTIME_EXCEPTION
    assert "ImportError" in v.detail


def test_allowlisted_import_works(verifier):
    source = "import math\ndef mystery(x):\n    return x == math.factorial(5)"
    assert verifier.verify(source, "120", LIMITS).kind is VerdictKind.TRUE


def test_timeout_applies_to_evaluation(verifier):
    limits = ExecLimits(time_limit_ms=400, memory_limit_mb=256)
    v = verifier.verify("def mystery(x):\n    while True:\n        pass", "1", limits)
    assert v.kind is VerdictKind.TIMEOUT
    assert v.wall_ms <= limits.time_limit_ms + verifier.grace_ms


def test_memory_limit(verifier):
    limits = ExecLimits(time_limit_ms=5000, memory_limit_mb=64)
    v = verifier.verify("def mystery(x):\n    return len('a' * 10**9) > 0", "1", limits)
    assert v.kind is VerdictKind.ERROR
    assert v.error_kind is ErrorKind.MEMORY_LIMIT


def test_candidate_evaluated_in_puzzle_namespace(verifier):
    # the candidate may reference names the puzzle defines
    source = "KEY = 7\ndef mystery(x):\n    return x == KEY"
    assert verifier.verify(source, "KEY", LIMITS).kind is VerdictKind.TRUE


def test_puzzle_stdout_does_not_break_protocol(verifier):
    source = "print('chatter')\ndef mystery(x):\n    print('more')\n    return x == 1"
    assert verifier.verify(source, "1", LIMITS).kind is VerdictKind.TRUE


def test_detail_clipped_to_1024_bytes(verifier):
    source = "def mystery(x):\n    raise ValueError('y' * 5000)"
    v = verifier.verify(source, "1", LIMITS)
    assert v.error_kind is ErrorKind.RUNTIME_EXCEPTION
    assert len(v.detail.encode("utf-8")) <= 1024


def test_verify_sample_delegates(verifier):
    proposal = ParsedProposal(TRUE_IS_ONE, "1", "raw")
    assert verifier.verify_sample(proposal, LIMITS).kind is VerdictKind.TRUE


# ---------------------------------------------------------------------------
# supervisor failure handling

def test_worker_crash_when_command_missing():
    v = SandboxVerifier(worker_command=("/nonexistent/worker-binary",)).verify(
        TRUE_IS_ONE, "1", LIMITS
    )
    assert v.kind is VerdictKind.ERROR
    assert v.error_kind is ErrorKind.WORKER_CRASH
    assert "failed to start" in v.detail


def test_worker_crash_on_garbage_output():
    v = SandboxVerifier(worker_command=(sys.executable, "-c", "print('not json')")).verify(
        TRUE_IS_ONE, "1", LIMITS
    )
    assert v.error_kind is ErrorKind.WORKER_CRASH


def test_worker_crash_on_silent_exit():
    v = SandboxVerifier(worker_command=(sys.executable, "-c", "raise SystemExit(2)")).verify(
        TRUE_IS_ONE, "1", LIMITS
    )
    assert v.error_kind is ErrorKind.WORKER_CRASH
    assert "exited 2" in v.detail


def test_hard_kill_when_worker_ignores_limit():
    # a fake worker that never answers must be killed at limit + grace
    stuck = (sys.executable, "-c", "import time; time.sleep(60)")
    verifier = SandboxVerifier(worker_command=stuck, grace_ms=200)
    limits = ExecLimits(time_limit_ms=300, memory_limit_mb=64)
    v = verifier.verify(TRUE_IS_ONE, "1", limits)
    assert v.kind is VerdictKind.TIMEOUT
    assert v.wall_ms == 500
    assert "hard-killed" in v.detail


def test_default_worker_command_uses_this_interpreter():
    assert default_worker_command()[0] == sys.executable


def test_concurrent_verifications_complete():
    verifier = SandboxVerifier(max_workers=2)
    with ThreadPoolExecutor(max_workers=6) as pool:
        futures = [
            pool.submit(verifier.verify, TRUE_IS_ONE, "1", LIMITS) for _ in range(6)
        ]
        kinds = {f.result().kind for f in futures}
    assert kinds == {VerdictKind.TRUE}
