"""One-shot isolated evaluator for `mystery` puzzle functions.

Wire protocol (UTF-8, one JSON document each way):

  stdin   {"puzzle_source": str, "candidate_expr": str, "time_limit_ms": int,
           "memory_limit_mb": int, "module_allowlist": [str, ...]}
  stdout  {"status": str, "detail": str, "wall_ms": int}

Status values: returned_true, returned_other, parse_error, puzzle_error,
runtime_error, timeout, memory. `returned_true` is reported only when the
function returns the canonical boolean True; truthy values such as 1 report
`returned_other`.

The process serves exactly one request and exits 0 after any delivered
response. A malformed request exits nonzero with no response. Isolation is
process-level: import hook restricted to the request's allowlist, RLIMIT_AS
for memory, SIGALRM for the cooperative time limit (the supervisor is
expected to hard-kill runaways a grace period later). Stdlib only; this
module must stay importable by a bare interpreter.
"""

from __future__ import annotations

import builtins
import io
import json
import sys
import time

# imported before the hook exists; no import statement below may run after
# _install_import_hook (the hook would veto the worker's own imports)
try:
    import resource
except ImportError:  # non-unix; supervisor wall clock still applies
    resource = None
try:
    import signal
except ImportError:
    signal = None

STATUS_RETURNED_TRUE = "returned_true"
STATUS_RETURNED_OTHER = "returned_other"
STATUS_PARSE_ERROR = "parse_error"
STATUS_PUZZLE_ERROR = "puzzle_error"
STATUS_RUNTIME_ERROR = "runtime_error"
STATUS_TIMEOUT = "timeout"
STATUS_MEMORY = "memory"

DETAIL_LIMIT_BYTES = 1024

# builtins that reach outside the process; removed from the exec namespace.
# Not a security boundary on its own (the allowlist and process isolation
# are), just cheap extra margin.
_DENIED_BUILTINS = ("open", "input", "breakpoint", "exit", "quit", "help")


class _TimeLimit(BaseException):
    # BaseException on purpose: puzzle code with a bare `except Exception`
    # must not be able to swallow the alarm
    pass


def _clip_detail(text: str) -> str:
    data = text.encode("utf-8", errors="replace")
    if len(data) <= DETAIL_LIMIT_BYTES:
        return text
    return data[:DETAIL_LIMIT_BYTES].decode("utf-8", errors="ignore")


def _describe(exc: BaseException) -> str:
    return _clip_detail(f"{type(exc).__name__}: {exc}")


def _set_memory_limit(limit_mb: int) -> None:
    if resource is None:
        return
    try:
        limit = limit_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except (ValueError, OSError):
        # platform refuses the limit; the supervisor still enforces wall clock
        pass


def _install_import_hook(allowlist) -> None:
    allowed = set(allowlist)
    for name in sorted(allowed):
        # pre-import with the real importer so allowlisted modules can pull
        # in their own dependencies without tripping the hook
        try:
            __import__(name)
        except ImportError:
            pass

    real_import = builtins.__import__
    depth = [0]

    def guarded(name, globals=None, locals=None, fromlist=(), level=0):
        root = name.partition(".")[0]
        if depth[0] == 0 and level == 0 and root not in allowed:
            raise ImportError(f"import of {root!r} is not allowed here")
        depth[0] += 1
        try:
            return real_import(name, globals, locals, fromlist, level)
        finally:
            depth[0] -= 1

    builtins.__import__ = guarded


def _exec_builtins() -> dict:
    ns = dict(vars(builtins))
    for name in _DENIED_BUILTINS:
        ns.pop(name, None)
    return ns


def _arm_timer(ms: int) -> None:
    if signal is None or not hasattr(signal, "setitimer"):
        return

    def on_alarm(signum, frame):
        raise _TimeLimit()

    signal.signal(signal.SIGALRM, on_alarm)
    signal.setitimer(signal.ITIMER_REAL, ms / 1000.0)


def _disarm_timer() -> None:
    if signal is None or not hasattr(signal, "setitimer"):
        return
    signal.setitimer(signal.ITIMER_REAL, 0.0)


def _evaluate(request: dict) -> dict:
    """Run one evaluation under limits; always returns a response dict."""
    puzzle_source = request["puzzle_source"]
    candidate_expr = request["candidate_expr"]
    time_limit_ms = request["time_limit_ms"]

    _set_memory_limit(request["memory_limit_mb"])
    _install_import_hook(request["module_allowlist"])

    start = time.monotonic()

    def finish(status: str, detail: str = "") -> dict:
        wall_ms = int((time.monotonic() - start) * 1000)
        return {"status": status, "detail": _clip_detail(detail), "wall_ms": wall_ms}

    _arm_timer(time_limit_ms)
    try:
        try:
            code = compile(puzzle_source, "<puzzle>", "exec")
        except (SyntaxError, ValueError) as exc:
            return finish(STATUS_PUZZLE_ERROR, _describe(exc))

        namespace = {"__builtins__": _exec_builtins()}
        try:
            exec(code, namespace)
        except (MemoryError, _TimeLimit):
            raise
        except Exception as exc:
            # includes ImportError from the hook: dynamic failure, not syntax
            return finish(STATUS_RUNTIME_ERROR, _describe(exc))

        mystery = namespace.get("mystery")
        if not callable(mystery):
            return finish(STATUS_PUZZLE_ERROR, "puzzle does not define a callable mystery()")

        try:
            expr = compile(candidate_expr, "<candidate>", "eval")
        except (SyntaxError, ValueError) as exc:
            return finish(STATUS_PARSE_ERROR, _describe(exc))

        try:
            value = eval(expr, namespace)
            result = mystery(value)
        except (MemoryError, _TimeLimit):
            raise
        except Exception as exc:
            return finish(STATUS_RUNTIME_ERROR, _describe(exc))

        if result is True:
            return finish(STATUS_RETURNED_TRUE)
        return finish(STATUS_RETURNED_OTHER)
    except _TimeLimit:
        return finish(STATUS_TIMEOUT, f"evaluation exceeded {time_limit_ms} ms")
    except MemoryError as exc:
        return finish(STATUS_MEMORY, _describe(exc))
    finally:
        _disarm_timer()


def _read_request(stream) -> dict | None:
    try:
        request = json.loads(stream.read())
    except (ValueError, UnicodeDecodeError):
        return None
    if not isinstance(request, dict):
        return None
    if not isinstance(request.get("puzzle_source"), str):
        return None
    if not isinstance(request.get("candidate_expr"), str):
        return None
    for key in ("time_limit_ms", "memory_limit_mb"):
        value = request.get(key)
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            return None
    allowlist = request.get("module_allowlist")
    if not isinstance(allowlist, list) or not all(isinstance(m, str) for m in allowlist):
        return None
    return request


def serve_once() -> int:
    """Read one request from stdin, write one response to stdout."""
    request = _read_request(sys.stdin)
    if request is None:
        return 2

    # puzzle prints must not pollute the protocol stream
    real_stdout = sys.stdout
    sys.stdout = io.StringIO()
    try:
        response = _evaluate(request)
    finally:
        sys.stdout = real_stdout

    sys.stdout.write(json.dumps(response))
    sys.stdout.flush()
    return 0
