"""Candidate evaluation: verdicts, evaluators, and the capped fix loop.

An evaluator turns candidate source code into a verdict: ``ok`` with a
runtime, or one of four failure statuses with an error summary. Two
implementations are provided. The synthetic evaluator scores code against a
token landscape and exists for tests and offline experiments; the protocol
evaluator talks to an external worker process over newline-delimited JSON
on stdio, which is how real benchmark tasks are measured.
"""

from __future__ import annotations

import itertools
import json
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

PROTOCOL_VERSION = 1

STATUS_OK = "ok"
STATUS_COMPILE_ERROR = "compile_error"
STATUS_RUNTIME_ERROR = "runtime_error"
STATUS_INCORRECT = "incorrect"
STATUS_TIMEOUT = "timeout"
STATUSES = (
    STATUS_OK,
    STATUS_COMPILE_ERROR,
    STATUS_RUNTIME_ERROR,
    STATUS_INCORRECT,
    STATUS_TIMEOUT,
)


class EvaluationError(Exception):
    """Raised on malformed results or landscapes."""


class EvaluatorUnavailable(Exception):
    """The external evaluator cannot be reached even after restarts."""


@dataclass(frozen=True)
class EvaluationResult:
    """Verdict for one candidate program.

    Exactly one of ``runtime_ms`` and ``error_summary`` is populated:
    runtimes accompany ``ok`` and error summaries accompany everything else.
    ``max_abs_violation`` optionally quantifies an ``incorrect`` verdict.
    """

    status: str
    runtime_ms: float | None = None
    error_summary: str | None = None
    max_abs_violation: float | None = None

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise EvaluationError(f"unknown evaluation status: {self.status!r}")
        if self.status == STATUS_OK:
            if self.runtime_ms is None or self.runtime_ms <= 0:
                raise EvaluationError("ok results need a positive runtime_ms")
            if self.error_summary is not None:
                raise EvaluationError("ok results carry no error summary")
        else:
            if self.error_summary is None:
                raise EvaluationError(f"{self.status} results need an error summary")
            if self.runtime_ms is not None:
                raise EvaluationError(f"{self.status} results carry no runtime")

    @property
    def is_ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> dict:
        out: dict = {"status": self.status}
        if self.runtime_ms is not None:
            out["runtime_ms"] = self.runtime_ms
        if self.error_summary is not None:
            out["error_summary"] = self.error_summary
        if self.max_abs_violation is not None:
            out["max_abs_violation"] = self.max_abs_violation
        return out


class SyntheticLandscape:
    """Deterministic code-to-runtime map driven by token presence.

    A candidate's runtime starts at ``base_runtime_ms`` and is divided by
    the factor of every feature token present in the code. Breakage rules
    map a token to the fix token that neutralizes it: code containing a
    breakage token without its fix is a compile error. Empty code never
    compiles.
    """

    def __init__(
        self,
        base_runtime_ms: float,
        feature_factors: dict[str, float] | None = None,
        breakage_rules: dict[str, str] | None = None,
    ):
        if base_runtime_ms <= 0:
            raise EvaluationError("base_runtime_ms must be positive")
        self.base_runtime_ms = base_runtime_ms
        self.feature_factors = dict(feature_factors or {})
        self.breakage_rules = dict(breakage_rules or {})
        for token, factor in self.feature_factors.items():
            if factor <= 0:
                raise EvaluationError(f"feature factor for {token!r} must be positive")

    @classmethod
    def from_file(cls, path: str | Path) -> "SyntheticLandscape":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticLandscape":
        return cls(
            base_runtime_ms=data["base_runtime_ms"],
            feature_factors=data.get("feature_factors", {}),
            breakage_rules=data.get("breakage_rules", {}),
        )

    def to_dict(self) -> dict:
        return {
            "base_runtime_ms": self.base_runtime_ms,
            "feature_factors": dict(self.feature_factors),
            "breakage_rules": dict(self.breakage_rules),
        }

    def score(self, code: str) -> EvaluationResult:
        if not code.strip():
            return EvaluationResult(
                status=STATUS_COMPILE_ERROR, error_summary="empty candidate"
            )
        broken = sorted(
            token
            for token, fix in self.breakage_rules.items()
            if token in code and fix not in code
        )
        if broken:
            return EvaluationResult(
                status=STATUS_COMPILE_ERROR,
                error_summary="unresolved breakage tokens: " + ", ".join(broken),
            )
        runtime = self.base_runtime_ms
        # Apply factors in sorted token order: float division is order
        # sensitive and replay must reproduce runtimes bit for bit.
        for token in sorted(self.feature_factors):
            if token in code:
                runtime /= self.feature_factors[token]
        return EvaluationResult(status=STATUS_OK, runtime_ms=runtime)


class SyntheticEvaluator:
    """Evaluator facade over a synthetic landscape."""

    kind = "synthetic"

    def __init__(self, landscape: SyntheticLandscape):
        self.landscape = landscape

    def evaluate(self, code: str, task) -> EvaluationResult:
        return self.landscape.score(code)

    def close(self) -> None:
        pass


class ProtocolEvaluator:
    """Client for an external evaluation worker speaking NDJSON on stdio.

    The worker is spawned from ``cmd``; it announces itself with a ready
    message carrying its protocol version, accepts evaluate requests, and
    answers each by id (responses may arrive out of order). A dead or
    unresponsive worker is restarted and the request retried a bounded
    number of times before the evaluator gives up.
    """

    kind = "protocol"

    def __init__(
        self,
        cmd: list[str],
        timeout_s: float = 300.0,
        restart_retries: int = 2,
        response_grace_s: float = 60.0,
        ready_timeout_s: float = 120.0,
    ):
        if not cmd:
            raise EvaluationError("evaluator command must be non-empty")
        self.cmd = list(cmd)
        self.timeout_s = timeout_s
        self.restart_retries = restart_retries
        self.response_grace_s = response_grace_s
        self.ready_timeout_s = ready_timeout_s
        self._proc: subprocess.Popen | None = None
        self._reader: threading.Thread | None = None
        self._cond = threading.Condition()
        self._responses: dict[str, dict] = {}
        self._ready = False
        self._dead = True
        self._write_lock = threading.Lock()
        self._start_lock = threading.Lock()
        self._ids = itertools.count(1)

    # -- process lifecycle -------------------------------------------------

    def _spawn(self) -> None:
        self._shutdown_proc()
        proc = subprocess.Popen(
            self.cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        with self._cond:
            self._proc = proc
            self._responses.clear()
            self._ready = False
            self._dead = False
        reader = threading.Thread(target=self._pump, args=(proc,), daemon=True)
        reader.start()
        self._reader = reader

    def _pump(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                msg = json.loads(line)
            except json.JSONDecodeError:
                continue
            if not isinstance(msg, dict):
                continue
            with self._cond:
                if proc is not self._proc:
                    return
                if msg.get("type") == "ready":
                    if msg.get("protocol_version") != PROTOCOL_VERSION:
                        # Version mismatch is unrecoverable; flag and stop.
                        self._dead = True
                        self._cond.notify_all()
                        return
                    self._ready = True
                elif "id" in msg:
                    self._responses[str(msg["id"])] = msg
                self._cond.notify_all()
        with self._cond:
            if proc is self._proc:
                self._dead = True
                self._cond.notify_all()

    def _ensure_started(self) -> None:
        with self._start_lock:
            with self._cond:
                alive = self._proc is not None and not self._dead
            if not alive:
                self._spawn()

    def _wait_ready(self) -> bool:
        with self._cond:
            ok = self._cond.wait_for(
                lambda: self._ready or self._dead, timeout=self.ready_timeout_s
            )
            return bool(ok) and not self._dead

    def _shutdown_proc(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            proc.terminate()
            proc.wait(timeout=5)
        except Exception:
            try:
                proc.kill()
                proc.wait(timeout=5)
            except Exception:
                pass

    def close(self) -> None:
        with self._cond:
            self._dead = True
            self._cond.notify_all()
        self._shutdown_proc()
        self._proc = None

    # -- request path ------------------------------------------------------

    def evaluate(self, code: str, task) -> EvaluationResult:
        last_failure = "never started"
        for _ in range(self.restart_retries + 1):
            self._ensure_started()
            if not self._wait_ready():
                last_failure = "worker did not become ready"
                with self._cond:
                    self._dead = True
                continue
            req_id = str(next(self._ids))
            request = {
                "id": req_id,
                "type": "evaluate",
                "task_id": task.task_id,
                "code": code,
                "timeout_s": self.timeout_s,
            }
            try:
                with self._write_lock:
                    assert self._proc is not None and self._proc.stdin is not None
                    self._proc.stdin.write(json.dumps(request) + "\n")
                    self._proc.stdin.flush()
            except (OSError, ValueError, AssertionError):
                last_failure = "write to worker failed"
                with self._cond:
                    self._dead = True
                continue
            wait_s = self.timeout_s + self.response_grace_s
            with self._cond:
                got = self._cond.wait_for(
                    lambda: req_id in self._responses or self._dead, timeout=wait_s
                )
                msg = self._responses.pop(req_id, None)
            if msg is not None:
                return self._to_result(msg)
            last_failure = "worker died" if not got or self._dead else "response timed out"
            with self._cond:
                self._dead = True
        self.close()
        raise EvaluatorUnavailable(
            f"evaluator {self.cmd[0]} unusable after "
            f"{self.restart_retries + 1} attempts: {last_failure}"
        )

    @staticmethod
    def _to_result(msg: dict) -> EvaluationResult:
        status = msg.get("status")
        if status not in STATUSES:
            raise EvaluationError(f"worker sent unknown status: {status!r}")
        return EvaluationResult(
            status=status,
            runtime_ms=msg.get("runtime_ms"),
            error_summary=msg.get("error_summary"),
            max_abs_violation=msg.get("max_abs_violation"),
        )


@dataclass(frozen=True)
class FixLoopOutcome:
    """Result of evaluating a candidate through the capped fix loop."""

    result: EvaluationResult
    code: str
    attempts: int
    budget_stopped: bool


def evaluate_with_fixing(
    code: str,
    task,
    evaluator,
    *,
    max_attempts: int,
    request_fix,
    on_result=None,
) -> FixLoopOutcome:
    """Evaluate a candidate, asking the fixer to repair failures.

    ``request_fix(broken_code, error_summary)`` returns repaired source or
    None when the query budget cannot cover another fix; a None ends the
    loop with ``budget_stopped`` set. At most ``max_attempts`` fixes are
    requested, and the loop stops early on the first ok verdict.
    ``on_result(code, result, attempts)`` observes every evaluation in
    order, starting with the unfixed candidate at zero attempts.
    """
    if max_attempts < 0:
        raise EvaluationError("max_attempts must be non-negative")
    result = evaluator.evaluate(code, task)
    attempts = 0
    budget_stopped = False
    if on_result is not None:
        on_result(code, result, attempts)
    while not result.is_ok and attempts < max_attempts:
        fixed = request_fix(code, result.error_summary)
        if fixed is None:
            budget_stopped = True
            break
        attempts += 1
        code = fixed
        result = evaluator.evaluate(code, task)
        if on_result is not None:
            on_result(code, result, attempts)
    return FixLoopOutcome(
        result=result, code=code, attempts=attempts, budget_stopped=budget_stopped
    )


def dispatch_parallel(fn, items, width: int) -> list:
    """Run ``fn(index, item)`` over items with at most ``width`` threads.

    Results come back in submission order. Width one (or a single item)
    runs inline on the calling thread, which keeps scripted runs exactly
    sequential.
    """
    items = list(items)
    if width < 1:
        raise ValueError("width must be >= 1")
    if width == 1 or len(items) <= 1:
        return [fn(i, item) for i, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=width) as pool:
        futures = [pool.submit(fn, i, item) for i, item in enumerate(items)]
        return [f.result() for f in futures]
