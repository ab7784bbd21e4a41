"""Serving loop: NDJSON requests on stdin, responses on stdout.

On start the worker announces itself with a ready line carrying the
protocol version, then answers evaluate requests one at a time until
stdin closes. Every request with an id gets exactly one response with
that id; lines that cannot carry a response (blank, unparseable, or
missing an id) are logged to stderr and skipped.

Each evaluation runs in a fresh child process. The child reports a phase
marker once task setup is done, which is when the request's timeout
starts counting; a child that overruns it is killed and answered with a
timeout status. A child that dies without producing a result (crash,
hard exit, kill signal) is answered with a runtime error carrying the
tail of its stderr. The loop itself never dies from a candidate.
"""

from __future__ import annotations

import json
import os
import queue
import signal
import subprocess
import sys
import threading
import time
from collections import deque
from pathlib import Path

from .tasks import WorkerTaskError, derive_seed, load_worker_task, resolve_task_dir

PROTOCOL_VERSION = 1

DEFAULT_TIMEOUT_S = 300.0
DEFAULT_SETUP_TIMEOUT_S = 120.0

_EOF = object()


def _pump_lines(stream, out_queue: queue.Queue) -> None:
    for line in stream:
        out_queue.put(line)
    out_queue.put(_EOF)


def _collect_tail(stream, tail: deque) -> None:
    for line in stream:
        tail.append(line.rstrip("\n"))


class WorkerServer:
    """Answers evaluate requests by spawning one child per request."""

    def __init__(
        self,
        tasks_root: str | Path,
        setup_timeout_s: float = DEFAULT_SETUP_TIMEOUT_S,
        child_cmd: list[str] | None = None,
    ):
        self.tasks_root = Path(tasks_root)
        self.setup_timeout_s = setup_timeout_s
        self.child_cmd = list(child_cmd or [sys.executable, "-m", "pike_worker.sandbox"])

    # -- request handling ----------------------------------------------------

    def handle_request(self, request: dict) -> dict:
        """Map one evaluate request to one response document."""
        req_id = request["id"]
        if request.get("type") != "evaluate":
            return self._error(
                req_id, f"unsupported request type: {request.get('type')!r}"
            )
        code = request.get("code")
        if not isinstance(code, str):
            return self._error(req_id, "request carries no candidate code")
        timeout_s = request.get("timeout_s", DEFAULT_TIMEOUT_S)
        if not isinstance(timeout_s, (int, float)) or timeout_s <= 0:
            return self._error(req_id, f"invalid timeout_s: {timeout_s!r}")
        task_id = request.get("task_id")
        try:
            task = load_worker_task(resolve_task_dir(self.tasks_root, str(task_id)))
        except WorkerTaskError as exc:
            return self._error(req_id, str(exc))
        result = self._evaluate_in_child(task, code, float(timeout_s))
        response = {"id": req_id, "status": result.pop("status")}
        response.update(result)
        return response

    @staticmethod
    def _error(req_id, summary: str) -> dict:
        return {"id": req_id, "status": "runtime_error", "error_summary": summary}

    # -- child orchestration ---------------------------------------------------

    def _evaluate_in_child(self, task, code: str, timeout_s: float) -> dict:
        payload = {
            "source_code": task.source_code,
            "code": code,
            "seed": derive_seed(task.task_id),
            "atol": task.atol,
            "rtol": task.rtol,
            "timing": task.timing.to_dict(),
            "entry_point": task.entry_point,
            "candidate_entry": task.candidate_entry,
            "inputs_builder": task.inputs_builder,
            "init_inputs_builder": task.init_inputs_builder,
        }
        proc = subprocess.Popen(
            self.child_cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            start_new_session=True,
        )
        lines: queue.Queue = queue.Queue()
        stderr_tail: deque = deque(maxlen=60)
        threading.Thread(
            target=_pump_lines, args=(proc.stdout, lines), daemon=True
        ).start()
        threading.Thread(
            target=_collect_tail, args=(proc.stderr, stderr_tail), daemon=True
        ).start()
        try:
            proc.stdin.write(json.dumps(payload) + "\n")
            proc.stdin.flush()
            proc.stdin.close()
        except (OSError, ValueError):
            pass  # an instantly-dead child surfaces through the queue

        candidate_phase = False
        deadline = time.monotonic() + self.setup_timeout_s
        try:
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return self._timeout_result(proc, candidate_phase, timeout_s)
                try:
                    line = lines.get(timeout=remaining)
                except queue.Empty:
                    return self._timeout_result(proc, candidate_phase, timeout_s)
                if line is _EOF:
                    return self._died_result(proc, stderr_tail)
                try:
                    message = json.loads(line)
                except json.JSONDecodeError:
                    continue  # stray child output; the protocol ignores it
                if not isinstance(message, dict):
                    continue
                if message.get("type") == "phase":
                    if message.get("phase") == "candidate":
                        candidate_phase = True
                        deadline = time.monotonic() + timeout_s
                    continue
                if message.get("type") == "result":
                    message.pop("type")
                    return message
        finally:
            self._reap(proc)

    def _timeout_result(self, proc, candidate_phase: bool, timeout_s: float) -> dict:
        self._kill(proc)
        if candidate_phase:
            return {
                "status": "timeout",
                "error_summary": f"candidate exceeded the {timeout_s:g}s evaluation timeout",
            }
        return {
            "status": "runtime_error",
            "error_summary": (
                f"task setup exceeded {self.setup_timeout_s:g}s before the "
                "candidate ever ran"
            ),
        }

    def _died_result(self, proc, stderr_tail: deque) -> dict:
        returncode = proc.wait()
        tail = "\n".join(stderr_tail).strip()
        summary = f"candidate subprocess died with exit code {returncode}"
        if tail:
            summary += ":\n" + tail[-1500:]
        return {"status": "runtime_error", "error_summary": summary}

    @staticmethod
    def _kill(proc) -> None:
        # The child leads its own session, so the whole process group goes.
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError, OSError):
            try:
                proc.kill()
            except OSError:
                pass

    def _reap(self, proc) -> None:
        if proc.poll() is None:
            self._kill(proc)
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            pass

    # -- serving loop ------------------------------------------------------------

    def serve(self, stdin=None, stdout=None) -> None:
        """Announce readiness, then answer requests until EOF."""
        stdin = stdin if stdin is not None else sys.stdin
        stdout = stdout if stdout is not None else sys.stdout
        self._emit(stdout, {"type": "ready", "protocol_version": PROTOCOL_VERSION})
        if not self.tasks_root.is_dir():
            print(
                f"pike_worker: tasks root {self.tasks_root} does not exist yet; "
                "requests will fail until it does",
                file=sys.stderr,
            )
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            try:
                request = json.loads(line)
            except json.JSONDecodeError:
                print("pike_worker: skipping unparseable request line", file=sys.stderr)
                continue
            if not isinstance(request, dict) or "id" not in request:
                print("pike_worker: skipping request without an id", file=sys.stderr)
                continue
            try:
                response = self.handle_request(request)
            except Exception as exc:  # the loop outlives every surprise
                response = self._error(request["id"], f"worker error: {exc}")
            self._emit(stdout, response)

    @staticmethod
    def _emit(stdout, document: dict) -> None:
        stdout.write(json.dumps(document) + "\n")
        stdout.flush()
