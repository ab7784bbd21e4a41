"""Single-evaluation child process.

The serving loop spawns one of these per request: it reads an evaluation
payload as one JSON line on stdin, runs the full pipeline (syntax gate,
gold output, candidate execution, correctness, timing), writes protocol
lines on a private copy of stdout, and exits. Process teardown between
requests is what guarantees isolation: nothing a candidate does here can
leak into the next evaluation.

Two hardening details matter. The candidate source is byte-compiled
before anything heavyweight is imported, so syntax errors come back in
milliseconds without paying the ML-runtime import cost. And file
descriptor 1 is rebound to stderr before any task code runs, so a
candidate that prints to stdout (even from native code) cannot corrupt
the protocol stream.
"""

from __future__ import annotations

import copy
import json
import os
import random
import sys
import traceback

from .correctness import CorrectnessTypeError, check_correctness
from .timing import TimingConfig, exclusive_timing_lock, time_solution

SUMMARY_LINES = 12
SUMMARY_CHARS = 2000


def summarize_exception(exc: BaseException) -> str:
    """Last lines of the traceback, bounded so responses stay small."""
    lines = traceback.format_exception(type(exc), exc, exc.__traceback__)
    tail = "".join(lines[-SUMMARY_LINES:]).strip()
    if len(tail) > SUMMARY_CHARS:
        tail = tail[-SUMMARY_CHARS:]
    return tail


def seed_everything(seed: int) -> None:
    """Seed every RNG framework that is actually loaded.

    Frameworks are looked up rather than imported: if the task never
    pulled one in, it has no RNG state worth seeding.
    """
    random.seed(seed)
    numpy = sys.modules.get("numpy")
    if numpy is not None:
        numpy.random.seed(seed % 2**32)
    torch = sys.modules.get("torch")
    if torch is not None:
        torch.manual_seed(seed)


def _exec_module(source: str, name: str) -> dict:
    namespace: dict = {"__name__": name}
    code = compile(source, name, "exec")
    exec(code, namespace)
    return namespace


def _materialize(namespace: dict, entry_name: str, init_args) -> object:
    entry = namespace.get(entry_name)
    if entry is None:
        raise KeyError(f"module defines no entry point named {entry_name!r}")
    if isinstance(entry, type):
        return entry(*init_args)
    if not callable(entry):
        raise TypeError(f"entry point {entry_name!r} is not callable")
    return entry


class _Emitter:
    """Writes protocol lines to the private stdout handle."""

    def __init__(self, stream):
        self.stream = stream

    def phase(self, name: str) -> None:
        self.stream.write(json.dumps({"type": "phase", "phase": name}) + "\n")
        self.stream.flush()

    def result(self, status: str, **fields) -> None:
        payload = {"type": "result", "status": status}
        payload.update({k: v for k, v in fields.items() if v is not None})
        self.stream.write(json.dumps(payload) + "\n")
        self.stream.flush()


def run_evaluation(payload: dict, emit: _Emitter) -> None:
    """Run one evaluation and emit exactly one result line."""
    code = payload["code"]
    # Cheap syntax gate first: no task imports, no runtime cost.
    try:
        compile(code, "<candidate>", "exec")
    except SyntaxError as exc:
        emit.result("compile_error", error_summary=summarize_exception(exc))
        return

    seed = int(payload["seed"])
    atol = float(payload.get("atol", 0.01))
    rtol = float(payload.get("rtol", 0.01))
    timing = TimingConfig.from_dict(payload.get("timing", {}))
    entry_point = payload.get("entry_point", "Model")
    candidate_entry = payload.get("candidate_entry", "ModelNew")
    inputs_builder = payload.get("inputs_builder", "get_inputs")
    init_builder = payload.get("init_inputs_builder", "get_init_inputs")

    # Reference side: module, constructor args, seeded weights, seeded
    # inputs, gold output. Failures here are the task's fault, not the
    # candidate's, but the protocol has no better status than runtime_error.
    try:
        original_ns = _exec_module(payload["source_code"], "<original>")
        seed_everything(seed)
        builder = original_ns.get(init_builder)
        init_args = list(builder()) if callable(builder) else []
        candidate_init_args = copy.deepcopy(init_args)
        original = _materialize(original_ns, entry_point, init_args)
        seed_everything(seed + 1)
        inputs_fn = original_ns.get(inputs_builder)
        if not callable(inputs_fn):
            raise KeyError(f"task defines no input builder named {inputs_builder!r}")
        inputs = list(inputs_fn())
        candidate_inputs = copy.deepcopy(inputs)
        timing_inputs = copy.deepcopy(inputs)
        gold = original(*inputs)
    except Exception as exc:
        emit.result(
            "runtime_error",
            error_summary="task setup failed: " + summarize_exception(exc),
        )
        return

    # From here on the clock belongs to the candidate; the parent arms
    # the request timeout when it sees this marker.
    emit.phase("candidate")
    try:
        candidate_ns = _exec_module(code, "<candidate>")
    except SyntaxError as exc:
        emit.result("compile_error", error_summary=summarize_exception(exc))
        return
    except Exception as exc:
        emit.result("runtime_error", error_summary=summarize_exception(exc))
        return
    try:
        seed_everything(seed)
        entry_name = (
            candidate_entry if candidate_entry in candidate_ns else entry_point
        )
        candidate = _materialize(candidate_ns, entry_name, candidate_init_args)
        other = candidate(*candidate_inputs)
    except Exception as exc:
        emit.result("runtime_error", error_summary=summarize_exception(exc))
        return

    try:
        report = check_correctness(gold, other, atol=atol, rtol=rtol)
    except CorrectnessTypeError as exc:
        emit.result("runtime_error", error_summary=str(exc))
        return
    if not report.passed:
        emit.result(
            "incorrect",
            error_summary=report.detail or "output mismatch",
            max_abs_violation=report.max_violation,
        )
        return

    try:
        with exclusive_timing_lock():
            runtime_ms = time_solution(lambda: candidate(*timing_inputs), timing)
    except Exception as exc:
        emit.result("runtime_error", error_summary=summarize_exception(exc))
        return
    emit.result("ok", runtime_ms=runtime_ms)


def main() -> int:
    line = sys.stdin.readline()
    if not line.strip():
        return 2
    payload = json.loads(line)
    # Claim fd 1 for the protocol, then point stdout at stderr so task
    # and candidate prints (Python or native) cannot touch the wire.
    protocol = os.fdopen(os.dup(1), "w", buffering=1)
    os.dup2(2, 1)
    sys.stdout = sys.stderr
    emit = _Emitter(protocol)
    try:
        run_evaluation(payload, emit)
    except Exception as exc:  # belt and braces: never die silently
        emit.result(
            "runtime_error",
            error_summary="evaluation harness failed: " + summarize_exception(exc),
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
