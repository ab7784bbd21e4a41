"""Run reports: a JSONL event log capturing everything a run did.

A report is one header line, one step line per charged model query, and one
footer line. Steps carry the prompt hash, seed provenance, evaluation
verdict, token usage, and the run-level cumulative query and dollar
counters at the moment the step settled. Final steps of a candidate
pipeline additionally carry the candidate's final code, so a report is
self-contained: replay and every analytics computation read only the
report (plus the scripted backend it names).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, fields
from pathlib import Path

FORMAT_VERSION = 1

KIND_BRAINSTORM = "brainstorm"
KIND_GENERATE = "generate"
KIND_FIX = "fix"


class ReportError(Exception):
    """Raised on malformed or inconsistent report files."""


@dataclass(frozen=True)
class StepRecord:
    """One charged model query and what became of it."""

    sequence: int
    role: str
    kind: str
    prompt_hash: str
    pipeline: int | None = None
    generation: int | None = None
    worker: int | None = None
    island: int | None = None
    seed_source_id: int | None = None
    parent_ids: tuple[int, ...] = ()
    idea_index: int | None = None
    attempt: int = 0
    status: str | None = None
    runtime_ms: float | None = None
    objective: float | None = None
    final: bool = False
    discarded: bool = False
    budget_stopped: bool = False
    solution_id: int | None = None
    code: str | None = None
    sloc: int | None = None
    usage: dict = field(default_factory=dict)
    cumulative_queries: int = 0
    cumulative_dollars: float = 0.0
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        out = {"record": "step"}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StepRecord":
        kwargs = {f.name: data[f.name] for f in fields(cls) if f.name in data}
        if "parent_ids" in kwargs:
            kwargs["parent_ids"] = tuple(kwargs["parent_ids"])
        return cls(**kwargs)

    def replay_view(self) -> dict:
        """Serialized record without wall-clock noise, for divergence checks."""
        out = self.to_dict()
        out.pop("timestamp")
        return out


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class ReportWriter:
    """Streams report lines to disk while keeping them in memory.

    Steps are sequenced under one lock that also reads the budget ledger's
    cumulative counters, so counters are non-decreasing in sequence order
    even with parallel pipelines. ``clock`` supplies timestamps; a zero
    clock makes scripted runs byte-reproducible.
    """

    def __init__(self, ledger, path: str | Path | None = None, clock=None):
        self._ledger = ledger
        self._clock = clock if clock is not None else _zero_clock
        self._path = Path(path) if path is not None else None
        self._file = open(self._path, "w", encoding="utf-8") if self._path else None
        self._lock = threading.Lock()
        self._sequence = 0
        self.header: dict | None = None
        self.steps: list[StepRecord] = []
        self.footer: dict | None = None

    def write_header(self, header: dict) -> None:
        with self._lock:
            if self.header is not None:
                raise ReportError("header already written")
            self.header = {"record": "header", "format_version": FORMAT_VERSION, **header}
            self._emit(self.header)

    def emit_step(self, **step_fields) -> StepRecord:
        with self._lock:
            if self.header is None:
                raise ReportError("step before header")
            if self.footer is not None:
                raise ReportError("step after footer")
            self._sequence += 1
            queries, dollars = self._ledger.totals()
            record = StepRecord(
                sequence=self._sequence,
                cumulative_queries=queries,
                cumulative_dollars=dollars,
                timestamp=self._clock(),
                **step_fields,
            )
            self.steps.append(record)
            self._emit(record.to_dict())
            return record

    def write_footer(self, footer: dict) -> None:
        with self._lock:
            if self.footer is not None:
                raise ReportError("footer already written")
            self.footer = {"record": "footer", **footer}
            self._emit(self.footer)
            if self._file is not None:
                self._file.close()
                self._file = None

    def close(self) -> None:
        with self._lock:
            if self._file is not None:
                self._file.close()
                self._file = None

    def _emit(self, obj: dict) -> None:
        if self._file is not None:
            self._file.write(_dumps(obj) + "\n")
            self._file.flush()


def _zero_clock() -> float:
    return 0.0


@dataclass(frozen=True)
class RunReport:
    """Parsed report: header, ordered steps, footer."""

    header: dict
    steps: tuple[StepRecord, ...]
    footer: dict

    @property
    def task_id(self) -> str:
        return self.header["task"]["task_id"]

    @property
    def total_queries(self) -> int:
        return self.footer["total_queries"]

    @property
    def total_dollars(self) -> float:
        return self.footer["total_dollars"]

    @property
    def complete(self) -> bool:
        return bool(self.footer.get("complete"))

    def final_steps(self) -> list[StepRecord]:
        """Terminal step of each candidate pipeline, in sequence order."""
        return [s for s in self.steps if s.final and s.pipeline is not None]

    def pipelines(self) -> dict[int, list[StepRecord]]:
        """Steps grouped by candidate pipeline, each group in order."""
        groups: dict[int, list[StepRecord]] = {}
        for step in self.steps:
            if step.pipeline is not None:
                groups.setdefault(step.pipeline, []).append(step)
        return groups

    def solution_code(self, solution_id: int) -> str:
        """Final code of a valid solution; the task source for id zero."""
        if solution_id == 0:
            return self.header["task"]["source_code"]
        for step in self.steps:
            if step.solution_id == solution_id and step.code is not None:
                return step.code
        raise ReportError(f"no code recorded for solution {solution_id}")

    @classmethod
    def from_writer(cls, writer: ReportWriter) -> "RunReport":
        if writer.header is None or writer.footer is None:
            raise ReportError("writer is missing header or footer")
        return cls(
            header=writer.header, steps=tuple(writer.steps), footer=writer.footer
        )


def load_report(path: str | Path) -> RunReport:
    """Parse and structurally validate a report file."""
    header: dict | None = None
    footer: dict | None = None
    steps: list[StepRecord] = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ReportError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            kind = obj.get("record")
            if kind == "header":
                if header is not None:
                    raise ReportError(f"{path}:{line_no}: duplicate header")
                header = obj
            elif kind == "step":
                if header is None:
                    raise ReportError(f"{path}:{line_no}: step before header")
                if footer is not None:
                    raise ReportError(f"{path}:{line_no}: step after footer")
                steps.append(StepRecord.from_dict(obj))
            elif kind == "footer":
                if footer is not None:
                    raise ReportError(f"{path}:{line_no}: duplicate footer")
                footer = obj
            else:
                raise ReportError(f"{path}:{line_no}: unknown record kind {kind!r}")
    if header is None:
        raise ReportError(f"{path}: missing header")
    if footer is None:
        raise ReportError(f"{path}: missing footer")
    _validate_steps(steps, path)
    return RunReport(header=header, steps=tuple(steps), footer=footer)


def _validate_steps(steps: list[StepRecord], path) -> None:
    prev_queries = 0
    prev_dollars = 0.0
    for i, step in enumerate(steps, start=1):
        if step.sequence != i:
            raise ReportError(f"{path}: step {i} has sequence {step.sequence}")
        if step.cumulative_queries < prev_queries:
            raise ReportError(f"{path}: cumulative queries decreased at step {i}")
        if step.cumulative_dollars < prev_dollars - 1e-12:
            raise ReportError(f"{path}: cumulative dollars decreased at step {i}")
        prev_queries = step.cumulative_queries
        prev_dollars = step.cumulative_dollars
