"""Solution library: per-island history with a pinned elite archive.

The library stores every valid solution discovered during a run. Each island
keeps its own insertion-ordered history plus an elite archive holding the
top solutions by objective. When a memory window is configured, old
non-elite entries are evicted from the history so prompts stay focused on
recent work, but archive members are pinned and never evicted. The archive
is therefore always a subset of the live history.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .agents import TokenUsage

TASK_SOLUTION_ID = 0


class LibraryError(Exception):
    """Raised on structurally invalid library operations."""


@dataclass(frozen=True)
class Task:
    """An optimization task: a program to speed up plus how to run it.

    ``entry_metadata`` carries evaluator-facing details such as the model
    class name and input builder function. ``reference_runtime_ms`` is the
    baseline runtime that objectives are measured against; when absent the
    controller measures it once before the run starts.
    """

    task_id: str
    source_code: str
    level_tag: str = "unspecified"
    entry_metadata: dict = field(default_factory=dict)
    reference_runtime_ms: float | None = None

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValueError("task_id must be non-empty")
        if self.reference_runtime_ms is not None and self.reference_runtime_ms <= 0:
            raise ValueError("reference_runtime_ms must be positive")

    @property
    def source_sha256(self) -> str:
        return hashlib.sha256(self.source_code.encode("utf-8")).hexdigest()


def load_task(task_dir: str | Path) -> Task:
    """Load a task directory: a manifest plus the program source file.

    The manifest ``task.yaml`` names the source file (default ``model.py``)
    and carries id, level tag, entry metadata, and an optional reference
    runtime in milliseconds.
    """
    task_dir = Path(task_dir)
    manifest_path = task_dir / "task.yaml"
    if not manifest_path.is_file():
        raise LibraryError(f"missing task manifest: {manifest_path}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = yaml.safe_load(f) or {}
    if not isinstance(manifest, dict):
        raise LibraryError(f"task manifest must be a mapping: {manifest_path}")
    source_file = manifest.get("source_file", "model.py")
    source_path = task_dir / source_file
    if not source_path.is_file():
        raise LibraryError(f"missing task source file: {source_path}")
    return Task(
        task_id=str(manifest.get("task_id", task_dir.name)),
        source_code=source_path.read_text(encoding="utf-8"),
        level_tag=str(manifest.get("level_tag", "unspecified")),
        entry_metadata=dict(manifest.get("entry_metadata", {})),
        reference_runtime_ms=manifest.get("reference_runtime_ms"),
    )


@dataclass(frozen=True)
class SolutionRecord:
    """One valid optimized program kept in the library."""

    solution_id: int
    code: str
    objective: float
    runtime_ms: float
    island_index: int = 0
    parent_ids: tuple[int, ...] = ()
    idea: str | None = None
    fix_attempts: int = 0
    usage: TokenUsage = field(default_factory=lambda: TokenUsage(0, 0))
    status: str = "ok"

    def __post_init__(self) -> None:
        if self.solution_id < 0:
            raise ValueError("solution_id must be non-negative")
        if self.objective <= 0:
            raise ValueError("objective must be positive")
        if self.runtime_ms <= 0:
            raise ValueError("runtime_ms must be positive")
        if self.fix_attempts < 0:
            raise ValueError("fix_attempts must be non-negative")


def _task_record(task: Task) -> SolutionRecord:
    # Pseudo-record letting the original program act as a seed and as the
    # fallback best solution; by definition its speedup over itself is 1.
    return SolutionRecord(
        solution_id=TASK_SOLUTION_ID,
        code=task.source_code,
        objective=1.0,
        runtime_ms=task.reference_runtime_ms or 1.0,
        island_index=0,
    )


def _rank_key(record: SolutionRecord) -> tuple[float, int]:
    # Higher objective first; ties broken toward earlier discovery.
    return (-record.objective, record.solution_id)


@dataclass(frozen=True)
class IslandView:
    """Immutable view of one island's state."""

    history: tuple[SolutionRecord, ...]
    archive: tuple[SolutionRecord, ...]


@dataclass(frozen=True)
class LibrarySnapshot:
    """Point-in-time copy of the whole library, safe to read concurrently."""

    task: Task
    task_record: SolutionRecord
    islands: tuple[IslandView, ...]

    def history(self, island_index: int) -> tuple[SolutionRecord, ...]:
        self._check_island(island_index)
        return self.islands[island_index].history

    def elite_set(self, island_index: int) -> tuple[SolutionRecord, ...]:
        self._check_island(island_index)
        return self.islands[island_index].archive

    def _check_island(self, island_index: int) -> None:
        if not 0 <= island_index < len(self.islands):
            raise LibraryError(
                f"island {island_index} out of range (have {len(self.islands)})"
            )


class Library:
    """Thread-safe store of valid solutions across islands.

    Invariants maintained on every insert:

    * the archive holds the top ``archive_capacity`` solutions of its island
      by objective, ties broken by ascending solution id,
    * archive members are never evicted from history,
    * with a memory window of w, at most w entries live in each island's
      history beyond those pinned by the archive rule.
    """

    def __init__(
        self,
        task: Task,
        *,
        islands: int = 1,
        archive_capacity: int = 4,
        memory_window: int | None = None,
    ):
        if islands < 1:
            raise LibraryError("need at least one island")
        if archive_capacity < 1:
            raise LibraryError("archive_capacity must be >= 1")
        if memory_window is not None and memory_window < 1:
            raise LibraryError("memory_window must be >= 1 when set")
        self.task = task
        self.task_record = _task_record(task)
        self.archive_capacity = archive_capacity
        self.memory_window = memory_window
        self._histories: list[list[SolutionRecord]] = [[] for _ in range(islands)]
        self._archives: list[list[SolutionRecord]] = [[] for _ in range(islands)]
        self._lock = threading.Lock()
        self._next_id = TASK_SOLUTION_ID + 1
        self._seen_ids: set[int] = {TASK_SOLUTION_ID}

    @property
    def islands(self) -> int:
        return len(self._histories)

    def allocate_id(self) -> int:
        """Reserve the next solution id in discovery order."""
        with self._lock:
            sid = self._next_id
            self._next_id += 1
            return sid

    def insert(self, record: SolutionRecord) -> SolutionRecord:
        """Insert a valid solution, updating archive and applying eviction."""
        if record.status != "ok":
            raise LibraryError(
                f"only valid solutions enter the library (status={record.status!r})"
            )
        if not 0 <= record.island_index < self.islands:
            raise LibraryError(
                f"island {record.island_index} out of range (have {self.islands})"
            )
        with self._lock:
            if record.solution_id in self._seen_ids:
                raise LibraryError(f"duplicate solution id {record.solution_id}")
            self._seen_ids.add(record.solution_id)
            if record.solution_id >= self._next_id:
                self._next_id = record.solution_id + 1
            history = self._histories[record.island_index]
            archive = self._archives[record.island_index]
            history.append(record)
            merged = sorted(archive + [record], key=_rank_key)
            archive[:] = merged[: self.archive_capacity]
            if self.memory_window is not None:
                pinned = {r.solution_id for r in archive}
                while len(history) > self.memory_window:
                    victim = next(
                        (r for r in history if r.solution_id not in pinned), None
                    )
                    if victim is None:
                        break
                    history.remove(victim)
        return record

    def history(self, island_index: int) -> tuple[SolutionRecord, ...]:
        with self._lock:
            self._check_island(island_index)
            return tuple(self._histories[island_index])

    def elite_set(self, island_index: int) -> tuple[SolutionRecord, ...]:
        with self._lock:
            self._check_island(island_index)
            return tuple(self._archives[island_index])

    def snapshot(self) -> LibrarySnapshot:
        with self._lock:
            islands = tuple(
                IslandView(history=tuple(h), archive=tuple(a))
                for h, a in zip(self._histories, self._archives)
            )
        return LibrarySnapshot(task=self.task, task_record=self.task_record, islands=islands)

    def all_records(self) -> tuple[SolutionRecord, ...]:
        """Every live record across islands, by ascending solution id."""
        with self._lock:
            records = [r for h in self._histories for r in h]
        return tuple(sorted(records, key=lambda r: r.solution_id))

    def best(self) -> SolutionRecord:
        """Absolute best live solution; the original task when none exist."""
        with self._lock:
            records = [r for h in self._histories for r in h]
        if not records:
            return self.task_record
        return min(records, key=_rank_key)

    def with_reference(self, reference_runtime_ms: float) -> "Library":
        """Fresh empty library whose task carries a measured baseline."""
        task = replace(self.task, reference_runtime_ms=reference_runtime_ms)
        return Library(
            task,
            islands=self.islands,
            archive_capacity=self.archive_capacity,
            memory_window=self.memory_window,
        )

    def _check_island(self, island_index: int) -> None:
        if not 0 <= island_index < self.islands:
            raise LibraryError(
                f"island {island_index} out of range (have {self.islands})"
            )
