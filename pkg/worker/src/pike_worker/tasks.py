"""Task manifests: what program to evaluate and how to drive it.

A task lives in its own directory as ``task.yaml`` plus the original
program source (``model.py`` unless the manifest says otherwise), the
same layout the search side reads. The worker additionally honors
``atol``/``rtol`` tolerance overrides and a ``timing`` block in the
manifest. Entry metadata names the pieces of the module to call:

- ``entry_point``: class or function holding the reference computation
  (default ``Model``; classes are instantiated, functions called as-is)
- ``inputs``: zero-argument function returning the list of call arguments
  (default ``get_inputs``)
- ``init_inputs``: optional zero-argument function returning constructor
  arguments (default ``get_init_inputs``, used only when defined)
- ``candidate_entry``: name the optimized program is expected to define
  (default ``ModelNew``, falling back to ``entry_point``)
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .timing import TimingConfig

DEFAULT_TOLERANCE = 0.01

_TASK_ID_PATTERN = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")


class WorkerTaskError(Exception):
    """Raised on missing or structurally invalid task directories."""


@dataclass(frozen=True)
class WorkerTask:
    """One evaluatable task: original source plus how to run and judge it."""

    task_id: str
    source_code: str
    entry_metadata: dict = field(default_factory=dict)
    atol: float = DEFAULT_TOLERANCE
    rtol: float = DEFAULT_TOLERANCE
    timing: TimingConfig = field(default_factory=TimingConfig)

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValueError("task_id must be non-empty")
        if not self.source_code.strip():
            raise ValueError("source_code must be non-empty")
        if self.atol < 0 or self.rtol < 0:
            raise ValueError("tolerances must be non-negative")

    @property
    def entry_point(self) -> str:
        return self.entry_metadata.get("entry_point", "Model")

    @property
    def inputs_builder(self) -> str:
        return self.entry_metadata.get("inputs", "get_inputs")

    @property
    def init_inputs_builder(self) -> str:
        return self.entry_metadata.get("init_inputs", "get_init_inputs")

    @property
    def candidate_entry(self) -> str:
        return self.entry_metadata.get("candidate_entry", "ModelNew")


def load_worker_task(task_dir: str | Path) -> WorkerTask:
    """Load a task directory into a WorkerTask."""
    task_dir = Path(task_dir)
    manifest_path = task_dir / "task.yaml"
    if not manifest_path.is_file():
        raise WorkerTaskError(f"missing task manifest: {manifest_path}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = yaml.safe_load(f) or {}
    if not isinstance(manifest, dict):
        raise WorkerTaskError(f"task manifest must be a mapping: {manifest_path}")
    source_path = task_dir / manifest.get("source_file", "model.py")
    if not source_path.is_file():
        raise WorkerTaskError(f"missing task source file: {source_path}")
    timing_block = manifest.get("timing", {})
    if not isinstance(timing_block, dict):
        raise WorkerTaskError(f"timing block must be a mapping: {manifest_path}")
    try:
        return WorkerTask(
            task_id=str(manifest.get("task_id", task_dir.name)),
            source_code=source_path.read_text(encoding="utf-8"),
            entry_metadata=dict(manifest.get("entry_metadata", {})),
            atol=float(manifest.get("atol", DEFAULT_TOLERANCE)),
            rtol=float(manifest.get("rtol", DEFAULT_TOLERANCE)),
            timing=TimingConfig.from_dict(timing_block),
        )
    except (ValueError, TypeError) as exc:
        raise WorkerTaskError(f"invalid task manifest {manifest_path}: {exc}") from exc


def resolve_task_dir(tasks_root: str | Path, task_id: str) -> Path:
    """Map a request's task_id to its directory under the tasks root.

    Only plain directory names are accepted; ids carrying path syntax are
    rejected so requests cannot escape the root.
    """
    if not _TASK_ID_PATTERN.fullmatch(task_id) or ".." in task_id:
        raise WorkerTaskError(f"malformed task_id: {task_id!r}")
    task_dir = Path(tasks_root) / task_id
    if not task_dir.is_dir():
        raise WorkerTaskError(f"unknown task_id: {task_id!r}")
    return task_dir


def derive_seed(task_id: str) -> int:
    """Deterministic RNG seed for a task, stable across runs and hosts."""
    digest = hashlib.sha256(task_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % (2**31)
