"""Runtime measurement with warmup and mean-of-many-runs timing.

A solution is timed by running it at least once for warmup (absorbing
autotuning and lazy initialization), then repeatedly until both a minimum
run count and a minimum total measured time are reached, and reporting the
mean. Device synchronization happens inside the timed region after each
run so asynchronous backends cannot hide work. On hosts with an
accelerator an exclusive file lock serializes timed regions across worker
processes; on CPU-only hosts the lock is a no-op.
"""

from __future__ import annotations

import statistics
import sys
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

try:
    import fcntl
except ImportError:  # non-POSIX host: locking degrades to a no-op
    fcntl = None


@dataclass(frozen=True)
class TimingConfig:
    """Knobs for the measurement loop; tasks may override them."""

    warmup_runs: int = 1
    min_runs: int = 30
    min_total_ms: float = 100.0

    def __post_init__(self) -> None:
        if self.warmup_runs < 1:
            raise ValueError("at least one warmup run is required")
        if self.min_runs < 1:
            raise ValueError("min_runs must be at least 1")
        if self.min_total_ms < 0:
            raise ValueError("min_total_ms must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "TimingConfig":
        known = {"warmup_runs", "min_runs", "min_total_ms"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown timing fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "warmup_runs": self.warmup_runs,
            "min_runs": self.min_runs,
            "min_total_ms": self.min_total_ms,
        }


def _synchronize() -> None:
    # Only touch the accelerator API if the runtime is already loaded;
    # if it never was, no asynchronous work exists to wait for.
    torch = sys.modules.get("torch")
    if torch is not None and torch.cuda.is_available():
        torch.cuda.synchronize()


def _accelerator_present() -> bool:
    torch = sys.modules.get("torch")
    return torch is not None and torch.cuda.is_available()


def time_solution(fn, config: TimingConfig = TimingConfig()) -> float:
    """Measure ``fn`` and return its mean runtime in milliseconds.

    Runs ``config.warmup_runs`` unmeasured executions, then keeps timing
    until at least ``config.min_runs`` runs and ``config.min_total_ms``
    of measured time have accumulated, whichever takes longer. The
    caller's request timeout bounds pathological candidates.
    """
    for _ in range(config.warmup_runs):
        fn()
        _synchronize()
    samples = []
    total_ms = 0.0
    while len(samples) < config.min_runs or total_ms < config.min_total_ms:
        start = time.perf_counter()
        fn()
        _synchronize()
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        samples.append(elapsed_ms)
        total_ms += elapsed_ms
    return statistics.fmean(samples)


@contextmanager
def exclusive_timing_lock(lock_path: str | Path | None = None, enabled: bool | None = None):
    """Serialize timed regions across processes sharing an accelerator.

    ``enabled`` defaults to whether an accelerator is visible; CPU-only
    hosts (and hosts without fcntl) skip locking entirely.
    """
    if enabled is None:
        enabled = _accelerator_present()
    if not enabled or fcntl is None:
        yield
        return
    path = Path(lock_path) if lock_path else Path(tempfile.gettempdir()) / "pike-worker-timing.lock"
    with open(path, "w") as handle:
        fcntl.flock(handle, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)
