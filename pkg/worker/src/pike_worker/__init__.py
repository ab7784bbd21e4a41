"""Evaluation worker for candidate program optimization.

Serves the NDJSON evaluate protocol: each request names a task, carries
candidate source code, and gets back a status with either a measured
runtime or an error summary. Candidates execute in throwaway child
processes; correctness is judged against the original program's output
under an elementwise tolerance, and runtimes are measured with warmup
plus mean-of-many-runs timing.
"""

from .correctness import CorrectnessReport, CorrectnessTypeError, check_correctness
from .server import PROTOCOL_VERSION, WorkerServer
from .tasks import (
    WorkerTask,
    WorkerTaskError,
    derive_seed,
    load_worker_task,
    resolve_task_dir,
)
from .timing import TimingConfig, exclusive_timing_lock, time_solution

__version__ = "0.1.0"

__all__ = [
    "CorrectnessReport",
    "CorrectnessTypeError",
    "check_correctness",
    "PROTOCOL_VERSION",
    "WorkerServer",
    "WorkerTask",
    "WorkerTaskError",
    "derive_seed",
    "load_worker_task",
    "resolve_task_dir",
    "TimingConfig",
    "exclusive_timing_lock",
    "time_solution",
    "__version__",
]
