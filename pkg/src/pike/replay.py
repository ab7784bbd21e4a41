"""Deterministic replay: re-run a scripted report and diff every step.

A report header carries the full strategy, backend, pricing, and evaluator
sections plus the task itself, so a run backed by a response script and a
synthetic landscape can be reconstructed exactly. Replay re-executes the
run in memory and compares step records field by field (timestamps aside),
then the footers. Any difference is a divergence, reported with its
sequence number and field.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .agents import MockBackend
from .config import (
    BackendConfig,
    EvaluatorConfig,
    RunConfig,
    StrategyConfig,
)
from .agents import PricingEntry
from .controller import _file_sha256, run_search
from .evaluation import ProtocolEvaluator, SyntheticEvaluator, SyntheticLandscape
from .library import Task
from .report import RunReport
from .sampling import SamplerConfig


class ReplayError(Exception):
    """Raised when a report cannot be replayed at all."""


@dataclass(frozen=True)
class Divergence:
    """One field that differed between the original and replayed run."""

    sequence: int | None
    field: str
    original: object
    replayed: object

    def describe(self) -> str:
        where = "footer" if self.sequence is None else f"step {self.sequence}"
        return f"{where}: {self.field}: {self.original!r} -> {self.replayed!r}"


@dataclass(frozen=True)
class ReplayResult:
    steps_compared: int
    divergences: tuple[Divergence, ...]

    @property
    def ok(self) -> bool:
        return not self.divergences


_FOOTER_COMPARED = (
    "best_solution_id",
    "best_objective",
    "clamped_speedup",
    "total_queries",
    "total_dollars",
    "per_agent",
    "valid_solutions",
    "complete",
    "stop_reason",
)


def _zero() -> float:
    return 0.0


def config_from_header(header: dict) -> RunConfig:
    """Rebuild the RunConfig recorded in a report header."""
    strategy_data = dict(header["strategy"])
    sampler = SamplerConfig(**strategy_data.pop("sampler"))
    strategy = StrategyConfig(sampler=sampler, **strategy_data)
    backend_data = dict(header["backend"])
    backend_data.pop("script_sha256", None)
    backend = BackendConfig(**backend_data)
    evaluator_data = dict(header["evaluator"])
    evaluator_data.pop("landscape", None)
    if "cmd" in evaluator_data:
        evaluator_data["cmd"] = tuple(evaluator_data["cmd"])
    evaluator = EvaluatorConfig(**evaluator_data)
    pricing = {
        model: PricingEntry(rates["input_per_million"], rates["output_per_million"])
        for model, rates in header["pricing"].items()
    }
    return RunConfig(
        strategy=strategy, backend=backend, pricing=pricing, evaluator=evaluator
    )


def task_from_header(header: dict) -> Task:
    t = header["task"]
    return Task(
        task_id=t["task_id"],
        source_code=t["source_code"],
        level_tag=t["level_tag"],
        entry_metadata=dict(t["entry_metadata"]),
        reference_runtime_ms=t["reference_runtime_ms"],
    )


def replay_report(
    report: RunReport, *, script_path: str | Path | None = None
) -> ReplayResult:
    """Re-run a scripted report and list every divergence.

    Only runs recorded against the scripted backend can be replayed; the
    script file must still exist (``script_path`` overrides the recorded
    location) and must hash to the recorded digest.
    """
    config = config_from_header(report.header)
    if config.backend.kind != "mock":
        raise ReplayError(
            "only runs with a scripted backend replay deterministically; "
            f"this report used backend kind {config.backend.kind!r}"
        )
    path = Path(script_path) if script_path else Path(config.backend.script_path)
    if not path.is_file():
        raise ReplayError(f"response script not found: {path}")
    recorded_sha = report.header["backend"].get("script_sha256")
    if recorded_sha and _file_sha256(str(path)) != recorded_sha:
        raise ReplayError(
            f"response script {path} does not match the recorded digest"
        )

    config = dataclasses.replace(
        config, backend=dataclasses.replace(config.backend, script_path=str(path))
    )
    agents_pool = _agents_for_replay(config, path)
    evaluator = _evaluator_for_replay(report.header, config)
    task = task_from_header(report.header)
    clock = _zero if report.header.get("clock") == "zero" else None
    replayed = run_search(task, config, agents_pool, evaluator, clock=clock)
    return _diff(report, replayed)


def _agents_for_replay(config: RunConfig, script_path: Path):
    from .agents import AgentPool

    backend = MockBackend.load(str(script_path), model=config.backend.model)
    return AgentPool(optimize=backend, models=dict(config.backend.role_models))


def _evaluator_for_replay(header: dict, config: RunConfig):
    ev = header["evaluator"]
    if ev["kind"] == "synthetic":
        landscape = ev.get("landscape")
        if landscape is not None:
            return SyntheticEvaluator(SyntheticLandscape.from_dict(landscape))
        if config.evaluator.landscape_path:
            return SyntheticEvaluator(
                SyntheticLandscape.from_file(config.evaluator.landscape_path)
            )
        raise ReplayError("report carries no landscape to replay against")
    return ProtocolEvaluator(list(config.evaluator.cmd), timeout_s=config.evaluator.timeout_s)


def _diff(original: RunReport, replayed: RunReport) -> ReplayResult:
    divergences: list[Divergence] = []
    if len(original.steps) != len(replayed.steps):
        divergences.append(
            Divergence(
                sequence=None,
                field="step_count",
                original=len(original.steps),
                replayed=len(replayed.steps),
            )
        )
    for old, new in zip(original.steps, replayed.steps):
        old_view = old.replay_view()
        new_view = new.replay_view()
        for key in old_view:
            if old_view[key] != new_view.get(key):
                divergences.append(
                    Divergence(
                        sequence=old.sequence,
                        field=key,
                        original=old_view[key],
                        replayed=new_view.get(key),
                    )
                )
    for key in _FOOTER_COMPARED:
        if original.footer.get(key) != replayed.footer.get(key):
            divergences.append(
                Divergence(
                    sequence=None,
                    field=key,
                    original=original.footer.get(key),
                    replayed=replayed.footer.get(key),
                )
            )
    return ReplayResult(
        steps_compared=min(len(original.steps), len(replayed.steps)),
        divergences=tuple(divergences),
    )
