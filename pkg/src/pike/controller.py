"""Run controllers: generational branching and continuous evolution.

Both controllers share one candidate pipeline: reserve a query, ask the
optimizer for code, evaluate it, run the capped fix loop on failures, and
either insert a valid solution into the library or discard the candidate.
They differ only in how seeds are produced. The generational controller
waves through fixed-size generations seeded from the top solutions so far;
the evolutionary controller runs workers that each loop snapshot, seed
selection, generation, and insertion until the budget runs out.
"""

from __future__ import annotations

import hashlib
import itertools
import os
import random
import time
from dataclasses import asdict, dataclass, replace

from .agents import (
    ROLE_BRAINSTORM,
    ROLE_FIX,
    ROLE_OPTIMIZE,
    PROMPT_VERSION,
    AgentError,
    AgentPool,
    MockBackend,
    PricingEntry,
    RemoteBackend,
    build_brainstorm_prompt,
    build_crossover_prompt,
    build_fix_prompt,
    build_mutation_prompt,
    extract_code,
    parse_ideas,
    prompt_hash,
)
from .analytics import count_sloc
from .budget import BudgetLedger
from .config import STRATEGY_EVOLVE, STRATEGY_PIKE_B, RunConfig
from .evaluation import (
    EvaluatorUnavailable,
    ProtocolEvaluator,
    SyntheticEvaluator,
    SyntheticLandscape,
    dispatch_parallel,
    evaluate_with_fixing,
)
from .library import Library, SolutionRecord, Task
from .report import KIND_BRAINSTORM, KIND_FIX, KIND_GENERATE, ReportWriter, RunReport
from .sampling import Seed, next_generation_pikeb, select_seed

STOP_BUDGET = "budget_exhausted"
STOP_WALL_CLOCK = "wall_clock_limit"


class ControllerError(Exception):
    """Raised on unrunnable setups, such as a task that fails its baseline."""


@dataclass(frozen=True)
class CandidateResult:
    """What one candidate pipeline produced.

    ``started`` is False when the query budget could not cover the
    generation query, in which case nothing was charged or recorded.
    """

    started: bool
    record: SolutionRecord | None = None


def build_agents(config: RunConfig) -> AgentPool:
    """Construct the role-to-backend binding described by a config."""
    backend_cfg = config.backend
    if backend_cfg.kind == "mock":
        shared = MockBackend.load(backend_cfg.script_path, model=backend_cfg.model)
        return AgentPool(optimize=shared, models=dict(backend_cfg.role_models))

    def remote(model: str) -> RemoteBackend:
        return RemoteBackend(
            base_url=backend_cfg.base_url,
            model=model,
            api_key=os.environ.get(backend_cfg.api_key_env),
            timeout_s=backend_cfg.timeout_s,
            max_retries=backend_cfg.max_retries,
        )

    backends: dict[str, RemoteBackend] = {}

    def for_role(role: str) -> RemoteBackend:
        model = backend_cfg.role_models.get(role, backend_cfg.model)
        if model not in backends:
            backends[model] = remote(model)
        return backends[model]

    return AgentPool(
        optimize=for_role(ROLE_OPTIMIZE),
        brainstorm=for_role(ROLE_BRAINSTORM),
        fix=for_role(ROLE_FIX),
        models=dict(backend_cfg.role_models),
    )


def build_evaluator(config: RunConfig):
    """Construct the evaluator described by a config."""
    ev = config.evaluator
    if ev.kind == "synthetic":
        return SyntheticEvaluator(SyntheticLandscape.from_file(ev.landscape_path))
    return ProtocolEvaluator(list(ev.cmd), timeout_s=ev.timeout_s)


class _RunContext:
    """Shared machinery: ledger, library, report writer, candidate pipeline."""

    def __init__(self, task: Task, config: RunConfig, agents, evaluator, report_path, clock):
        self.config = config
        self.strategy = config.strategy
        self.agents = agents
        self.evaluator = evaluator
        self.clock_kind = "wall" if clock is None else "zero"
        self._clock = clock if clock is not None else time.time
        reference_source = "manifest"
        if task.reference_runtime_ms is None:
            baseline = evaluator.evaluate(task.source_code, task)
            if not baseline.is_ok:
                raise ControllerError(
                    f"task {task.task_id} failed baseline evaluation: "
                    f"{baseline.status}: {baseline.error_summary}"
                )
            task = replace(task, reference_runtime_ms=baseline.runtime_ms)
            reference_source = "measured"
        self.task = task
        self.reference_ms = task.reference_runtime_ms
        self.ledger = BudgetLedger(self.strategy.query_budget)
        self.library = Library(
            task,
            islands=self.strategy.islands,
            archive_capacity=self.strategy.archive_capacity,
            memory_window=self.strategy.memory_window,
        )
        self.writer = ReportWriter(self.ledger, report_path, clock)
        self._pipeline_ids = itertools.count(1)
        self._start_monotonic = time.monotonic()
        self._start_clock = self._clock()
        self.writer.write_header(self._header(reference_source))

    # -- header and footer ---------------------------------------------------

    def _header(self, reference_source: str) -> dict:
        cfg = self.config
        backend = dict(asdict(cfg.backend))
        if cfg.backend.kind == "mock" and cfg.backend.script_path:
            backend["script_sha256"] = _file_sha256(cfg.backend.script_path)
        evaluator: dict = {"kind": cfg.evaluator.kind, "timeout_s": cfg.evaluator.timeout_s}
        if cfg.evaluator.kind == "synthetic":
            landscape = getattr(self.evaluator, "landscape", None)
            if landscape is not None:
                evaluator["landscape"] = landscape.to_dict()
            evaluator["landscape_path"] = cfg.evaluator.landscape_path
        else:
            evaluator["cmd"] = list(cfg.evaluator.cmd)
        return {
            "prompt_version": PROMPT_VERSION,
            "clock": self.clock_kind,
            "started_at": self._start_clock,
            "task": {
                "task_id": self.task.task_id,
                "level_tag": self.task.level_tag,
                "entry_metadata": self.task.entry_metadata,
                "reference_runtime_ms": self.reference_ms,
                "reference_source": reference_source,
                "source_sha256": self.task.source_sha256,
                "source_code": self.task.source_code,
            },
            "strategy": asdict(self.strategy),
            "backend": backend,
            "pricing": {
                model: {
                    "input_per_million": entry.input_per_million,
                    "output_per_million": entry.output_per_million,
                }
                for model, entry in sorted(cfg.pricing.items())
            },
            "evaluator": evaluator,
        }

    def finish(self, stop_reason: str, complete: bool = True) -> RunReport:
        best = self.library.best()
        queries, dollars = self.ledger.totals()
        self.writer.write_footer(
            {
                "best_solution_id": best.solution_id,
                "best_objective": best.objective,
                "clamped_speedup": max(1.0, best.objective),
                "total_queries": queries,
                "total_dollars": dollars,
                "per_agent": {
                    role: spend.to_dict()
                    for role, spend in sorted(self.ledger.per_agent().items())
                },
                "valid_solutions": len(self.library.all_records()),
                "complete": complete,
                "stop_reason": stop_reason,
                "wall_seconds": self._clock() - self._start_clock,
            }
        )
        return RunReport.from_writer(self.writer)

    # -- helpers ---------------------------------------------------------

    def wall_expired(self) -> bool:
        limit = self.strategy.max_wall_seconds
        return limit is not None and time.monotonic() - self._start_monotonic >= limit

    def _pricing_for(self, role: str) -> PricingEntry:
        model = self.agents.model_for(role)
        entry = self.config.pricing.get(model)
        if entry is not None:
            return entry
        backend = self.agents.backend_for(role)
        if getattr(backend, "kind", "") == "remote":
            raise ControllerError(f"no pricing for remote model {model!r}")
        return PricingEntry(0.0, 0.0)

    def _invoke(self, role: str, spec):
        """Call a backend for an already reserved query and commit its usage."""
        backend = self.agents.backend_for(role)
        text, usage = backend.invoke(spec)
        self.ledger.commit(role, usage, self._pricing_for(role))
        return text, usage

    # -- brainstorm ----------------------------------------------------------

    def run_brainstorm(self, n_ideas: int, *, generation: int | None = None) -> list[str]:
        """One idea-generation query; empty list when the budget is out."""
        if not self.ledger.try_reserve(ROLE_BRAINSTORM):
            return []
        spec = build_brainstorm_prompt(self.task, n_ideas, self.strategy.temperature)
        text, usage = self._invoke(ROLE_BRAINSTORM, spec)
        self.writer.emit_step(
            role=ROLE_BRAINSTORM,
            kind=KIND_BRAINSTORM,
            prompt_hash=prompt_hash(spec),
            generation=generation,
            usage=usage.to_dict(),
        )
        return parse_ideas(text, n_ideas)

    # -- the candidate pipeline ------------------------------------------

    def run_candidate(
        self,
        seed: Seed,
        *,
        generation: int | None = None,
        worker: int | None = None,
        island: int = 0,
        idea_index: int | None = None,
    ) -> CandidateResult:
        """Generate, evaluate, and fix one candidate from a seed.

        Every charged query becomes one step record; the last record of the
        pipeline is marked final and carries the candidate's final code and
        verdict. Valid solutions are inserted into the library before their
        final record is written, so the record's solution id is real.
        """
        cfg = self.strategy
        if not self.ledger.try_reserve(ROLE_OPTIMIZE):
            return CandidateResult(started=False)
        pipeline_id = next(self._pipeline_ids)
        context = dict(
            pipeline=pipeline_id,
            generation=generation,
            worker=worker,
            island=island,
            seed_source_id=seed.source_id,
            parent_ids=seed.parent_ids,
            idea_index=idea_index,
        )
        if seed.inspirations:
            spec = build_crossover_prompt(self.task, seed, cfg.temperature)
        else:
            spec = build_mutation_prompt(self.task, seed, cfg.temperature)
        text, usage = self._invoke(ROLE_OPTIMIZE, spec)
        code = extract_code(text)

        current = {
            "role": ROLE_OPTIMIZE,
            "kind": KIND_GENERATE,
            "prompt_hash": prompt_hash(spec),
            "usage": usage.to_dict(),
        }
        pending: dict = {}

        def on_result(_code: str, result, attempts: int) -> None:
            pending.clear()
            pending.update(
                current,
                status=result.status,
                runtime_ms=result.runtime_ms,
                attempt=attempts,
            )

        def request_fix(broken_code: str, error_summary: str):
            if not self.ledger.try_reserve(ROLE_FIX):
                return None
            # The previous query was not terminal after all; flush it.
            self.writer.emit_step(final=False, **context, **pending)
            fix_spec = build_fix_prompt(
                self.task, broken_code, error_summary, cfg.temperature
            )
            fix_text, fix_usage = self._invoke(ROLE_FIX, fix_spec)
            current.update(
                role=ROLE_FIX,
                kind=KIND_FIX,
                prompt_hash=prompt_hash(fix_spec),
                usage=fix_usage.to_dict(),
            )
            return extract_code(fix_text)

        outcome = evaluate_with_fixing(
            code,
            self.task,
            self.evaluator,
            max_attempts=cfg.max_fix_attempts if cfg.use_error_fixing else 0,
            request_fix=request_fix,
            on_result=on_result,
        )

        record: SolutionRecord | None = None
        objective = None
        if outcome.result.is_ok:
            objective = self.reference_ms / outcome.result.runtime_ms
            record = SolutionRecord(
                solution_id=self.library.allocate_id(),
                code=outcome.code,
                objective=objective,
                runtime_ms=outcome.result.runtime_ms,
                island_index=island,
                parent_ids=seed.parent_ids,
                idea=seed.idea,
                fix_attempts=outcome.attempts,
            )
            self.library.insert(record)
        self.writer.emit_step(
            final=True,
            discarded=not outcome.result.is_ok,
            budget_stopped=outcome.budget_stopped,
            solution_id=record.solution_id if record else None,
            objective=objective,
            code=outcome.code,
            sloc=count_sloc(outcome.code),
            **context,
            **pending,
        )
        return CandidateResult(started=True, record=record)


def run_pikeb(
    task: Task,
    config: RunConfig,
    agents,
    evaluator,
    *,
    report_path=None,
    clock=None,
) -> RunReport:
    """Generational branching search under a fixed query budget.

    Each generation evaluates one seed wave. The next wave branches from
    the top solutions among all valid solutions found so far: ranked by
    objective descending (ties to the earlier id), seed slots are divided
    evenly over the top k with the remainder going to the best ranks. A
    generation with no valid solutions anywhere reseeds from the original
    program with freshly brainstormed ideas.
    """
    if config.strategy.strategy_kind != STRATEGY_PIKE_B:
        raise ControllerError("config is not for the generational strategy")
    cfg = config.strategy
    ctx = _RunContext(task, config, agents, evaluator, report_path, clock)
    try:
        ideas = ctx.run_brainstorm(cfg.population_n, generation=0) if cfg.use_brainstorm else []
        seeds = [
            (
                Seed(
                    seed_code=ctx.task.source_code,
                    source_id=None,
                    idea=ideas[i] if i < len(ideas) else None,
                ),
                i if i < len(ideas) else None,
            )
            for i in range(cfg.population_n)
        ]
        valid: list[SolutionRecord] = []
        generation = 0
        stop = STOP_BUDGET
        while ctx.ledger.queries_used < cfg.query_budget:
            if ctx.wall_expired():
                stop = STOP_WALL_CLOCK
                break
            generation += 1
            current_generation = generation

            def pipeline(_index: int, item) -> CandidateResult:
                seed, idea_index = item
                return ctx.run_candidate(
                    seed,
                    generation=current_generation,
                    island=0,
                    idea_index=idea_index,
                )

            results = dispatch_parallel(pipeline, seeds, cfg.parallel_evaluations)
            valid.extend(r.record for r in results if r.record is not None)
            if ctx.ledger.queries_used >= cfg.query_budget:
                break
            if valid:
                seeds = [
                    (s, None)
                    for s in next_generation_pikeb(valid, cfg.population_n, cfg.top_k)
                ]
            else:
                ideas = (
                    ctx.run_brainstorm(cfg.population_n, generation=generation)
                    if cfg.use_brainstorm
                    else []
                )
                seeds = [
                    (
                        Seed(
                            seed_code=ctx.task.source_code,
                            source_id=None,
                            idea=ideas[i % len(ideas)] if ideas else None,
                        ),
                        (i % len(ideas)) if ideas else None,
                    )
                    for i in range(cfg.population_n)
                ]
        return ctx.finish(stop_reason=stop)
    except (EvaluatorUnavailable, AgentError) as exc:
        return ctx.finish(stop_reason=f"aborted: {exc}", complete=False)


def run_evolve(
    task: Task,
    config: RunConfig,
    agents,
    evaluator,
    *,
    report_path=None,
    clock=None,
) -> RunReport:
    """Continuous evolutionary search under a fixed query budget.

    Workers loop independently: snapshot the library, visit islands round
    robin, select a seed (explore, exploit, or random segment), generate
    and evaluate a candidate, and insert it when valid. Crossover attaches
    the top archive solutions as inspirations when configured. Workers
    stop when they cannot reserve the next generation query.
    """
    if config.strategy.strategy_kind != STRATEGY_EVOLVE:
        raise ControllerError("config is not for the evolutionary strategy")
    cfg = config.strategy
    ctx = _RunContext(task, config, agents, evaluator, report_path, clock)
    try:
        ideas = ctx.run_brainstorm(cfg.population_n) if cfg.use_brainstorm else []
        master = random.Random(cfg.rng_seed)
        rngs = [
            random.Random(master.getrandbits(64))
            for _ in range(cfg.parallel_evaluations)
        ]
        wall_stop = False

        def worker_loop(worker_index: int, rng: random.Random) -> None:
            nonlocal wall_stop
            iteration = 0
            while True:
                if ctx.wall_expired():
                    wall_stop = True
                    return
                island = (worker_index + iteration) % cfg.islands
                snapshot = ctx.library.snapshot()
                idea_index = (iteration % len(ideas)) if ideas else None
                seed = select_seed(
                    snapshot,
                    cfg.sampler,
                    island,
                    rng,
                    crossover_inspirations=cfg.crossover_inspirations,
                    idea=ideas[idea_index] if ideas else None,
                )
                result = ctx.run_candidate(
                    seed, worker=worker_index, island=island, idea_index=idea_index
                )
                if not result.started:
                    return
                iteration += 1

        dispatch_parallel(
            lambda i, rng: worker_loop(i, rng), rngs, cfg.parallel_evaluations
        )
        return ctx.finish(stop_reason=STOP_WALL_CLOCK if wall_stop else STOP_BUDGET)
    except (EvaluatorUnavailable, AgentError) as exc:
        return ctx.finish(stop_reason=f"aborted: {exc}", complete=False)


def run_search(
    task: Task,
    config: RunConfig,
    agents,
    evaluator,
    *,
    report_path=None,
    clock=None,
) -> RunReport:
    """Run whichever strategy the config selects."""
    if config.strategy.strategy_kind == STRATEGY_PIKE_B:
        return run_pikeb(
            task, config, agents, evaluator, report_path=report_path, clock=clock
        )
    return run_evolve(
        task, config, agents, evaluator, report_path=report_path, clock=clock
    )


def _file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
