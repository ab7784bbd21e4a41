"""Shared fixtures: tiny tasks, landscapes, scripted backends, run helpers."""

from __future__ import annotations

import json

import pytest

from pike.agents import AgentPool, MockBackend, ScriptEntry
from pike.config import RunConfig, StrategyConfig
from pike.evaluation import SyntheticEvaluator, SyntheticLandscape
from pike.library import SolutionRecord, Task


def zero_clock() -> float:
    return 0.0


def make_task(**overrides) -> Task:
    fields = dict(
        task_id="demo-task",
        source_code="def run(x):\n    return x * 2\n",
        level_tag="level-3",
        entry_metadata={"model": "Model", "inputs": "get_inputs"},
        reference_runtime_ms=100.0,
    )
    fields.update(overrides)
    return Task(**fields)


def make_record(solution_id: int, objective: float, **overrides) -> SolutionRecord:
    fields = dict(
        solution_id=solution_id,
        code=f"# solution {solution_id}\n",
        objective=objective,
        runtime_ms=100.0 / objective,
        island_index=0,
    )
    fields.update(overrides)
    return SolutionRecord(**fields)


def make_landscape(**overrides) -> SyntheticLandscape:
    fields = dict(
        base_runtime_ms=100.0,
        feature_factors={"@opt:alpha": 1.25, "@opt:beta": 2.0, "@opt:gamma": 1.6},
        breakage_rules={"@bug:race": "@fix:race"},
    )
    fields.update(overrides)
    return SyntheticLandscape(**fields)


def fenced(code: str) -> str:
    return f"Sure, here you go.\n```python\n{code}\n```"


def wildcard_script(
    responses: dict[str, list[str]], tokens: tuple[int, int] = (100, 200)
) -> MockBackend:
    """Build a mock backend from per-role response lists keyed by ordinal."""
    entries = []
    for role, texts in responses.items():
        for ordinal, text in enumerate(texts):
            entries.append(
                ScriptEntry(
                    role=role,
                    prompt_hash="*",
                    ordinal=ordinal,
                    response_text=text,
                    input_tokens=tokens[0],
                    output_tokens=tokens[1],
                )
            )
    return MockBackend(entries)


def write_script(path, responses: dict[str, list[str]], tokens=(100, 200)) -> str:
    """Write a wildcard response script as a JSON file; returns its path."""
    entries = []
    for role, texts in responses.items():
        for ordinal, text in enumerate(texts):
            entries.append(
                {
                    "role": role,
                    "prompt_hash": "*",
                    "ordinal": ordinal,
                    "response_text": text,
                    "input_tokens": tokens[0],
                    "output_tokens": tokens[1],
                }
            )
    path = str(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"entries": entries}, f, indent=1)
    return path


def agent_pool(backend) -> AgentPool:
    return AgentPool(optimize=backend)


def pikeb_config(**strategy_overrides) -> RunConfig:
    fields = dict(
        strategy_kind="pike_b",
        population_n=2,
        max_fix_attempts=1,
        top_k=1,
        query_budget=6,
        islands=1,
        archive_capacity=4,
        parallel_evaluations=1,
        use_brainstorm=True,
        use_error_fixing=True,
    )
    fields.update(strategy_overrides)
    return RunConfig(strategy=StrategyConfig(**fields))


def evolve_config(**strategy_overrides) -> RunConfig:
    from pike.sampling import SamplerConfig

    fields = dict(
        strategy_kind="evolve",
        population_n=4,
        max_fix_attempts=1,
        top_k=1,
        query_budget=8,
        islands=1,
        memory_window=4,
        archive_capacity=4,
        sampler=SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0),
        crossover_inspirations=0,
        parallel_evaluations=1,
        use_brainstorm=False,
        use_error_fixing=True,
    )
    fields.update(strategy_overrides)
    return RunConfig(strategy=StrategyConfig(**fields))


@pytest.fixture
def task() -> Task:
    return make_task()


@pytest.fixture
def landscape() -> SyntheticLandscape:
    return make_landscape()


@pytest.fixture
def evaluator(landscape) -> SyntheticEvaluator:
    return SyntheticEvaluator(landscape)
