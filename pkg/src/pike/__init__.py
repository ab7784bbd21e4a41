"""Multi-agent evolutionary search for optimizing program candidates.

The package wires three LLM agent roles (brainstorm, optimize, fix) into
budgeted search strategies over a library of valid solutions, records every
charged query in a replayable run report, and computes the analytics used
to compare strategies: clamped speedups, budget trajectories, diff sizes,
and similarity statistics.
"""

from .agents import (
    DEFAULT_PRICING,
    AgentPool,
    MockBackend,
    PricingEntry,
    PromptSpec,
    RemoteBackend,
    TokenUsage,
    usage_cost,
)
from .analytics import (
    HashedTokenEmbedding,
    budget_trajectory,
    clamped_speedup,
    cosine_similarity,
    count_sloc,
    geomean_trajectory,
    geometric_mean,
    loc_changed,
    run_statistics,
)
from .budget import BudgetLedger
from .config import (
    ConfigError,
    RunConfig,
    StrategyConfig,
    load_config,
    preset_config,
    preset_names,
)
from .controller import build_agents, build_evaluator, run_evolve, run_pikeb, run_search
from .evaluation import (
    EvaluationResult,
    ProtocolEvaluator,
    SyntheticEvaluator,
    SyntheticLandscape,
    evaluate_with_fixing,
)
from .library import Library, SolutionRecord, Task, load_task
from .replay import replay_report
from .report import RunReport, StepRecord, load_report
from .sampling import SamplerConfig, Seed, next_generation_pikeb, select_seed

__version__ = "0.1.0"

__all__ = [
    "AgentPool",
    "BudgetLedger",
    "ConfigError",
    "DEFAULT_PRICING",
    "EvaluationResult",
    "HashedTokenEmbedding",
    "Library",
    "MockBackend",
    "PricingEntry",
    "PromptSpec",
    "ProtocolEvaluator",
    "RemoteBackend",
    "RunConfig",
    "RunReport",
    "SamplerConfig",
    "Seed",
    "SolutionRecord",
    "StepRecord",
    "StrategyConfig",
    "SyntheticEvaluator",
    "SyntheticLandscape",
    "Task",
    "TokenUsage",
    "budget_trajectory",
    "build_agents",
    "build_evaluator",
    "clamped_speedup",
    "cosine_similarity",
    "count_sloc",
    "evaluate_with_fixing",
    "geomean_trajectory",
    "geometric_mean",
    "load_config",
    "load_report",
    "load_task",
    "loc_changed",
    "next_generation_pikeb",
    "preset_config",
    "preset_names",
    "replay_report",
    "run_evolve",
    "run_pikeb",
    "run_search",
    "run_statistics",
    "select_seed",
    "usage_cost",
]
