"""Run configuration: strategy knobs, backends, pricing, and presets.

Configs live in YAML files with four sections (strategy, backend, pricing,
evaluator). Validation collects every problem at once and reports each with
its field path, so a bad file is fixed in one round trip. Presets capture
the reference setups: the generational branching strategy and the ablation
chain of the continuous evolutionary strategy.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agents import DEFAULT_PRICING, ROLES, PricingEntry
from .sampling import SamplerConfig

STRATEGY_PIKE_B = "pike_b"
STRATEGY_EVOLVE = "evolve"
STRATEGY_KINDS = (STRATEGY_PIKE_B, STRATEGY_EVOLVE)


class ConfigError(Exception):
    """Invalid configuration; ``errors`` lists each problem with its path."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class StrategyConfig:
    """Search strategy parameters.

    ``population_n`` is the per-generation seed count (and brainstorm idea
    count) of the generational strategy; the continuous strategy ignores it
    and is shaped by the library knobs instead. A ``memory_window`` of None
    keeps the full history.
    """

    strategy_kind: str = STRATEGY_PIKE_B
    population_n: int = 10
    max_fix_attempts: int = 5
    top_k: int = 4
    query_budget: int = 300
    islands: int = 1
    memory_window: int | None = None
    archive_capacity: int = 4
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    crossover_inspirations: int = 0
    parallel_evaluations: int = 1
    use_brainstorm: bool = True
    use_error_fixing: bool = True
    rng_seed: int = 0
    temperature: float = 0.8
    max_wall_seconds: float | None = None

    def validation_errors(self, prefix: str = "strategy") -> list[str]:
        errors = []

        def positive(name: str, minimum: int = 1) -> None:
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                errors.append(f"{prefix}.{name}: must be an integer >= {minimum}, got {value!r}")

        if self.strategy_kind not in STRATEGY_KINDS:
            errors.append(
                f"{prefix}.strategy_kind: must be one of {list(STRATEGY_KINDS)}, "
                f"got {self.strategy_kind!r}"
            )
        positive("population_n")
        positive("top_k")
        positive("islands")
        positive("archive_capacity")
        positive("parallel_evaluations")
        if not isinstance(self.max_fix_attempts, int) or self.max_fix_attempts < 0:
            errors.append(
                f"{prefix}.max_fix_attempts: must be an integer >= 0, "
                f"got {self.max_fix_attempts!r}"
            )
        if not isinstance(self.query_budget, int) or self.query_budget < 0:
            errors.append(
                f"{prefix}.query_budget: must be an integer >= 0, got {self.query_budget!r}"
            )
        if self.memory_window is not None and (
            not isinstance(self.memory_window, int) or self.memory_window < 1
        ):
            errors.append(
                f"{prefix}.memory_window: must be null or an integer >= 1, "
                f"got {self.memory_window!r}"
            )
        if not isinstance(self.crossover_inspirations, int) or self.crossover_inspirations < 0:
            errors.append(
                f"{prefix}.crossover_inspirations: must be an integer >= 0, "
                f"got {self.crossover_inspirations!r}"
            )
        if not 0.0 <= self.temperature <= 2.0:
            errors.append(f"{prefix}.temperature: must be in [0, 2], got {self.temperature!r}")
        if self.max_wall_seconds is not None and self.max_wall_seconds <= 0:
            errors.append(
                f"{prefix}.max_wall_seconds: must be null or positive, "
                f"got {self.max_wall_seconds!r}"
            )
        errors.extend(self.sampler.validation_errors(prefix=f"{prefix}.sampler"))
        if self.strategy_kind == STRATEGY_PIKE_B:
            if self.islands != 1:
                errors.append(f"{prefix}.islands: generational strategy uses exactly 1 island")
            if self.crossover_inspirations != 0:
                errors.append(
                    f"{prefix}.crossover_inspirations: generational strategy "
                    "does not use crossover"
                )
        return errors


@dataclass(frozen=True)
class BackendConfig:
    """Model backend wiring shared by all agent roles.

    ``role_models`` overrides the model per role (remote backends only),
    which is how a cheaper fixer model is configured. Mock backends replay
    ``script_path`` and ignore model names.
    """

    kind: str = "remote"
    model: str = "gemini-2.5-pro"
    base_url: str = "http://localhost:8000/v1"
    api_key_env: str = "PIKE_API_KEY"
    script_path: str | None = None
    timeout_s: float = 120.0
    max_retries: int = 2
    role_models: dict[str, str] = field(default_factory=dict)

    def validation_errors(self, prefix: str = "backend") -> list[str]:
        errors = []
        if self.kind not in ("remote", "mock"):
            errors.append(f"{prefix}.kind: must be 'remote' or 'mock', got {self.kind!r}")
        if self.kind == "mock" and not self.script_path:
            errors.append(f"{prefix}.script_path: required for mock backends")
        if self.kind == "remote" and not self.base_url:
            errors.append(f"{prefix}.base_url: required for remote backends")
        if self.timeout_s <= 0:
            errors.append(f"{prefix}.timeout_s: must be positive, got {self.timeout_s!r}")
        if not isinstance(self.max_retries, int) or self.max_retries < 0:
            errors.append(
                f"{prefix}.max_retries: must be an integer >= 0, got {self.max_retries!r}"
            )
        for role in self.role_models:
            if role not in ROLES:
                errors.append(f"{prefix}.role_models.{role}: unknown agent role")
        return errors


@dataclass(frozen=True)
class EvaluatorConfig:
    """How candidates are evaluated: synthetic landscape or worker process."""

    kind: str = "protocol"
    cmd: tuple[str, ...] = ("python", "-m", "pike_worker", "--tasks", "tasks")
    landscape_path: str | None = None
    timeout_s: float = 300.0

    def validation_errors(self, prefix: str = "evaluator") -> list[str]:
        errors = []
        if self.kind not in ("synthetic", "protocol"):
            errors.append(
                f"{prefix}.kind: must be 'synthetic' or 'protocol', got {self.kind!r}"
            )
        if self.kind == "synthetic" and not self.landscape_path:
            errors.append(f"{prefix}.landscape_path: required for synthetic evaluators")
        if self.kind == "protocol" and not self.cmd:
            errors.append(f"{prefix}.cmd: required for protocol evaluators")
        if self.timeout_s <= 0:
            errors.append(f"{prefix}.timeout_s: must be positive, got {self.timeout_s!r}")
        return errors


@dataclass(frozen=True)
class RunConfig:
    """Complete run configuration: the four config file sections."""

    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    pricing: dict[str, PricingEntry] = field(default_factory=lambda: dict(DEFAULT_PRICING))
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)

    def validation_errors(self) -> list[str]:
        errors = []
        errors.extend(self.strategy.validation_errors())
        errors.extend(self.backend.validation_errors())
        errors.extend(self.evaluator.validation_errors())
        for model, entry in self.pricing.items():
            if entry.input_per_million < 0 or entry.output_per_million < 0:
                errors.append(f"pricing.{model}: prices must be non-negative")
        for role, model in self.backend.role_models.items():
            if self.backend.kind == "remote" and model not in self.pricing:
                errors.append(f"backend.role_models.{role}: model {model!r} has no pricing")
        if self.backend.kind == "remote" and self.backend.model not in self.pricing:
            errors.append(f"backend.model: model {self.backend.model!r} has no pricing")
        return errors

    def validated(self) -> "RunConfig":
        errors = self.validation_errors()
        if errors:
            raise ConfigError(errors)
        return self

    def to_dict(self) -> dict:
        return {
            "strategy": _strip_nones(dataclasses.asdict(self.strategy)),
            "backend": _strip_nones(dataclasses.asdict(self.backend)),
            "pricing": {
                model: {
                    "input_per_million": entry.input_per_million,
                    "output_per_million": entry.output_per_million,
                }
                for model, entry in sorted(self.pricing.items())
            },
            "evaluator": _strip_nones(
                {**dataclasses.asdict(self.evaluator), "cmd": list(self.evaluator.cmd)}
            ),
        }


def _strip_nones(data: dict) -> dict:
    return {k: v for k, v in data.items() if v is not None}


def _build_section(cls, data: dict, prefix: str, errors: list[str]):
    """Instantiate a config dataclass, collecting unknown-key errors."""
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            errors.append(f"{prefix}.{key}: unknown key")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{prefix}: {exc}")
        return cls()


def parse_config(data: dict) -> RunConfig:
    """Build and validate a RunConfig from a parsed YAML mapping."""
    if not isinstance(data, dict):
        raise ConfigError(["config: top level must be a mapping"])
    errors: list[str] = []
    known_sections = {"strategy", "backend", "pricing", "evaluator"}
    for key in data:
        if key not in known_sections:
            errors.append(f"{key}: unknown section")

    strategy_data = dict(data.get("strategy", {}))
    sampler_data = strategy_data.pop("sampler", {})
    sampler = _build_section(SamplerConfig, sampler_data or {}, "strategy.sampler", errors)
    strategy_data["sampler"] = sampler
    strategy = _build_section(StrategyConfig, strategy_data, "strategy", errors)

    backend = _build_section(BackendConfig, dict(data.get("backend", {})), "backend", errors)

    evaluator_data = dict(data.get("evaluator", {}))
    if "cmd" in evaluator_data and isinstance(evaluator_data["cmd"], list):
        evaluator_data["cmd"] = tuple(evaluator_data["cmd"])
    evaluator = _build_section(EvaluatorConfig, evaluator_data, "evaluator", errors)

    pricing: dict[str, PricingEntry] = dict(DEFAULT_PRICING)
    pricing_data = data.get("pricing", {})
    if not isinstance(pricing_data, dict):
        errors.append("pricing: must be a mapping of model name to rates")
        pricing_data = {}
    for model, rates in pricing_data.items():
        if not isinstance(rates, dict):
            errors.append(f"pricing.{model}: must be a mapping with per-million rates")
            continue
        unknown = set(rates) - {"input_per_million", "output_per_million"}
        for key in sorted(unknown):
            errors.append(f"pricing.{model}.{key}: unknown key")
        try:
            pricing[model] = PricingEntry(
                input_per_million=rates.get("input_per_million", 0.0),
                output_per_million=rates.get("output_per_million", 0.0),
            )
        except ValueError as exc:
            errors.append(f"pricing.{model}: {exc}")

    config = RunConfig(strategy=strategy, backend=backend, pricing=pricing, evaluator=evaluator)
    errors.extend(config.validation_errors())
    if errors:
        raise ConfigError(errors)
    return config


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a YAML config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError([f"config: invalid YAML: {exc}"]) from exc
    return parse_config(data or {})


def dump_config(config: RunConfig) -> str:
    """Serialize a config to YAML that parses back to an equal config."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


# ---------------------------------------------------------------------------
# Presets
#
# The ablation chain starts from the full continuous strategy and removes
# one mechanism per step: crossover, then parallelism, then extra islands,
# then the explore share, then long-term memory. The final preset differs
# from the generational strategy only in how seeds are drawn.
# ---------------------------------------------------------------------------


def _pike_b() -> StrategyConfig:
    return StrategyConfig(
        strategy_kind=STRATEGY_PIKE_B,
        population_n=10,
        max_fix_attempts=5,
        top_k=4,
        query_budget=300,
        islands=1,
        memory_window=None,
        archive_capacity=4,
        sampler=SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0),
        crossover_inspirations=0,
        parallel_evaluations=1,
        use_brainstorm=True,
        use_error_fixing=True,
    )


def _pike_o(**overrides) -> StrategyConfig:
    base = dict(
        strategy_kind=STRATEGY_EVOLVE,
        population_n=25,
        max_fix_attempts=5,
        top_k=4,
        query_budget=300,
        islands=3,
        memory_window=25,
        archive_capacity=12,
        sampler=SamplerConfig(explore_ratio=0.2, exploit_ratio=0.7),
        crossover_inspirations=5,
        parallel_evaluations=10,
        use_brainstorm=False,
        use_error_fixing=True,
    )
    base.update(overrides)
    return StrategyConfig(**base)


_PRESET_STRATEGIES = {
    "pike-b": _pike_b,
    "pike-b-cheap-fixer": _pike_b,
    "pike-o-default": lambda: _pike_o(),
    "pike-o-mut": lambda: _pike_o(crossover_inspirations=0),
    "pike-o-mut-npar": lambda: _pike_o(crossover_inspirations=0, parallel_evaluations=1),
    "pike-o-mut-npar-1isl": lambda: _pike_o(
        crossover_inspirations=0, parallel_evaluations=1, islands=1
    ),
    "pike-o-mut-npar-1isl-eo": lambda: _pike_o(
        crossover_inspirations=0,
        parallel_evaluations=1,
        islands=1,
        sampler=SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0),
    ),
    "pike-o-mut-npar-1isl-eo-sl": lambda: _pike_o(
        crossover_inspirations=0,
        parallel_evaluations=1,
        islands=1,
        sampler=SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0),
        memory_window=4,
        archive_capacity=4,
    ),
}


def preset_names() -> list[str]:
    return list(_PRESET_STRATEGIES)


def preset_config(name: str) -> RunConfig:
    """A complete runnable config for a named preset."""
    if name not in _PRESET_STRATEGIES:
        raise ConfigError(
            [f"unknown preset {name!r}; available: {', '.join(preset_names())}"]
        )
    backend = BackendConfig()
    if name == "pike-b-cheap-fixer":
        backend = BackendConfig(role_models={"EFA": "gemini-2.5-flash"})
    return RunConfig(strategy=_PRESET_STRATEGIES[name](), backend=backend)
