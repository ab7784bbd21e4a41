"""Seed selection: where the next candidate's starting program comes from.

Two strategies are implemented. Stochastic selection draws a segment
(explore over the recent history, exploit over the elite archive, or a
uniform pick over their union) and then a uniform member of that segment.
Generational branching ranks all valid solutions so far and splits the next
generation's seed slots across the top k, giving leftover slots to the
higher ranks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .library import LibrarySnapshot, SolutionRecord, Task

SEGMENT_EXPLORE = "explore"
SEGMENT_EXPLOIT = "exploit"
SEGMENT_RANDOM = "random"


@dataclass(frozen=True)
class SamplerConfig:
    """Segment probabilities; the random segment gets the remainder."""

    explore_ratio: float = 0.0
    exploit_ratio: float = 1.0

    @property
    def random_ratio(self) -> float:
        return 1.0 - self.explore_ratio - self.exploit_ratio

    def validation_errors(self, prefix: str = "sampler") -> list[str]:
        errors = []
        for name in ("explore_ratio", "exploit_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                errors.append(f"{prefix}.{name}: must be in [0, 1], got {value}")
        if self.explore_ratio + self.exploit_ratio > 1.0 + 1e-12:
            errors.append(
                f"{prefix}.explore_ratio + {prefix}.exploit_ratio: must not "
                f"exceed 1, got {self.explore_ratio + self.exploit_ratio}"
            )
        return errors


@dataclass(frozen=True)
class Seed:
    """A starting point for one candidate generation.

    ``source_id`` is None when the seed is the original task program.
    ``inspirations`` carries resolved records for crossover prompts; their
    ids are mirrored in ``inspiration_ids`` for reporting.
    """

    seed_code: str
    source_id: int | None = None
    idea: str | None = None
    inspirations: tuple[SolutionRecord, ...] = ()

    @property
    def inspiration_ids(self) -> tuple[int, ...]:
        return tuple(r.solution_id for r in self.inspirations)

    @property
    def parent_ids(self) -> tuple[int, ...]:
        parents = [] if self.source_id is None else [self.source_id]
        parents.extend(self.inspiration_ids)
        return tuple(parents)


def choose_segment(sampler: SamplerConfig, rng: random.Random) -> str:
    """Draw one segment name with the configured probabilities."""
    r = rng.random()
    if r < sampler.explore_ratio:
        return SEGMENT_EXPLORE
    if r < sampler.explore_ratio + sampler.exploit_ratio:
        return SEGMENT_EXPLOIT
    return SEGMENT_RANDOM


def _rank_key(record: SolutionRecord) -> tuple[float, int]:
    return (-record.objective, record.solution_id)


def select_seed(
    snapshot: LibrarySnapshot,
    sampler: SamplerConfig,
    island_index: int,
    rng: random.Random,
    *,
    crossover_inspirations: int = 0,
    idea: str | None = None,
) -> Seed:
    """Pick one seed from an island of a library snapshot.

    An empty island falls back to the original task program. Otherwise a
    segment is drawn: explore samples uniformly from the island history,
    exploit from its elite archive, and random from their union (which
    equals the history, since the archive is pinned inside it).
    """
    history = snapshot.history(island_index)
    archive = snapshot.elite_set(island_index)
    if not history:
        source = snapshot.task_record
        source_id = None
    else:
        segment = choose_segment(sampler, rng)
        pool = archive if segment == SEGMENT_EXPLOIT else history
        source = pool[rng.randrange(len(pool))]
        source_id = source.solution_id
    inspirations: tuple[SolutionRecord, ...] = ()
    if crossover_inspirations > 0:
        candidates = [r for r in archive if r.solution_id != source_id]
        candidates.sort(key=_rank_key)
        inspirations = tuple(candidates[:crossover_inspirations])
    return Seed(
        seed_code=source.code,
        source_id=source_id,
        idea=idea,
        inspirations=inspirations,
    )


def branch_counts(n_seeds: int, ranked_count: int) -> list[int]:
    """Split n seed slots across ranked parents, extras to higher ranks."""
    if ranked_count < 1:
        raise ValueError("ranked_count must be >= 1")
    base, extra = divmod(n_seeds, ranked_count)
    return [base + (1 if i < extra else 0) for i in range(ranked_count)]


def next_generation_pikeb(
    valid_solutions: list[SolutionRecord],
    n_seeds: int,
    top_k: int,
    *,
    task: Task | None = None,
    ideas: list[str] | None = None,
) -> list[Seed]:
    """Build the next generation's seeds by branching from the top k.

    Solutions are ranked by objective descending with ties broken by
    ascending solution id. Each of the top ``min(top_k, len(valid))``
    receives ``n_seeds // top`` slots and the remainder goes one apiece to
    the highest ranks, so per-parent counts differ by at most one and sum
    to ``n_seeds``. With no valid solutions the generation reseeds from the
    original task program, attaching ideas cyclically when provided.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if not valid_solutions:
        if task is None:
            raise ValueError("task required to reseed an empty generation")
        return [
            Seed(
                seed_code=task.source_code,
                source_id=None,
                idea=ideas[i % len(ideas)] if ideas else None,
            )
            for i in range(n_seeds)
        ]
    ranked = sorted(valid_solutions, key=_rank_key)[:top_k]
    seeds: list[Seed] = []
    for parent, count in zip(ranked, branch_counts(n_seeds, len(ranked))):
        seeds.extend(
            Seed(seed_code=parent.code, source_id=parent.solution_id)
            for _ in range(count)
        )
    return seeds
