"""Seed selection: segment draws, pools, and generational branching."""

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pike.library import Library
from pike.sampling import (
    SEGMENT_EXPLOIT,
    SEGMENT_EXPLORE,
    SEGMENT_RANDOM,
    SamplerConfig,
    branch_counts,
    choose_segment,
    next_generation_pikeb,
    select_seed,
)
from tests.conftest import make_record, make_task


def library_with(objectives, **kwargs):
    library = Library(make_task(), **kwargs)
    for i, obj in enumerate(objectives, start=1):
        library.insert(make_record(i, obj))
    return library


def test_segment_frequencies_match_ratios():
    sampler = SamplerConfig(explore_ratio=0.2, exploit_ratio=0.7)
    rng = random.Random(7)
    draws = 20_000
    counts = Counter(choose_segment(sampler, rng) for _ in range(draws))
    assert counts[SEGMENT_EXPLORE] / draws == pytest.approx(0.2, abs=0.02)
    assert counts[SEGMENT_EXPLOIT] / draws == pytest.approx(0.7, abs=0.02)
    assert counts[SEGMENT_RANDOM] / draws == pytest.approx(0.1, abs=0.02)


def test_degenerate_ratios():
    rng = random.Random(3)
    only_explore = SamplerConfig(explore_ratio=1.0, exploit_ratio=0.0)
    assert all(
        choose_segment(only_explore, rng) == SEGMENT_EXPLORE for _ in range(100)
    )
    only_exploit = SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0)
    assert all(
        choose_segment(only_exploit, rng) == SEGMENT_EXPLOIT for _ in range(100)
    )


def test_sampler_validation():
    assert SamplerConfig(0.2, 0.7).validation_errors() == []
    assert SamplerConfig(-0.1, 0.5).validation_errors()
    assert SamplerConfig(0.6, 0.6).validation_errors()


def test_empty_island_falls_back_to_task():
    library = Library(make_task())
    seed = select_seed(
        library.snapshot(), SamplerConfig(0.0, 1.0), 0, random.Random(0)
    )
    assert seed.source_id is None
    assert seed.seed_code == library.task.source_code
    assert seed.inspirations == ()
    assert seed.parent_ids == ()


def test_exploit_draws_only_archive_members():
    # Capacity 2 with five solutions: exploit must stay inside the top 2.
    library = library_with([1.0, 5.0, 4.0, 1.1, 1.2], archive_capacity=2)
    snapshot = library.snapshot()
    elite_ids = {r.solution_id for r in snapshot.elite_set(0)}
    assert elite_ids == {2, 3}
    rng = random.Random(11)
    sampler = SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0)
    for _ in range(200):
        seed = select_seed(snapshot, sampler, 0, rng)
        assert seed.source_id in elite_ids


def test_explore_reaches_full_history():
    library = library_with([1.0, 5.0, 4.0, 1.1, 1.2], archive_capacity=2)
    snapshot = library.snapshot()
    rng = random.Random(13)
    sampler = SamplerConfig(explore_ratio=1.0, exploit_ratio=0.0)
    seen = {
        select_seed(snapshot, sampler, 0, rng).source_id for _ in range(400)
    }
    assert seen == {1, 2, 3, 4, 5}


def test_random_segment_draws_from_union():
    library = library_with([1.0, 5.0], archive_capacity=1)
    snapshot = library.snapshot()
    rng = random.Random(17)
    sampler = SamplerConfig(explore_ratio=0.0, exploit_ratio=0.0)
    seen = {
        select_seed(snapshot, sampler, 0, rng).source_id for _ in range(200)
    }
    assert seen == {1, 2}


def test_selection_is_deterministic_for_a_seed():
    library = library_with([1.0, 5.0, 4.0, 1.1], archive_capacity=2)
    snapshot = library.snapshot()
    sampler = SamplerConfig(explore_ratio=0.2, exploit_ratio=0.7)
    a = [
        select_seed(snapshot, sampler, 0, random.Random(42)).source_id
        for _ in range(1)
    ]
    b = [
        select_seed(snapshot, sampler, 0, random.Random(42)).source_id
        for _ in range(1)
    ]
    assert a == b


def test_island_bounds_checked():
    library = library_with([2.0])
    from pike.library import LibraryError

    with pytest.raises(LibraryError):
        select_seed(library.snapshot(), SamplerConfig(), 3, random.Random(0))


def test_crossover_inspirations_are_top_elites_excluding_source():
    library = library_with([2.0, 9.0, 7.0, 8.0], archive_capacity=3)
    snapshot = library.snapshot()
    sampler = SamplerConfig(explore_ratio=0.0, exploit_ratio=1.0)
    rng = random.Random(5)
    for _ in range(50):
        seed = select_seed(
            snapshot, sampler, 0, rng, crossover_inspirations=2
        )
        assert seed.source_id not in seed.inspiration_ids
        # Top elites by objective are 2 (9.0), 4 (8.0), 3 (7.0).
        expected = [i for i in (2, 4, 3) if i != seed.source_id][:2]
        assert list(seed.inspiration_ids) == expected
        assert seed.parent_ids == (seed.source_id, *seed.inspiration_ids)


def test_crossover_with_sparse_archive_takes_what_exists():
    library = library_with([2.0], archive_capacity=4)
    seed = select_seed(
        library.snapshot(),
        SamplerConfig(0.0, 1.0),
        0,
        random.Random(1),
        crossover_inspirations=5,
    )
    assert seed.source_id == 1
    assert seed.inspiration_ids == ()


@given(
    n=st.integers(min_value=1, max_value=64),
    ranked=st.integers(min_value=1, max_value=64),
)
def test_branch_counts_law(n, ranked):
    counts = branch_counts(n, ranked)
    assert sum(counts) == n
    assert len(counts) == ranked
    assert max(counts) - min(counts) <= 1
    assert counts == sorted(counts, reverse=True)


def test_next_generation_reference_split():
    # Four parents at n=10 split 3/3/2/2 with extras to the top ranks.
    valid = [make_record(i, obj) for i, obj in enumerate([4.0, 3.0, 2.0, 1.5], start=1)]
    seeds = next_generation_pikeb(valid, 10, 4)
    counts = Counter(s.source_id for s in seeds)
    assert counts == {1: 3, 2: 3, 3: 2, 4: 2}


def test_next_generation_fewer_valid_than_k():
    valid = [make_record(1, 2.0), make_record(2, 3.0)]
    seeds = next_generation_pikeb(valid, 10, 4)
    counts = Counter(s.source_id for s in seeds)
    assert counts == {2: 5, 1: 5}


def test_next_generation_rank_order_and_ties():
    # Equal objectives rank by ascending id; best rank gets the extra slot.
    valid = [make_record(1, 2.0), make_record(2, 2.0), make_record(3, 1.0)]
    seeds = next_generation_pikeb(valid, 4, 3)
    counts = Counter(s.source_id for s in seeds)
    assert counts == {1: 2, 2: 1, 3: 1}
    assert seeds[0].source_id == 1


def test_next_generation_seed_code_comes_from_parent():
    valid = [make_record(1, 2.0, code="# parent one\n")]
    seeds = next_generation_pikeb(valid, 3, 4)
    assert all(s.seed_code == "# parent one\n" for s in seeds)
    assert all(s.idea is None for s in seeds)


def test_next_generation_empty_reseeds_from_task():
    task = make_task()
    seeds = next_generation_pikeb([], 5, 4, task=task, ideas=["a", "b"])
    assert len(seeds) == 5
    assert all(s.source_id is None for s in seeds)
    assert all(s.seed_code == task.source_code for s in seeds)
    assert [s.idea for s in seeds] == ["a", "b", "a", "b", "a"]


def test_next_generation_empty_without_task_raises():
    with pytest.raises(ValueError):
        next_generation_pikeb([], 5, 4)


@given(
    n=st.integers(min_value=1, max_value=20),
    k=st.integers(min_value=1, max_value=20),
    objectives=st.lists(
        st.floats(min_value=0.1, max_value=9.0, allow_nan=False),
        min_size=1,
        max_size=20,
    ),
)
@settings(max_examples=200)
def test_next_generation_distribution_law(n, k, objectives):
    valid = [make_record(i, obj) for i, obj in enumerate(objectives, start=1)]
    seeds = next_generation_pikeb(valid, n, k)
    assert len(seeds) == n
    counts = Counter(s.source_id for s in seeds)
    ranked = sorted(valid, key=lambda r: (-r.objective, r.solution_id))
    top = ranked[: min(k, len(valid))]
    assert set(counts) <= {r.solution_id for r in top}
    per_parent = [counts.get(r.solution_id, 0) for r in top]
    assert sum(per_parent) == n
    assert max(per_parent) - min(per_parent) <= 1
    # Higher ranks never get fewer slots than lower ranks.
    assert per_parent == sorted(per_parent, reverse=True)
