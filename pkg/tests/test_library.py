"""Library invariants, checked against brute-force oracles."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pike.library import Library, LibraryError, Task, load_task
from tests.conftest import make_record, make_task


def brute_force_archive(records, capacity):
    """Oracle: top-capacity records by objective, ties to the earlier id."""
    ranked = sorted(records, key=lambda r: (-r.objective, r.solution_id))
    return ranked[:capacity]


objectives = st.lists(
    st.floats(min_value=0.01, max_value=50.0, allow_nan=False),
    min_size=0,
    max_size=30,
)


@given(objectives=objectives, capacity=st.integers(min_value=1, max_value=8))
@settings(max_examples=200)
def test_archive_matches_brute_force(objectives, capacity):
    library = Library(make_task(), archive_capacity=capacity)
    inserted = []
    for i, obj in enumerate(objectives, start=1):
        record = make_record(i, obj)
        library.insert(record)
        inserted.append(record)
        assert list(library.elite_set(0)) == brute_force_archive(inserted, capacity)


@given(
    objectives=objectives,
    capacity=st.integers(min_value=1, max_value=6),
    window=st.integers(min_value=1, max_value=8),
)
@settings(max_examples=200)
def test_archive_subset_of_history_under_eviction(objectives, capacity, window):
    library = Library(
        make_task(), archive_capacity=capacity, memory_window=window
    )
    for i, obj in enumerate(objectives, start=1):
        library.insert(make_record(i, obj))
        history_ids = {r.solution_id for r in library.history(0)}
        archive_ids = {r.solution_id for r in library.elite_set(0)}
        assert archive_ids <= history_ids
        # Beyond pinned elites, at most window entries stay live.
        assert len(history_ids) <= max(window, capacity)


def test_window_keeps_recent_and_pinned():
    library = Library(make_task(), archive_capacity=2, memory_window=3)
    # Two strong early solutions become elites and must survive.
    library.insert(make_record(1, 10.0))
    library.insert(make_record(2, 9.0))
    for i in range(3, 8):
        library.insert(make_record(i, 1.0 + i * 0.01))
    history_ids = [r.solution_id for r in library.history(0)]
    assert 1 in history_ids and 2 in history_ids
    assert len(history_ids) == 3
    assert history_ids[-1] == 7


def test_five_inserts_window_four_leaves_four():
    library = Library(make_task(), archive_capacity=4, memory_window=4)
    for i in range(1, 6):
        library.insert(make_record(i, float(i)))
    assert len(library.history(0)) == 4


def test_insert_rejects_invalid_status():
    library = Library(make_task())
    with pytest.raises(LibraryError):
        library.insert(make_record(1, 2.0, status="compile_error"))


def test_insert_rejects_duplicate_id():
    library = Library(make_task())
    library.insert(make_record(1, 2.0))
    with pytest.raises(LibraryError):
        library.insert(make_record(1, 3.0))


def test_insert_rejects_bad_island():
    library = Library(make_task(), islands=2)
    with pytest.raises(LibraryError):
        library.insert(make_record(1, 2.0, island_index=2))


def test_islands_are_independent():
    library = Library(make_task(), islands=3)
    library.insert(make_record(1, 2.0, island_index=0))
    library.insert(make_record(2, 3.0, island_index=2))
    assert [r.solution_id for r in library.history(0)] == [1]
    assert [r.solution_id for r in library.history(2)] == [2]
    assert library.history(1) == ()


def test_best_ties_break_toward_earlier_id():
    library = Library(make_task())
    library.insert(make_record(1, 2.0))
    library.insert(make_record(2, 2.0))
    assert library.best().solution_id == 1


def test_best_falls_back_to_task_record():
    library = Library(make_task())
    best = library.best()
    assert best.solution_id == 0
    assert best.objective == 1.0
    assert best.code == library.task.source_code


def test_snapshot_is_stable_after_later_inserts():
    library = Library(make_task())
    library.insert(make_record(1, 2.0))
    snap = library.snapshot()
    library.insert(make_record(2, 3.0))
    assert [r.solution_id for r in snap.history(0)] == [1]
    assert [r.solution_id for r in library.history(0)] == [1, 2]


def test_snapshot_checks_island_bounds():
    library = Library(make_task(), islands=2)
    snap = library.snapshot()
    with pytest.raises(LibraryError):
        snap.history(5)


def test_allocate_id_is_monotone():
    library = Library(make_task())
    ids = [library.allocate_id() for _ in range(5)]
    assert ids == [1, 2, 3, 4, 5]


def test_record_validation():
    with pytest.raises(ValueError):
        make_record(1, -2.0)
    with pytest.raises(ValueError):
        make_record(1, 2.0, runtime_ms=0.0)
    with pytest.raises(ValueError):
        make_record(-1, 2.0)


def test_task_requires_positive_reference():
    with pytest.raises(ValueError):
        make_task(reference_runtime_ms=0.0)


def test_load_task_roundtrip(tmp_path):
    task_dir = tmp_path / "square"
    task_dir.mkdir()
    (task_dir / "task.yaml").write_text(
        "task_id: square\n"
        "level_tag: level-1\n"
        "reference_runtime_ms: 42.5\n"
        "entry_metadata:\n"
        "  model: Model\n"
        "  inputs: get_inputs\n",
        encoding="utf-8",
    )
    (task_dir / "model.py").write_text("print('hi')\n", encoding="utf-8")
    task = load_task(task_dir)
    assert task.task_id == "square"
    assert task.level_tag == "level-1"
    assert task.reference_runtime_ms == 42.5
    assert task.entry_metadata["model"] == "Model"
    assert task.source_code == "print('hi')\n"


def test_load_task_missing_manifest(tmp_path):
    with pytest.raises(LibraryError):
        load_task(tmp_path)


def test_load_task_missing_source(tmp_path):
    (tmp_path / "task.yaml").write_text("task_id: x\n", encoding="utf-8")
    with pytest.raises(LibraryError):
        load_task(tmp_path)


def test_constructor_validation():
    with pytest.raises(LibraryError):
        Library(make_task(), islands=0)
    with pytest.raises(LibraryError):
        Library(make_task(), archive_capacity=0)
    with pytest.raises(LibraryError):
        Library(make_task(), memory_window=0)
