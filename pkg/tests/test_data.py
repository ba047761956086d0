import re
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphafair.core import AdversarySequence
from alphafair.data import (
    MOVIELENS_GENRES,
    DataError,
    RatingEvent,
    best_arms,
    empirical_context_distribution,
    gen_synthetic,
    load_ratings_csv,
    read_rating_events,
)

FIXTURES = Path(__file__).parent / "fixtures"

# Counted by hand from the fixture file: 9 distinct users, all 19 genres present;
# 3 users have at least 7 rows, covering 22 rows.
FIXTURE50_M, FIXTURE50_N = 9, 19
FIXTURE50_FREQ7_M, FIXTURE50_FREQ7_ROWS = 3, 22


def test_three_row_fixture():
    seq, maps = load_ratings_csv(FIXTURES / "three_rows.csv", delta=0.2, genres=("A", "B"))
    np.testing.assert_array_equal(seq.contexts, [0, 0, 0])
    np.testing.assert_array_equal(seq.rewards, [[1, 0.2], [0.2, 1], [1, 1]])
    assert maps.user_to_context == {"7": 0}
    assert maps.genre_to_arm == {"A": 0, "B": 1}


def test_fifty_row_fixture_counts():
    seq, maps = load_ratings_csv(FIXTURES / "ratings50.csv", limit_rows=5000)
    assert (seq.num_contexts, seq.num_arms, seq.horizon) == (FIXTURE50_M, FIXTURE50_N, 50)
    assert int((seq.rewards == 1.0).any(axis=0).sum()) == FIXTURE50_N
    assert sorted(maps.user_to_context.values()) == list(range(FIXTURE50_M))
    assert np.all(np.diff([e.timestamp for e in sorted(
        read_rating_events(FIXTURES / "ratings50.csv"), key=lambda e: e.timestamp)]) >= 0)


def test_frequency_filter_before_truncation():
    seq, _ = load_ratings_csv(FIXTURES / "ratings50.csv", min_context_frequency=7)
    assert (seq.num_contexts, seq.horizon) == (FIXTURE50_FREQ7_M, FIXTURE50_FREQ7_ROWS)
    seq, _ = load_ratings_csv(FIXTURES / "ratings50.csv", min_context_frequency=7, limit_rows=10)
    assert seq.horizon == 10


def test_movies_join_matches_inline_genres():
    inline, _ = load_ratings_csv(FIXTURES / "ratings50.csv")
    joined, _ = load_ratings_csv(FIXTURES / "ratings50_nogenres.csv",
                                 movies_csv=FIXTURES / "movies.csv")
    np.testing.assert_array_equal(inline.contexts, joined.contexts)
    np.testing.assert_array_equal(inline.rewards, joined.rewards)


def test_duplicate_timestamps_keep_file_order():
    seq, maps = load_ratings_csv(FIXTURES / "ties.csv", genres=("A", "B"))
    assert list(maps.user_to_context) == ["2", "4", "5", "1", "3"]
    np.testing.assert_array_equal(seq.contexts, [0, 1, 2, 3, 4])
    np.testing.assert_array_equal(
        seq.rewards, [[0.2, 1], [1, 1], [1, 0.2], [1, 0.2], [0.2, 1]])


def test_all_genres_gives_ones(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("userId,movieId,rating,timestamp,genres\n1,1,3,5," + "|".join(MOVIELENS_GENRES) + "\n")
    seq, _ = load_ratings_csv(path)
    np.testing.assert_array_equal(seq.rewards, np.ones((1, 19)))


@pytest.mark.parametrize("body, message", [
    ("userId,movieId,rating\n1,1,3\n", "missing columns"),
    ("userId,movieId,rating,timestamp,genres\n1,1,3,5,Polka\n", "unknown genre"),
    ("userId,movieId,rating,timestamp,genres\n1,x,3,5,Action\n1,1,3,y,Action\n", "lines [2, 3]"),
    ("userId,movieId,rating,timestamp,genres\n1,1,3,5,(no genres listed)\n", "without any genre"),
    ("userId,movieId,rating,timestamp,genres\n", "no rating events"),
])
def test_ingestion_errors(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataError, match=re.escape(message)):
        load_ratings_csv(path)


def test_delta_range_checked():
    with pytest.raises(DataError):
        load_ratings_csv(FIXTURES / "three_rows.csv", delta=1.0, genres=("A", "B"))


def test_rating_event_needs_genres():
    with pytest.raises(DataError):
        RatingEvent("u", frozenset(), 0)


def test_empirical_context_distribution():
    seq = AdversarySequence(2, 2, [0, 0, 1, 1], np.ones((4, 2)), 0.2)
    np.testing.assert_allclose(empirical_context_distribution(seq), [0.5, 0.5])
    seq = AdversarySequence(2, 1, [0, 0, 0], np.ones((3, 2)), 0.2)
    np.testing.assert_allclose(empirical_context_distribution(seq), [1.0])
    seq = gen_synthetic("iid_uniform", 2, 5, 1000, 0.2, 17)
    counts = [sum(1 for c in seq.contexts if c == j) / 1000 for j in range(5)]
    np.testing.assert_array_equal(empirical_context_distribution(seq), counts)


def test_synthetic_examples():
    seq = gen_synthetic("single_best_arm", 2, 1, 3, 0.2, 0)
    np.testing.assert_array_equal(seq.rewards, [[1, 0.2]] * 3)
    np.testing.assert_array_equal(best_arms(gen_synthetic("rotating_best_arm", 2, 1, 4, 0.2, 0)),
                                  [0, 0, 1, 1])
    a = gen_synthetic("iid_uniform", 3, 2, 30, 0.2, 5)
    b = gen_synthetic("iid_uniform", 3, 2, 30, 0.2, 5)
    np.testing.assert_array_equal(a.rewards, b.rewards)
    np.testing.assert_array_equal(a.contexts, b.contexts)
    with pytest.raises(ValueError):
        gen_synthetic("nope", 2, 1, 3, 0.2, 0)


@settings(max_examples=30)
@given(st.sampled_from(["iid_uniform", "single_best_arm", "rotating_best_arm", "context_dependent_best"]),
       st.integers(1, 6), st.integers(1, 5), st.integers(1, 200), st.floats(0.05, 0.9), st.integers(0, 2**31))
def test_synthetic_ranges(kind, N, M, T, delta, seed):
    seq = gen_synthetic(kind, N, M, T, delta, seed)
    assert np.all(seq.rewards >= delta) and np.all(seq.rewards <= 1.0)
    assert np.all((seq.contexts >= 0) & (seq.contexts < M))
    if kind == "context_dependent_best":
        np.testing.assert_array_equal(seq.rewards[np.arange(T), seq.contexts % N], 1.0)
