"""Adversary construction: MovieLens-style rating logs and synthetic generators."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .core import AdversarySequence

# Standard MovieLens genre taxonomy, in canonical arm order.
MOVIELENS_GENRES = (
    "Action",
    "Adventure",
    "Animation",
    "Children",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "IMAX",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
)

NO_GENRES = "(no genres listed)"
REQUIRED_COLUMNS = ("userId", "movieId", "rating", "timestamp")
SYNTHETIC_KINDS = ("iid_uniform", "single_best_arm", "rotating_best_arm", "context_dependent_best")


class DataError(ValueError):
    """Raised when a ratings file cannot be turned into an adversary sequence."""


@dataclass(frozen=True)
class RatingEvent:
    user: str
    genres: FrozenSet[str]
    timestamp: int
    movie_id: int = -1
    rating: float = float("nan")

    def __post_init__(self):
        if not self.genres:
            raise DataError(f"rating event for user {self.user} has no genres")


@dataclass(frozen=True)
class CatalogMaps:
    user_to_context: Dict[str, int]
    genre_to_arm: Dict[str, int]

    @property
    def num_contexts(self) -> int:
        return len(self.user_to_context)

    @property
    def num_arms(self) -> int:
        return len(self.genre_to_arm)


def _split_genres(field: str) -> FrozenSet[str]:
    names = [g.strip() for g in field.split("|") if g.strip()]
    return frozenset(g for g in names if g != NO_GENRES)


def _read_movies(path) -> Dict[int, FrozenSet[str]]:
    movies, bad = {}, []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"movieId", "genres"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            try:
                movies[int(row["movieId"])] = _split_genres(row["genres"])
            except (TypeError, ValueError):
                bad.append(reader.line_num)
    if bad:
        raise DataError(f"{path}: unparseable rows at lines {bad}")
    return movies


def read_rating_events(path, movies_csv=None) -> List[RatingEvent]:
    """Parse a ratings CSV into events, in file order.

    Genres come from a pipe-separated ``genres`` column or, when
    ``movies_csv`` is given, from a join on ``movieId``.
    """
    movies = _read_movies(movies_csv) if movies_csv is not None else None
    events, bad, no_genre = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        needed = set(REQUIRED_COLUMNS) | ({"genres"} if movies is None else set())
        missing = needed - cols
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            try:
                movie = int(row["movieId"])
                ts = int(row["timestamp"])
                rating = float(row["rating"])
                user = row["userId"].strip()
                if not user:
                    raise ValueError("empty user id")
                if movies is not None:
                    genres = movies[movie]
                else:
                    genres = _split_genres(row["genres"])
            except (TypeError, ValueError, KeyError):
                bad.append(line)
                continue
            if not genres:
                no_genre.append(line)
                continue
            events.append(RatingEvent(user, genres, ts, movie, rating))
    if bad:
        raise DataError(f"{path}: unparseable rows at lines {bad}")
    if no_genre:
        raise DataError(f"{path}: rows without any genre at lines {no_genre}")
    return events


def events_to_sequence(
    events: Sequence[RatingEvent],
    delta: float,
    genres: Sequence[str] = MOVIELENS_GENRES,
) -> Tuple[AdversarySequence, CatalogMaps]:
    """Contexts are users in order of first appearance; the reward of genre
    ``i`` is 1 when the movie carries it and ``delta`` otherwise."""
    if not events:
        raise DataError("no rating events left to build a sequence from")
    genre_to_arm = {g: i for i, g in enumerate(genres)}
    user_to_context: Dict[str, int] = {}
    contexts = np.empty(len(events), dtype=np.int64)
    rewards = np.full((len(events), len(genres)), float(delta))
    for k, ev in enumerate(events):
        contexts[k] = user_to_context.setdefault(ev.user, len(user_to_context))
        try:
            rewards[k, [genre_to_arm[g] for g in ev.genres]] = 1.0
        except KeyError as exc:
            raise DataError(f"unknown genre {exc.args[0]!r} for user {ev.user}") from None
    seq = AdversarySequence(len(genres), len(user_to_context), contexts, rewards, delta)
    return seq, CatalogMaps(user_to_context, genre_to_arm)


def load_ratings_csv(
    path,
    limit_rows: Optional[int] = None,
    delta: float = 0.2,
    min_context_frequency: Optional[int] = None,
    movies_csv=None,
    genres: Sequence[str] = MOVIELENS_GENRES,
) -> Tuple[AdversarySequence, CatalogMaps]:
    """Build the genre-recommendation adversary from a ratings log.

    Rows are stably sorted by timestamp (ties keep file order) and truncated
    to ``limit_rows``. With ``min_context_frequency`` only users having at
    least that many rows in the whole file are kept, before truncation.
    """
    if not (0.0 < delta < 1.0):
        raise DataError(f"delta must lie in (0, 1), got {delta}")
    events = read_rating_events(path, movies_csv)
    if min_context_frequency is not None:
        counts = Counter(ev.user for ev in events)
        events = [ev for ev in events if counts[ev.user] >= min_context_frequency]
    events = sorted(events, key=lambda ev: ev.timestamp)
    if limit_rows is not None:
        events = events[:limit_rows]
    return events_to_sequence(events, delta, genres)


def empirical_context_distribution(seq: AdversarySequence) -> np.ndarray:
    """Relative frequency of each context over the whole sequence."""
    if seq.horizon == 0:
        raise ValueError("empty sequence has no context distribution")
    counts = np.bincount(seq.contexts, minlength=seq.num_contexts)
    return counts / seq.horizon


def gen_synthetic(kind: str, N: int, M: int, T: int, delta: float, seed: int) -> AdversarySequence:
    """Deterministic synthetic adversaries for tests and desk-scale experiments.

    ``iid_uniform``: uniform rewards on [delta, 1].
    ``single_best_arm``: arm 0 pays 1, every other arm pays delta.
    ``rotating_best_arm``: the paying arm advances every T // N rounds.
    ``context_dependent_best``: under context j arm j mod N pays 1, the rest
    draw uniformly from [delta, (1 + delta) / 2].
    Contexts are i.i.d. uniform over the M contexts in every kind.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")
    rng = np.random.default_rng(seed)
    contexts = rng.integers(0, M, size=T)
    if kind == "iid_uniform":
        rewards = rng.uniform(delta, 1.0, size=(T, N))
    elif kind == "single_best_arm":
        rewards = np.full((T, N), float(delta))
        rewards[:, 0] = 1.0
    elif kind == "rotating_best_arm":
        block = max(1, T // N)
        best = (np.arange(T) // block) % N
        rewards = np.full((T, N), float(delta))
        rewards[np.arange(T), best] = 1.0
    else:
        rewards = rng.uniform(delta, (1.0 + delta) / 2.0, size=(T, N))
        rewards[np.arange(T), contexts % N] = 1.0
    return AdversarySequence(N, M, contexts, rewards, delta)


def best_arms(seq: AdversarySequence) -> np.ndarray:
    """Index of the highest-paying arm in each round (lowest index on ties)."""
    return np.argmax(seq.rewards, axis=1)
