"""Loading and filtering post records, plus seeded subsampling.

Records are newline-delimited JSON objects using the field names of the
public Reddit submission dumps, so real dump files load unmodified.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "title", "score", "subreddit", "created_utc", "stickied")


class CorpusError(ValueError):
    """Raised on invalid collections and on strict-mode parse failures."""


@dataclass(frozen=True)
class Post:
    id: str
    title: str
    score: int
    subreddit: str
    created_utc: int
    stickied: bool = False

    def __post_init__(self):
        if not self.title.strip():
            raise CorpusError(f"post {self.id!r}: empty title")
        if self.created_utc <= 0:
            raise CorpusError(f"post {self.id!r}: created_utc must be positive")

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PostCollection:
    posts: tuple[Post, ...]
    subreddit: str
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "posts", tuple(self.posts))
        seen = set()
        for p in self.posts:
            if p.subreddit != self.subreddit:
                raise CorpusError(
                    f"post {p.id!r} belongs to {p.subreddit!r}, not {self.subreddit!r}"
                )
            if p.id in seen:
                raise CorpusError(f"duplicate post id {p.id!r}")
            seen.add(p.id)

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self) -> Iterator[Post]:
        return iter(self.posts)

    def __getitem__(self, i):
        return self.posts[i]


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.lower() in ("true", "false"):
        return value.lower() == "true"
    raise ValueError(f"not a boolean: {value!r}")


def parse_post_record(line: str) -> Post | None:
    """Parse one JSON record into a Post, or return None if it is unusable.

    Negative and low scores are kept; filtering is a separate step.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(obj, dict) or any(obj.get(k) is None for k in REQUIRED_FIELDS):
        return None
    try:
        score = obj["score"]
        created = obj["created_utc"]
        # dumps sometimes store these as strings or floats
        if isinstance(score, bool) or isinstance(created, bool):
            return None
        return Post(
            id=str(obj["id"]),
            title=str(obj["title"]),
            score=int(score),
            subreddit=str(obj["subreddit"]),
            created_utc=int(float(created)),
            stickied=_as_bool(obj["stickied"]),
        )
    except (ValueError, TypeError):
        return None


def iter_records(lines: Iterable[str], strict: bool = False):
    """Yield parsed posts from ``lines`` and return the skip count via StopIteration.

    Use :func:`parse_lines` unless streaming is needed.
    """
    skipped = 0
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        post = parse_post_record(line)
        if post is None:
            if strict:
                raise CorpusError(f"line {lineno}: malformed or incomplete record")
            skipped += 1
            continue
        yield post
    return skipped


def parse_lines(lines: Iterable[str], strict: bool = False) -> tuple[list[Post], int]:
    posts = []
    gen = iter_records(lines, strict=strict)
    while True:
        try:
            posts.append(next(gen))
        except StopIteration as stop:
            return posts, stop.value


def sort_chronological(posts: Iterable[Post]) -> list[Post]:
    return sorted(posts, key=lambda p: (p.created_utc, p.id))


def load_posts(
    path: str | Path,
    subreddit: str | None = None,
    strict: bool = False,
) -> PostCollection:
    """Read a record file into a chronologically sorted collection.

    If ``subreddit`` is given, records from other subreddits are ignored
    (case-insensitive match). Otherwise the file must be homogeneous.
    Duplicate ids keep the first occurrence and count as skips.
    """
    with open(path, encoding="utf-8") as fh:
        posts, skipped = parse_lines(fh, strict=strict)

    if subreddit is not None:
        wanted = subreddit.lower()
        posts = [p for p in posts if p.subreddit.lower() == wanted]
        posts = [p if p.subreddit == subreddit else _retag(p, subreddit) for p in posts]
    else:
        tags = {p.subreddit for p in posts}
        if len(tags) > 1:
            raise CorpusError(f"{path}: mixed subreddits {sorted(tags)}; pass subreddit=")
        subreddit = tags.pop() if tags else ""

    unique, seen = [], set()
    for p in posts:
        if p.id in seen:
            skipped += 1
            continue
        seen.add(p.id)
        unique.append(p)

    if skipped:
        logger.warning("%s: skipped %d unusable records", path, skipped)
    return PostCollection(sort_chronological(unique), subreddit, skipped=skipped)


def _retag(p: Post, subreddit: str) -> Post:
    return Post(p.id, p.title, p.score, subreddit, p.created_utc, p.stickied)


def write_posts(posts: Iterable[Post], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in posts:
            fh.write(json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def filter_posts(
    c: PostCollection, min_score: int = 2, exclude_stickied: bool = True
) -> PostCollection:
    """Drop low-scoring posts and (by default) moderator-pinned ones."""
    kept = [
        p
        for p in c.posts
        if p.score >= min_score and not (exclude_stickied and p.stickied)
    ]
    return PostCollection(kept, c.subreddit)


def subsample(c: PostCollection, fraction: float, seed: int) -> PostCollection:
    """Uniform sample without replacement of ``round(fraction * len(c))`` posts."""
    if not 0.0 < fraction <= 1.0:
        raise CorpusError(f"sample fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return c
    n_keep = int(round(fraction * len(c)))
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(c), size=n_keep, replace=False) if n_keep else []
    picked = [c.posts[i] for i in idx]
    return PostCollection(sort_chronological(picked), c.subreddit)
