"""Time-controlled (winner, loser) pairing of posts within one subreddit."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import Post, PostCollection, sort_chronological


@dataclass(frozen=True)
class PairingConfig:
    max_gap_seconds: int = 1800
    min_score_diff: int = 20
    min_score_ratio: float = 2.0

    def __post_init__(self):
        if self.max_gap_seconds <= 0 or self.min_score_diff <= 0 or self.min_score_ratio <= 0:
            raise ValueError(f"pairing thresholds must be strictly positive: {self}")


@dataclass(frozen=True)
class PostPair:
    winner: Post
    loser: Post

    def to_record(self) -> dict:
        w, l = self.winner, self.loser
        return {
            "winner_id": w.id,
            "loser_id": l.id,
            "subreddit": w.subreddit,
            "winner_title": w.title,
            "loser_title": l.title,
            "winner_score": w.score,
            "loser_score": l.score,
            "winner_created_utc": w.created_utc,
            "loser_created_utc": l.created_utc,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "PostPair":
        sub = rec["subreddit"]
        winner = Post(rec["winner_id"], rec["winner_title"], int(rec["winner_score"]),
                      sub, int(rec["winner_created_utc"]))
        loser = Post(rec["loser_id"], rec["loser_title"], int(rec["loser_score"]),
                     sub, int(rec["loser_created_utc"]))
        return cls(winner, loser)


def validate_pair(a: Post, b: Post, cfg: PairingConfig = PairingConfig()) -> bool:
    if a.subreddit != b.subreddit:
        raise ValueError(f"cannot pair across subreddits: {a.subreddit!r} vs {b.subreddit!r}")
    winner, loser = (a, b) if a.score >= b.score else (b, a)
    # a loser below 1 makes the ratio test vacuous; the corpus filter already implies >= 1
    return (
        winner.score > loser.score
        and loser.score >= 1
        and abs(winner.created_utc - loser.created_utc) <= cfg.max_gap_seconds
        and winner.score - loser.score >= cfg.min_score_diff
        and winner.score >= cfg.min_score_ratio * loser.score
    )


def make_pair(a: Post, b: Post) -> PostPair:
    return PostPair(a, b) if a.score > b.score else PostPair(b, a)


def pair_posts(c: PostCollection | Iterable[Post], cfg: PairingConfig = PairingConfig()) -> list[PostPair]:
    """Greedy single pass over posts in time order.

    Each unpaired post is matched with the earliest later unpaired post that
    lies within ``max_gap_seconds`` and passes :func:`validate_pair`. Every
    post is used at most once.
    """
    posts = sort_chronological(c)
    n = len(posts)
    used = [False] * n
    pairs = []
    for i in range(n):
        if used[i]:
            continue
        p = posts[i]
        for j in range(i + 1, n):
            q = posts[j]
            if q.created_utc - p.created_utc > cfg.max_gap_seconds:
                break
            if not used[j] and validate_pair(p, q, cfg):
                used[i] = used[j] = True
                pairs.append(make_pair(p, q))
                break
    return pairs


def write_pairs(pairs: Iterable[PostPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_pairs(path: str | Path) -> list[PostPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                pairs.append(PostPair.from_record(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad pair record ({exc})") from exc
    return pairs
