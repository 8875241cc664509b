"""Planted-signal synthetic corpora with known ground truth.

A generated corpus has a vocabulary of pseudo-words, a set of positive and
negative "plant" tokens that shift a post's score by a fixed amount, a few
habitual bigrams, and an embedding table whose geometry mimics pretrained
vectors: every word shares a common mean direction, positive plants sit
far along it (salient words that the rest of a title attends to),
negative plants sit far in the opposite direction, and bigram partners
have strongly correlated vectors.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Post, PostCollection
from .text import EmbeddingTable, write_embeddings
from .corpus import write_posts

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"


@dataclass
class SynthConfig:
    n_posts: int = 5000
    vocab_size: int = 2000
    n_positive: int = 15
    n_negative: int = 15
    positive_tokens: list[str] | None = None
    negative_tokens: list[str] | None = None
    base_score: float = 40.0
    positive_effect: float = 120.0
    negative_effect: float = -34.0
    noise_sd: float = 4.0
    p_positive: float = 0.3
    p_negative: float = 0.3
    min_title_len: int = 4
    max_title_len: int = 12
    zipf_exponent: float = 0.8
    n_bigrams: int = 5
    p_bigram: float = 0.2
    bigram_correlation: float = 0.9
    dim: int = 300
    embedding_sd: float = 0.4
    common_component: float = 1.0
    salience: float = 12.0
    negative_salience: float = -12.0
    mean_gap_seconds: float = 60.0
    p_stickied: float = 0.01
    start_utc: int = 1483228800  # 2017-01-01
    subreddit: str = "synthetic"

    def __post_init__(self):
        if self.positive_tokens is not None and self.negative_tokens is not None:
            overlap = set(self.positive_tokens) & set(self.negative_tokens)
            if overlap:
                raise ValueError(f"plant sets overlap: {sorted(overlap)}")
        if self.min_title_len < 1 or self.max_title_len < self.min_title_len:
            raise ValueError("bad title length range")


@dataclass
class SynthCorpus:
    posts: PostCollection
    embeddings: EmbeddingTable
    positive: list[str]
    negative: list[str]
    bigrams: list[tuple[str, str]]
    effects: dict[str, float]
    config: SynthConfig
    seed: int
    plant_counts: np.ndarray = field(repr=False, default=None)  # (n_posts, n_plants)

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "positive": self.positive,
            "negative": self.negative,
            "bigrams": [list(b) for b in self.bigrams],
            "effects": self.effects,
            "base_score": self.config.base_score,
            "config": asdict(self.config),
        }


def _pseudo_words(n: int, rng: np.random.Generator, reserved: set[str]) -> list[str]:
    words, seen = [], set(reserved)
    while len(words) < n:
        syl = rng.integers(2, 4)
        w = "".join(CONSONANTS[rng.integers(len(CONSONANTS))] + VOWELS[rng.integers(len(VOWELS))]
                    for _ in range(syl))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def generate(cfg: SynthConfig | None = None, seed: int = 0) -> SynthCorpus:
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(seed)

    explicit = set(cfg.positive_tokens or []) | set(cfg.negative_tokens or [])
    vocab = list(cfg.positive_tokens or []) + list(cfg.negative_tokens or [])
    vocab += _pseudo_words(cfg.vocab_size - len(vocab), rng, explicit)
    rest = [w for w in vocab if w not in explicit]
    positive = list(cfg.positive_tokens) if cfg.positive_tokens is not None else rest[:cfg.n_positive]
    rest = [w for w in rest if w not in positive]
    negative = list(cfg.negative_tokens) if cfg.negative_tokens is not None else rest[:cfg.n_negative]
    rest = [w for w in rest if w not in negative]
    if len(rest) < 2 * cfg.n_bigrams + 1:
        raise ValueError("vocabulary too small for the requested plants and bigrams")
    bigrams = [(rest[2 * i], rest[2 * i + 1]) for i in range(cfg.n_bigrams)]
    filler = rest[2 * cfg.n_bigrams:]

    effects = {w: cfg.positive_effect for w in positive}
    effects.update({w: cfg.negative_effect for w in negative})

    # embeddings
    common = rng.normal(size=cfg.dim)
    common /= np.linalg.norm(common)
    vectors = {}
    for w in vocab:
        vectors[w] = rng.normal(0.0, cfg.embedding_sd, cfg.dim) + cfg.common_component * common
    for w in positive:
        vectors[w] = vectors[w] + cfg.salience * common
    for w in negative:
        vectors[w] = vectors[w] + cfg.negative_salience * common
    rho = cfg.bigram_correlation
    for a, b in bigrams:
        vectors[b] = rho * vectors[a] + np.sqrt(1 - rho ** 2) * vectors[b]
    table = EmbeddingTable(vocab, np.array([vectors[w] for w in vocab]))

    # titles
    ranks = np.arange(1, len(filler) + 1, dtype=np.float64)
    weights = ranks ** -cfg.zipf_exponent
    weights /= weights.sum()
    plants = positive + negative
    plant_col = {w: i for i, w in enumerate(plants)}
    counts = np.zeros((cfg.n_posts, len(plants)))

    posts = []
    t = float(cfg.start_utc)
    for i in range(cfg.n_posts):
        length = int(rng.integers(cfg.min_title_len, cfg.max_title_len + 1))
        words = list(rng.choice(filler, size=length, p=weights))
        inserts = []
        if positive and rng.random() < cfg.p_positive:
            inserts.append([positive[rng.integers(len(positive))]])
        if negative and rng.random() < cfg.p_negative:
            inserts.append([negative[rng.integers(len(negative))]])
        if bigrams and rng.random() < cfg.p_bigram:
            inserts.append(list(bigrams[rng.integers(len(bigrams))]))
        for chunk in inserts:
            pos = int(rng.integers(0, len(words) + 1))
            words[pos:pos] = chunk
        score = cfg.base_score + rng.normal(0.0, cfg.noise_sd)
        for w in words:
            if w in effects:
                score += effects[w]
                counts[i, plant_col[w]] += 1
        t += rng.exponential(cfg.mean_gap_seconds)
        title = " ".join(words)
        title = title[0].upper() + title[1:]
        posts.append(Post(
            id=f"syn{i:06d}",
            title=title,
            score=int(round(score)),
            subreddit=cfg.subreddit,
            created_utc=int(t),
            stickied=bool(rng.random() < cfg.p_stickied),
        ))
    return SynthCorpus(PostCollection(posts, cfg.subreddit), table, positive, negative,
                       bigrams, effects, cfg, seed, counts)


def write_corpus(corpus: SynthCorpus, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "posts": out_dir / "posts.jsonl",
        "embeddings": out_dir / "embeddings.txt",
        "plants": out_dir / "plants.json",
    }
    write_posts(corpus.posts, paths["posts"])
    write_embeddings(corpus.embeddings, paths["embeddings"])
    with open(paths["plants"], "w", encoding="utf-8") as fh:
        json.dump(corpus.manifest(), fh, indent=2, sort_keys=True)
    return paths
